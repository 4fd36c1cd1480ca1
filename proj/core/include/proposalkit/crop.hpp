#pragma once

#include "proposalkit/geometry.hpp"

namespace proposalkit {

/// Second-stage crop geometry: margin-expanded boxes resized onto a fixed
/// patch, aspect ratio intentionally not preserved.
struct CropSpec {
  double margin = 20.0;  // pixels added on every side
  int patch_width = 512;
  int patch_height = 512;

  bool operator==(const CropSpec&) const = default;
};

struct CropTransform {
  Box crop;          // crop window in image coordinates
  double sx = 1.0;   // patch_width / crop width
  double sy = 1.0;   // patch_height / crop height
};

/// Grows `box` by spec.margin on each side, clips to the image, and
/// computes the image-to-patch scales. Throws when the clipped crop has no
/// area.
CropTransform expand(const Box& box, const CropSpec& spec,
                     const ImageSize& img);

inline Point to_patch(const Point& p, const CropTransform& t) {
  return Point{(p.x - t.crop.x1) * t.sx, (p.y - t.crop.y1) * t.sy};
}

inline Point to_image(const Point& p, const CropTransform& t) {
  return Point{p.x / t.sx + t.crop.x1, p.y / t.sy + t.crop.y1};
}

}  // namespace proposalkit
