#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "proposalkit/geometry.hpp"

namespace proposalkit {

/// One square anchor per feature-map cell, across a pyramid of strides.
/// Anchor side = stride * base_scale; anchors are not clipped to the image.
struct PyramidSpec {
  std::vector<int> strides;  // strictly increasing, pixels per cell
  double base_scale = 8.0;
  ImageSize image;

  bool operator==(const PyramidSpec&) const = default;
};

struct AnchorCenter {
  double x = 0.0;
  double y = 0.0;
  int stride = 0;
};

class AnchorSet {
 public:
  struct Level {
    int stride = 0;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;  // first global index of this level
    double anchor_side = 0.0;
  };

  /// Deterministic grid: the anchor at cell (i, j) of a level with stride s
  /// is the square of side s * base_scale centered at ((j+0.5)s, (i+0.5)s).
  /// Cells are laid out row-major per level, levels concatenated in stride
  /// order.
  static AnchorSet generate(const PyramidSpec& spec);

  std::size_t size() const { return boxes_.size(); }
  bool empty() const { return boxes_.empty(); }

  const Box& box(std::size_t i) const { return boxes_[i]; }
  const std::vector<Box>& boxes() const { return boxes_; }

  int stride(std::size_t i) const { return strides_[i]; }

  AnchorCenter center(std::size_t i) const {
    const Box& b = boxes_[i];
    return AnchorCenter{b.center_x(), b.center_y(), strides_[i]};
  }

  /// All centers in global-index order.
  std::vector<AnchorCenter> centers() const;

  const std::vector<Level>& levels() const { return levels_; }
  const ImageSize& image() const { return image_; }

 private:
  std::vector<Box> boxes_;
  std::vector<std::int32_t> strides_;
  std::vector<Level> levels_;
  ImageSize image_;
};

/// Centers in global-index order; length equals the total anchor count.
inline std::vector<AnchorCenter> anchor_centers(const AnchorSet& set) {
  return set.centers();
}

}  // namespace proposalkit
