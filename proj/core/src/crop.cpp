#include "proposalkit/crop.hpp"

#include <stdexcept>

namespace proposalkit {

CropTransform expand(const Box& box, const CropSpec& spec,
                     const ImageSize& img) {
  if (spec.margin < 0.0) {
    throw std::invalid_argument("crop margin must be non-negative");
  }
  if (spec.patch_width < 1 || spec.patch_height < 1) {
    throw std::invalid_argument("patch dimensions must be >= 1");
  }
  validate_image_size(img);

  const Box grown(box.x1 - spec.margin, box.y1 - spec.margin,
                  box.x2 + spec.margin, box.y2 + spec.margin);
  const Box crop = clip(grown, img);
  if (crop.width() <= 0.0 || crop.height() <= 0.0) {
    throw std::invalid_argument("expanded crop has no area inside the image");
  }
  return CropTransform{crop, spec.patch_width / crop.width(),
                       spec.patch_height / crop.height()};
}

}  // namespace proposalkit
