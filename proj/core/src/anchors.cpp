#include "proposalkit/anchors.hpp"

#include <stdexcept>

namespace proposalkit {

AnchorSet AnchorSet::generate(const PyramidSpec& spec) {
  if (spec.base_scale <= 0.0) {
    throw std::invalid_argument("pyramid base_scale must be positive");
  }
  for (std::size_t i = 0; i < spec.strides.size(); ++i) {
    if (spec.strides[i] <= 0) {
      throw std::invalid_argument("pyramid strides must be positive");
    }
    if (i > 0 && spec.strides[i] <= spec.strides[i - 1]) {
      throw std::invalid_argument("pyramid strides must be strictly increasing");
    }
  }
  validate_image_size(spec.image);

  AnchorSet set;
  set.image_ = spec.image;
  std::size_t total = 0;
  for (int s : spec.strides) {
    const int rows = (spec.image.height + s - 1) / s;
    const int cols = (spec.image.width + s - 1) / s;
    total += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  set.boxes_.reserve(total);
  set.strides_.reserve(total);
  set.levels_.reserve(spec.strides.size());

  for (int s : spec.strides) {
    const int rows = (spec.image.height + s - 1) / s;
    const int cols = (spec.image.width + s - 1) / s;
    const double side = s * spec.base_scale;
    const double half = 0.5 * side;
    set.levels_.push_back(Level{s, rows, cols, set.boxes_.size(), side});
    for (int i = 0; i < rows; ++i) {
      const double cy = (i + 0.5) * s;
      for (int j = 0; j < cols; ++j) {
        const double cx = (j + 0.5) * s;
        set.boxes_.emplace_back(cx - half, cy - half, cx + half, cy + half);
        set.strides_.push_back(s);
      }
    }
  }
  return set;
}

std::vector<AnchorCenter> AnchorSet::centers() const {
  std::vector<AnchorCenter> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(center(i));
  return out;
}

}  // namespace proposalkit
