#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "proposalkit/eval.hpp"

namespace proposalkit {

/// Raised on malformed input files; messages carry file, line, and field
/// context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact corner <-> COCO (x, y, w, h) conversion: x2 = x + w.
Box bbox_to_box(double x, double y, double w, double h);
std::array<double, 4> box_to_bbox(const Box& box);

/// COCO-format ground truth: `images` [id, width, height], `annotations`
/// [id, image_id, bbox, iscrowd]; categories are accepted and ignored.
GtDataset load_coco_gt(const std::string& path);
GtDataset parse_coco_gt(const std::string& text, const std::string& name);

/// COCO results array: {image_id, bbox, score}; category_id accepted and
/// ignored (everything is class-agnostic).
std::vector<Detection> load_coco_detections(const std::string& path);
std::vector<Detection> parse_coco_detections(const std::string& text,
                                             const std::string& name);

void save_coco_gt(const std::string& path, const GtDataset& gt);
void save_coco_detections(const std::string& path,
                          std::span<const Detection> dets);

}  // namespace proposalkit
