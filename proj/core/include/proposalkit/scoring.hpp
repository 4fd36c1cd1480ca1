#pragma once

#include <span>
#include <vector>

#include "proposalkit/geometry.hpp"

namespace proposalkit {

struct Assignment;  // assignment.hpp

struct FocalParams {
  double alpha = 0.25;  // in (0, 1]
  double gamma = 2.0;   // >= 0

  bool operator==(const FocalParams&) const = default;
};

/// -alpha_t (1 - p_t)^gamma ln(p_t) with p_t = p for target true and 1 - p
/// otherwise; alpha_t likewise. p is clamped into [1e-7, 1 - 1e-7]; values
/// outside [0, 1] throw.
double focal_loss(double p, bool target, const FocalParams& params = {});

/// 1 - giou(pred, target), in [0, 2]. Throws for degenerate boxes.
double giou_loss(const Box& pred, const Box& target);

/// IoU regression targets: IoU(pred, assigned GT) for positive anchors, 0
/// for the rest. Throws if the assignment references a GT index outside
/// `gts` or if sizes disagree.
std::vector<double> iou_targets(std::span<const Box> pred_boxes,
                                const Assignment& assignment,
                                std::span<const Box> gts);

/// Geometric mean of the classification and predicted-IoU scores.
double fuse_scores(double cls_score, double iou_score);

}  // namespace proposalkit
