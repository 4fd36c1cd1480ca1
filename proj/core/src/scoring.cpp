#include "proposalkit/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "proposalkit/assignment.hpp"

namespace proposalkit {

namespace {
constexpr double kProbEps = 1e-7;
}

double focal_loss(double p, bool target, const FocalParams& params) {
  if (!(params.alpha > 0.0 && params.alpha <= 1.0)) {
    throw std::invalid_argument("focal alpha must be in (0, 1]");
  }
  if (!(params.gamma >= 0.0)) {
    throw std::invalid_argument("focal gamma must be non-negative");
  }
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw std::invalid_argument("focal probability must lie in [0, 1]");
  }
  p = std::clamp(p, kProbEps, 1.0 - kProbEps);
  const double p_t = target ? p : 1.0 - p;
  const double alpha_t = target ? params.alpha : 1.0 - params.alpha;
  return -alpha_t * std::pow(1.0 - p_t, params.gamma) * std::log(p_t);
}

double giou_loss(const Box& pred, const Box& target) {
  return 1.0 - giou(pred, target);
}

std::vector<double> iou_targets(std::span<const Box> pred_boxes,
                                const Assignment& assignment,
                                std::span<const Box> gts) {
  if (assignment.labels.size() != pred_boxes.size()) {
    throw std::invalid_argument(
        "iou_targets: assignment and predictions must have equal length");
  }
  std::vector<double> targets(pred_boxes.size(), 0.0);
  for (std::size_t a = 0; a < pred_boxes.size(); ++a) {
    const int label = assignment.labels[a];
    if (label < 0) continue;
    if (static_cast<std::size_t>(label) >= gts.size()) {
      throw std::invalid_argument("iou_targets: assignment references a GT "
                                  "index outside the given list");
    }
    targets[a] = iou(pred_boxes[a], gts[static_cast<std::size_t>(label)]);
  }
  return targets;
}

double fuse_scores(double cls_score, double iou_score) {
  if (!std::isfinite(cls_score) || cls_score < 0.0 || cls_score > 1.0 ||
      !std::isfinite(iou_score) || iou_score < 0.0 || iou_score > 1.0) {
    throw std::invalid_argument("fuse_scores inputs must lie in [0, 1]");
  }
  return std::sqrt(cls_score * iou_score);
}

}  // namespace proposalkit
