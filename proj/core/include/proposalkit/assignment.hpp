#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "proposalkit/anchors.hpp"
#include "proposalkit/geometry.hpp"
#include "proposalkit/matrix.hpp"

namespace proposalkit {

enum class AssignMode { kMaxIou, kOta, kSimOta };

enum class CenterPrior {
  kShrunkBox,     // anchor center inside the GT box shrunk by center_ratio
  kStrideRadius,  // anchor center within stride_radius * stride of GT center
};

struct SamplerConfig {
  double center_ratio = 0.25;  // in (0, 1]
  int top_k = 10;              // candidate pool size, >= 1
  double reg_weight = 3.0;     // lambda applied to the -ln(IoU) term
  AssignMode mode = AssignMode::kSimOta;
  bool dynamic_k = true;       // false: fixed top_k selection per GT
  CenterPrior center_prior = CenterPrior::kShrunkBox;
  double stride_radius = 2.5;  // used by kStrideRadius only

  // max-IoU mode
  double pos_iou_thr = 0.7;
  double neg_iou_thr = 0.3;

  // OTA mode (Sinkhorn reference assigner)
  double ota_eps = 0.1;
  int ota_max_iter = 500;

  bool operator==(const SamplerConfig&) const = default;
};

/// Throws std::invalid_argument if a field violates its range.
void validate(const SamplerConfig& cfg);

/// Per-pair assignment costs, rows = ground-truth boxes, columns = anchors.
/// cost = BCE(score, 1) + reg_weight * max(0, -ln(IoU + 1e-8)), plus
/// kOutOfRegionPenalty for anchors outside the GT's center region. The raw
/// IoU matrix and both candidate masks are kept alongside for the samplers.
struct CostMatrix {
  std::size_t num_gts = 0;
  std::size_t num_anchors = 0;
  MatD cost;
  MatD iou;
  Mat<std::uint8_t> in_region;  // center-prior candidates
  Mat<std::uint8_t> in_box;     // anchor center inside the GT box (fallback)
  std::vector<double> bg_cost;  // per-anchor background cost, OTA mode only
};

extern const double kOutOfRegionPenalty;  // 1e5

/// Anchor labels. Values >= 0 index a GT; kNegativeLabel marks background;
/// kIgnoreLabel is produced only by the max-IoU assigner for anchors between
/// its thresholds.
constexpr int kNegativeLabel = -1;
constexpr int kIgnoreLabel = -2;

struct Assignment {
  std::vector<int> labels;
  std::vector<int> positives_per_gt;
  std::vector<int> unassigned_gts;  // GTs that ended with zero positives

  std::size_t num_positives() const;
};

/// Independent assignments for the classification and regression heads.
struct DualAssignment {
  Assignment cls;
  Assignment reg;
  std::vector<std::string> warnings;
};

CostMatrix build_costs(const AnchorSet& anchors, std::span<const Box> gts,
                       std::span<const double> cls_scores,
                       std::span<const Box> pred_boxes,
                       const SamplerConfig& cfg, int threads = 1);

/// True iff the anchor center lies inside `gt` shrunk about its center by
/// `center_ratio`.
std::vector<std::uint8_t> center_region_mask(const AnchorSet& anchors,
                                             const Box& gt,
                                             double center_ratio);

/// Baseline assigner: an anchor is positive for its argmax GT when the max
/// IoU >= pos_thr, negative below neg_thr, ignored in between. Each GT's
/// best anchor (ties to the lowest index) is forced positive when its IoU
/// is > 0; GTs are processed in index order and later GTs win the forced
/// slot.
Assignment assign_max_iou(const MatD& ious, double pos_thr = 0.7,
                          double neg_thr = 0.3);

struct SinkhornResult {
  MatD plan;
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
};

/// Entropic-regularized optimal transport via log-domain Sinkhorn-Knopp.
/// Supply and demand must be non-negative and balanced within 1e-9; costs
/// must be finite. Iterates until the worst row/column marginal violation
/// drops below `tol` or `max_iter` rounds elapse.
SinkhornResult sinkhorn(const MatD& cost, std::span<const double> supply,
                        std::span<const double> demand, double eps,
                        int max_iter, double tol = 1e-6);

/// SimOTA: per GT, dynamic k = max(1, floor(sum of the top-`top_k`
/// candidate IoUs)) capped at the candidate count, then the k lowest-cost
/// candidates become positive. Anchors claimed by several GTs keep the
/// min-cost one. GTs whose center region is empty fall back to the full-box
/// mask; ties break toward the lowest index everywhere.
Assignment assign_simota(const CostMatrix& cost, const SamplerConfig& cfg);

/// Reference assigner that solves the transport problem exactly: one
/// supplier per GT (capacity = dynamic k) plus a background supplier, unit
/// demand per anchor, decoded by per-anchor argmax plan mass.
Assignment assign_ota(const CostMatrix& cost, const SamplerConfig& cfg);

/// Runs the configured assigner once per head over shared IoUs. Warns (in
/// DualAssignment::warnings) when cls top_k exceeds reg top_k.
DualAssignment assign_dual(const AnchorSet& anchors, std::span<const Box> gts,
                           std::span<const double> cls_scores,
                           std::span<const Box> pred_boxes,
                           const SamplerConfig& cls_cfg,
                           const SamplerConfig& reg_cfg, int threads = 1);

}  // namespace proposalkit
