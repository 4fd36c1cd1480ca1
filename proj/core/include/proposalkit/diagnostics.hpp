#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "proposalkit/assignment.hpp"

namespace proposalkit {

/// Per-image summary of a dual assignment: positive counts per GT and the
/// overlap between the two heads' positive anchor sets.
struct ImageAssignDiagnostics {
  std::int64_t image_id = 0;
  std::vector<std::int64_t> gt_ids;
  std::vector<int> cls_positives_per_gt;
  std::vector<int> reg_positives_per_gt;
  std::vector<std::int64_t> cls_unassigned_gt_ids;
  std::vector<std::int64_t> reg_unassigned_gt_ids;
  std::size_t cls_positive_anchors = 0;
  std::size_t reg_positive_anchors = 0;
  std::size_t overlap_anchors = 0;  // anchors positive for both heads
};

struct AssignDiagnostics {
  std::vector<ImageAssignDiagnostics> images;
  std::size_t total_cls_positives = 0;
  std::size_t total_reg_positives = 0;
  std::size_t total_overlap = 0;
  /// |positives(cls) ∩ positives(reg)| / |positives(cls)|; 1 when cls has
  /// no positives.
  double overlap_fraction = 1.0;
  bool subset_holds = true;  // positives(cls) ⊆ positives(reg) everywhere
  std::vector<std::string> warnings;

  std::string to_json() const;
};

ImageAssignDiagnostics diagnose_image(const DualAssignment& dual,
                                      std::span<const std::int64_t> gt_ids,
                                      std::int64_t image_id);

/// Folds per-image summaries into dataset totals.
AssignDiagnostics aggregate_diagnostics(
    std::vector<ImageAssignDiagnostics> images,
    std::vector<std::string> warnings);

}  // namespace proposalkit
