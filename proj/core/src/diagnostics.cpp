#include "proposalkit/diagnostics.hpp"

#include <stdexcept>

#include <json.hpp>

namespace proposalkit {

ImageAssignDiagnostics diagnose_image(const DualAssignment& dual,
                                      std::span<const std::int64_t> gt_ids,
                                      std::int64_t image_id) {
  if (dual.cls.labels.size() != dual.reg.labels.size()) {
    throw std::invalid_argument("dual assignment heads disagree on anchors");
  }
  if (gt_ids.size() != dual.cls.positives_per_gt.size()) {
    throw std::invalid_argument("gt_ids must align with the assignment");
  }

  ImageAssignDiagnostics out;
  out.image_id = image_id;
  out.gt_ids.assign(gt_ids.begin(), gt_ids.end());
  out.cls_positives_per_gt = dual.cls.positives_per_gt;
  out.reg_positives_per_gt = dual.reg.positives_per_gt;
  for (int g : dual.cls.unassigned_gts) {
    out.cls_unassigned_gt_ids.push_back(gt_ids[static_cast<std::size_t>(g)]);
  }
  for (int g : dual.reg.unassigned_gts) {
    out.reg_unassigned_gt_ids.push_back(gt_ids[static_cast<std::size_t>(g)]);
  }
  for (std::size_t a = 0; a < dual.cls.labels.size(); ++a) {
    const bool cls_pos = dual.cls.labels[a] >= 0;
    const bool reg_pos = dual.reg.labels[a] >= 0;
    out.cls_positive_anchors += cls_pos;
    out.reg_positive_anchors += reg_pos;
    out.overlap_anchors += cls_pos && reg_pos;
  }
  return out;
}

AssignDiagnostics aggregate_diagnostics(
    std::vector<ImageAssignDiagnostics> images,
    std::vector<std::string> warnings) {
  AssignDiagnostics out;
  out.images = std::move(images);
  out.warnings = std::move(warnings);
  for (const ImageAssignDiagnostics& im : out.images) {
    out.total_cls_positives += im.cls_positive_anchors;
    out.total_reg_positives += im.reg_positive_anchors;
    out.total_overlap += im.overlap_anchors;
  }
  out.overlap_fraction =
      out.total_cls_positives == 0
          ? 1.0
          : static_cast<double>(out.total_overlap) /
                static_cast<double>(out.total_cls_positives);
  out.subset_holds = out.total_overlap == out.total_cls_positives;
  return out;
}

std::string AssignDiagnostics::to_json() const {
  nlohmann::json j;
  nlohmann::json arr = nlohmann::json::array();
  for (const ImageAssignDiagnostics& im : images) {
    const double image_overlap =
        im.cls_positive_anchors == 0
            ? 1.0
            : static_cast<double>(im.overlap_anchors) /
                  static_cast<double>(im.cls_positive_anchors);
    arr.push_back({{"image_id", im.image_id},
                   {"gt_ids", im.gt_ids},
                   {"cls_positives_per_gt", im.cls_positives_per_gt},
                   {"reg_positives_per_gt", im.reg_positives_per_gt},
                   {"cls_unassigned_gt_ids", im.cls_unassigned_gt_ids},
                   {"reg_unassigned_gt_ids", im.reg_unassigned_gt_ids},
                   {"cls_positive_anchors", im.cls_positive_anchors},
                   {"reg_positive_anchors", im.reg_positive_anchors},
                   {"overlap_anchors", im.overlap_anchors},
                   {"overlap_fraction", image_overlap}});
  }
  j["images"] = arr;
  j["total"] = {{"cls_positive_anchors", total_cls_positives},
                {"reg_positive_anchors", total_reg_positives},
                {"overlap_anchors", total_overlap},
                {"overlap_fraction", overlap_fraction},
                {"subset_holds", subset_holds}};
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

}  // namespace proposalkit
