#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "proposalkit/anchors.hpp"
#include "proposalkit/geometry.hpp"

namespace proposalkit {

struct Detection {
  Box box;
  double score = 0.0;
  std::optional<double> iou_score;  // IoU-branch output, when present
  std::int64_t image_id = 0;

  bool operator==(const Detection&) const = default;
};

/// Greedy NMS: walk detections in descending score (ties to the lower
/// original index) and keep a box iff its IoU with every kept box is
/// <= iou_thr. Returns the kept detections, score-descending.
std::vector<Detection> nms(std::span<const Detection> dets,
                           double iou_thr = 0.8);

/// The k highest-score detections, score-descending with stable ties; all
/// of them when fewer than k. k must be >= 0.
std::vector<Detection> topk_proposals(std::span<const Detection> dets, int k);

/// One cascade stage: per input box, a refinement delta and an objectness
/// score. Implementations close over whatever features they need.
struct StageOutput {
  BoxDelta delta;
  double score = 0.0;
};
using StageRefiner =
    std::function<std::vector<StageOutput>(std::span<const Box>)>;

/// Chains refinement stages: stage i decodes its deltas against stage
/// i-1's boxes (stage 0 against the anchors). Scores come from the last
/// stage; final boxes are clipped to the image. Throws when a stage returns
/// the wrong number of outputs or when no stages are given.
std::vector<Detection> cascade_refine(const AnchorSet& anchors,
                                      std::span<const StageRefiner> stages,
                                      const ImageSize& img);

/// Flip test-time augmentation merge: maps `flipped` (given in
/// flipped-image coordinates) back through hflip, concatenates after the
/// originals, and runs NMS at iou_thr.
std::vector<Detection> merge_flip_tta(std::span<const Detection> orig,
                                      std::span<const Detection> flipped,
                                      const ImageSize& img, double iou_thr);

}  // namespace proposalkit
