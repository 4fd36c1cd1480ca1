#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "proposalkit/geometry.hpp"
#include "proposalkit/matrix.hpp"
#include "proposalkit/postprocess.hpp"

namespace proposalkit {

struct GroundTruthBox {
  Box box;
  std::int64_t image_id = 0;
  std::int64_t gt_id = 0;
  bool crowd = false;

  bool operator==(const GroundTruthBox&) const = default;
};

struct CocoImage {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;

  bool operator==(const CocoImage&) const = default;
};

struct GtDataset {
  std::vector<CocoImage> images;
  std::vector<GroundTruthBox> annotations;

  bool operator==(const GtDataset&) const = default;
};

/// Class-agnostic COCO-protocol settings. Average precision integrates a
/// 101-point interpolated PR curve per IoU threshold at ap_max_dets
/// detections per image; average recall is reported per budget.
struct EvalConfig {
  std::vector<double> iou_thresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                        0.75, 0.80, 0.85, 0.90, 0.95};
  std::vector<int> recall_budgets = {1, 10, 100, 300, 1000};
  int ap_max_dets = 100;
  int threads = 0;  // 0: PROPOSALKIT_THREADS, then hardware concurrency
  bool include_image_records = false;

  bool operator==(const EvalConfig&) const = default;
};

void validate(const EvalConfig& cfg);

/// Outcome for one detection at one IoU threshold, in score-descending
/// order (ties by original index). gt_index is -1 when unmatched; `ignored`
/// marks detections absorbed by crowd regions.
struct DetectionMatch {
  int det_index = 0;
  double score = 0.0;
  int gt_index = -1;
  bool ignored = false;
};

/// Greedy single-image matching: each detection (up to max_dets, walked in
/// score order) takes the unmatched non-crowd GT with the highest
/// IoU >= iou_thr; crowd GTs absorb leftover detections without counting
/// as TPs or FPs. Throws on duplicate gt ids.
std::vector<DetectionMatch> match_image(std::span<const Detection> dets,
                                        std::span<const GroundTruthBox> gts,
                                        double iou_thr, int max_dets);

/// Per-image match tables for all configured thresholds, detections
/// truncated to the largest budget.
struct ImageMatchTable {
  std::int64_t image_id = 0;
  std::vector<double> det_scores;       // sorted descending, truncated
  Mat<std::int32_t> det_match_gt;       // thresholds x dets; GT index or -1
  Mat<std::uint8_t> det_ignored;        // thresholds x dets
  int num_valid_gt = 0;
  int num_crowd_gt = 0;
};

struct DatasetMatches {
  std::vector<double> iou_thresholds;
  int max_dets = 0;
  std::vector<ImageMatchTable> images;
  long total_valid_gt = 0;
  std::vector<std::string> warnings;
};

DatasetMatches match_dataset(const GtDataset& gt,
                             std::span<const Detection> dets,
                             const EvalConfig& cfg);

/// Mean over IoU thresholds of (matched GTs / total non-crowd GTs) with the
/// top-`budget` detections per image. -1 when the dataset has no valid GTs.
double average_recall(const DatasetMatches& matches, int budget);

/// 101-point interpolated AP per threshold and their mean, at
/// `ap_max_dets` detections per image. -1 sentinels when no valid GTs.
struct ApResult {
  double ap = -1.0;
  std::map<double, double> ap_at;
};
ApResult average_precision(const DatasetMatches& matches, int ap_max_dets);

struct ImageEvalRecord {
  std::int64_t image_id = 0;
  int num_dets = 0;
  int num_valid_gt = 0;
  int num_crowd_gt = 0;
  int matched_at_base_thr = 0;  // TPs at the lowest threshold, full budget
};

struct EvalReport {
  std::map<int, double> ar_at;
  double ap = -1.0;
  std::map<double, double> ap_at;
  std::vector<ImageEvalRecord> images;
  std::vector<std::string> warnings;

  /// Deterministic JSON with the challenge column names (AR@100, AP,
  /// AP@.5, AP@.75, AR@1, AR@10, AR@300, AR@1000 under default config).
  std::string to_json(bool include_images = false) const;
};

EvalReport evaluate(const GtDataset& gt, std::span<const Detection> dets,
                    const EvalConfig& cfg = EvalConfig{});

/// Loads COCO-format files and evaluates them.
EvalReport evaluate_files(const std::string& gt_path,
                          const std::string& det_path,
                          const EvalConfig& cfg = EvalConfig{});

}  // namespace proposalkit
