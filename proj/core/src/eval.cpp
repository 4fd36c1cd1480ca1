#include "proposalkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "proposalkit/coco_io.hpp"
#include "proposalkit/parallel.hpp"

namespace proposalkit {

namespace {

/// IoU with COCO crowd semantics: a crowd region is scored as
/// intersection over the detection's own area.
double det_gt_iou(const Detection& det, const GroundTruthBox& gt) {
  if (!gt.crowd) return iou(det.box, gt.box);
  const double iw =
      std::min(det.box.x2, gt.box.x2) - std::max(det.box.x1, gt.box.x1);
  const double ih =
      std::min(det.box.y2, gt.box.y2) - std::max(det.box.y1, gt.box.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double det_area = det.box.area();
  if (det_area <= 0.0) return 0.0;
  return iw * ih / det_area;
}

std::vector<std::size_t> sorted_det_order(std::span<const Detection> dets,
                                          int max_dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });
  if (max_dets >= 0 && order.size() > static_cast<std::size_t>(max_dets)) {
    order.resize(static_cast<std::size_t>(max_dets));
  }
  return order;
}

void check_unique_gt_ids(std::span<const GroundTruthBox> gts) {
  std::unordered_set<std::int64_t> seen;
  for (const GroundTruthBox& g : gts) {
    if (!seen.insert(g.gt_id).second) {
      throw std::invalid_argument("duplicate gt_id " + std::to_string(g.gt_id) +
                                  " within one image");
    }
  }
}

/// Greedy matching for one image across all thresholds, mirroring the COCO
/// reference: crowd GTs are sorted after real ones, may be matched several
/// times, and mark their detections ignored.
ImageMatchTable match_one_image(std::int64_t image_id,
                                std::span<const Detection> dets,
                                std::span<const GroundTruthBox> gts,
                                std::span<const double> thresholds,
                                int max_dets) {
  check_unique_gt_ids(gts);

  ImageMatchTable table;
  table.image_id = image_id;

  std::vector<std::size_t> gt_order(gts.size());
  std::iota(gt_order.begin(), gt_order.end(), std::size_t{0});
  std::stable_sort(gt_order.begin(), gt_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return static_cast<int>(gts[a].crowd) <
                            static_cast<int>(gts[b].crowd);
                   });
  for (const GroundTruthBox& g : gts) {
    if (g.crowd) {
      ++table.num_crowd_gt;
    } else {
      ++table.num_valid_gt;
    }
  }

  const std::vector<std::size_t> det_order = sorted_det_order(dets, max_dets);
  const std::size_t num_dets = det_order.size();
  const std::size_t num_thr = thresholds.size();

  table.det_scores.reserve(num_dets);
  for (std::size_t d : det_order) table.det_scores.push_back(dets[d].score);
  table.det_match_gt = Mat<std::int32_t>(num_thr, num_dets, -1);
  table.det_ignored = Mat<std::uint8_t>(num_thr, num_dets, 0);

  MatD ious(num_dets, gts.size());
  for (std::size_t d = 0; d < num_dets; ++d) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      ious(d, g) = det_gt_iou(dets[det_order[d]], gts[g]);
    }
  }

  std::vector<std::uint8_t> gt_matched(gts.size());
  for (std::size_t t = 0; t < num_thr; ++t) {
    std::fill(gt_matched.begin(), gt_matched.end(), 0);
    for (std::size_t d = 0; d < num_dets; ++d) {
      double best = std::min(thresholds[t], 1.0 - 1e-10);
      int match = -1;
      for (std::size_t pos = 0; pos < gt_order.size(); ++pos) {
        const std::size_t g = gt_order[pos];
        if (gt_matched[g] && !gts[g].crowd) continue;
        // Matched to a real GT already and reached the crowd block: stop.
        if (match >= 0 && !gts[static_cast<std::size_t>(match)].crowd &&
            gts[g].crowd) {
          break;
        }
        if (ious(d, g) < best) continue;
        best = ious(d, g);
        match = static_cast<int>(g);
      }
      if (match < 0) continue;
      gt_matched[static_cast<std::size_t>(match)] = 1;
      table.det_match_gt(t, d) = match;
      table.det_ignored(t, d) = gts[static_cast<std::size_t>(match)].crowd;
    }
  }
  return table;
}

std::string format_threshold_suffix(double thr) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", thr);
  std::string s(buf);
  if (!s.empty() && s.back() == '0') s.pop_back();  // 0.50 -> 0.5
  if (!s.empty() && s.front() == '0') s.erase(s.begin());
  return s;  // ".5", ".75", ".55", ...
}

}  // namespace

void validate(const EvalConfig& cfg) {
  if (cfg.iou_thresholds.empty()) {
    throw std::invalid_argument("eval: at least one IoU threshold required");
  }
  for (std::size_t i = 0; i < cfg.iou_thresholds.size(); ++i) {
    const double t = cfg.iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) {
      throw std::invalid_argument("eval: IoU thresholds must lie in (0, 1]");
    }
    if (i > 0 && t <= cfg.iou_thresholds[i - 1]) {
      throw std::invalid_argument("eval: IoU thresholds must be increasing");
    }
  }
  if (cfg.recall_budgets.empty()) {
    throw std::invalid_argument("eval: at least one recall budget required");
  }
  for (std::size_t i = 0; i < cfg.recall_budgets.size(); ++i) {
    if (cfg.recall_budgets[i] < 1) {
      throw std::invalid_argument("eval: recall budgets must be >= 1");
    }
    if (i > 0 && cfg.recall_budgets[i] <= cfg.recall_budgets[i - 1]) {
      throw std::invalid_argument("eval: recall budgets must be increasing");
    }
  }
  if (cfg.ap_max_dets < 1) {
    throw std::invalid_argument("eval: ap_max_dets must be >= 1");
  }
}

std::vector<DetectionMatch> match_image(std::span<const Detection> dets,
                                        std::span<const GroundTruthBox> gts,
                                        double iou_thr, int max_dets) {
  if (!(iou_thr > 0.0 && iou_thr <= 1.0)) {
    throw std::invalid_argument("match_image: iou_thr must lie in (0, 1]");
  }
  if (max_dets < 0) {
    throw std::invalid_argument("match_image: max_dets must be >= 0");
  }
  const double thresholds[1] = {iou_thr};
  const ImageMatchTable table =
      match_one_image(0, dets, gts, thresholds, max_dets);
  const std::vector<std::size_t> order = sorted_det_order(dets, max_dets);

  std::vector<DetectionMatch> out;
  out.reserve(order.size());
  for (std::size_t d = 0; d < order.size(); ++d) {
    out.push_back(DetectionMatch{static_cast<int>(order[d]),
                                 table.det_scores[d], table.det_match_gt(0, d),
                                 table.det_ignored(0, d) != 0});
  }
  return out;
}

DatasetMatches match_dataset(const GtDataset& gt,
                             std::span<const Detection> dets,
                             const EvalConfig& cfg) {
  validate(cfg);

  DatasetMatches out;
  out.iou_thresholds = cfg.iou_thresholds;
  out.max_dets = std::max(cfg.ap_max_dets, cfg.recall_budgets.back());

  // Image slots in GT file order; detections on unknown images get
  // appended zero-GT slots and a warning.
  std::vector<std::int64_t> image_ids;
  std::unordered_map<std::int64_t, std::size_t> slot_of;
  image_ids.reserve(gt.images.size());
  for (const CocoImage& im : gt.images) {
    if (slot_of.contains(im.id)) {
      throw std::invalid_argument("duplicate image id " +
                                  std::to_string(im.id) + " in ground truth");
    }
    slot_of.emplace(im.id, image_ids.size());
    image_ids.push_back(im.id);
  }

  std::vector<std::vector<GroundTruthBox>> gts_per_image(image_ids.size());
  for (const GroundTruthBox& ann : gt.annotations) {
    const auto it = slot_of.find(ann.image_id);
    if (it == slot_of.end()) {
      throw std::invalid_argument(
          "ground-truth annotation references unknown image id " +
          std::to_string(ann.image_id));
    }
    gts_per_image[it->second].push_back(ann);
  }

  std::vector<std::vector<Detection>> dets_per_image(image_ids.size());
  for (const Detection& det : dets) {
    auto it = slot_of.find(det.image_id);
    if (it == slot_of.end()) {
      slot_of.emplace(det.image_id, image_ids.size());
      image_ids.push_back(det.image_id);
      gts_per_image.emplace_back();
      dets_per_image.emplace_back();
      it = slot_of.find(det.image_id);
      out.warnings.push_back("detections reference image id " +
                             std::to_string(det.image_id) +
                             " absent from the ground truth");
    }
    dets_per_image[it->second].push_back(det);
  }

  out.images.resize(image_ids.size());
  parallel_for(image_ids.size(), effective_threads(cfg.threads),
               [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out.images[i] =
          match_one_image(image_ids[i], dets_per_image[i], gts_per_image[i],
                          out.iou_thresholds, out.max_dets);
    }
  });

  for (const ImageMatchTable& t : out.images) out.total_valid_gt += t.num_valid_gt;
  return out;
}

double average_recall(const DatasetMatches& matches, int budget) {
  if (budget < 1) throw std::invalid_argument("recall budget must be >= 1");
  if (matches.total_valid_gt == 0) return -1.0;

  const std::size_t num_thr = matches.iou_thresholds.size();
  double sum = 0.0;
  for (std::size_t t = 0; t < num_thr; ++t) {
    long tp = 0;
    for (const ImageMatchTable& im : matches.images) {
      const std::size_t n = std::min<std::size_t>(
          im.det_scores.size(), static_cast<std::size_t>(budget));
      for (std::size_t d = 0; d < n; ++d) {
        if (im.det_match_gt(t, d) >= 0 && !im.det_ignored(t, d)) ++tp;
      }
    }
    sum += static_cast<double>(tp) / static_cast<double>(matches.total_valid_gt);
  }
  return sum / static_cast<double>(num_thr);
}

ApResult average_precision(const DatasetMatches& matches, int ap_max_dets) {
  if (ap_max_dets < 1) {
    throw std::invalid_argument("ap_max_dets must be >= 1");
  }
  ApResult res;
  if (matches.total_valid_gt == 0) {
    for (double t : matches.iou_thresholds) res.ap_at[t] = -1.0;
    return res;
  }

  // Pool the top-ap_max_dets detections of every image in image order and
  // stable-sort by score; ties keep (image, rank) order like the COCO
  // reference mergesort.
  struct PooledDet {
    double score;
    std::uint32_t image;
    std::uint32_t rank;
  };
  std::vector<PooledDet> pooled;
  for (std::size_t i = 0; i < matches.images.size(); ++i) {
    const ImageMatchTable& im = matches.images[i];
    const std::size_t n = std::min<std::size_t>(
        im.det_scores.size(), static_cast<std::size_t>(ap_max_dets));
    for (std::size_t d = 0; d < n; ++d) {
      pooled.push_back(PooledDet{im.det_scores[d], static_cast<std::uint32_t>(i),
                                 static_cast<std::uint32_t>(d)});
    }
  }
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const PooledDet& a, const PooledDet& b) {
                     return a.score > b.score;
                   });

  // 101 interpolation points, 0.00 .. 1.00.
  std::vector<double> recall_thresholds(101);
  for (int i = 0; i <= 100; ++i) {
    recall_thresholds[i] = static_cast<double>(i) / 100.0;
  }

  const double npig = static_cast<double>(matches.total_valid_gt);
  std::vector<double> precisions, recalls;
  precisions.reserve(pooled.size());
  recalls.reserve(pooled.size());

  double ap_sum = 0.0;
  for (std::size_t t = 0; t < matches.iou_thresholds.size(); ++t) {
    precisions.clear();
    recalls.clear();
    long tp = 0, fp = 0;
    for (const PooledDet& pd : pooled) {
      const ImageMatchTable& im = matches.images[pd.image];
      if (im.det_ignored(t, pd.rank)) continue;
      if (im.det_match_gt(t, pd.rank) >= 0) {
        ++tp;
      } else {
        ++fp;
      }
      recalls.push_back(static_cast<double>(tp) / npig);
      precisions.push_back(static_cast<double>(tp) /
                           static_cast<double>(tp + fp));
    }
    // Interpolate: precision envelope, non-increasing from the right.
    for (std::size_t i = precisions.size(); i-- > 1;) {
      if (precisions[i] > precisions[i - 1]) precisions[i - 1] = precisions[i];
    }
    double q_sum = 0.0;
    for (double rt : recall_thresholds) {
      const auto it = std::lower_bound(recalls.begin(), recalls.end(), rt);
      if (it != recalls.end()) {
        q_sum += precisions[static_cast<std::size_t>(it - recalls.begin())];
      }
    }
    const double ap_t = q_sum / static_cast<double>(recall_thresholds.size());
    res.ap_at[matches.iou_thresholds[t]] = ap_t;
    ap_sum += ap_t;
  }
  res.ap = ap_sum / static_cast<double>(matches.iou_thresholds.size());
  return res;
}

EvalReport evaluate(const GtDataset& gt, std::span<const Detection> dets,
                    const EvalConfig& cfg) {
  const DatasetMatches matches = match_dataset(gt, dets, cfg);

  EvalReport report;
  report.warnings = matches.warnings;
  for (int budget : cfg.recall_budgets) {
    report.ar_at[budget] = average_recall(matches, budget);
  }
  const ApResult ap = average_precision(matches, cfg.ap_max_dets);
  report.ap = ap.ap;
  report.ap_at = ap.ap_at;
  if (matches.total_valid_gt == 0) {
    report.warnings.push_back(
        "no valid ground truth; metrics carry the -1 sentinel");
  }

  report.images.reserve(matches.images.size());
  for (const ImageMatchTable& im : matches.images) {
    ImageEvalRecord rec;
    rec.image_id = im.image_id;
    rec.num_dets = static_cast<int>(im.det_scores.size());
    rec.num_valid_gt = im.num_valid_gt;
    rec.num_crowd_gt = im.num_crowd_gt;
    for (std::size_t d = 0; d < im.det_scores.size(); ++d) {
      if (im.det_match_gt(0, d) >= 0 && !im.det_ignored(0, d)) {
        ++rec.matched_at_base_thr;
      }
    }
    report.images.push_back(rec);
  }
  return report;
}

std::string EvalReport::to_json(bool include_images) const {
  nlohmann::json j;
  for (const auto& [budget, value] : ar_at) {
    j["AR@" + std::to_string(budget)] = value;
  }
  j["AP"] = ap;
  for (const auto& [thr, value] : ap_at) {
    j["AP@" + format_threshold_suffix(thr)] = value;
  }
  j["warnings"] = warnings;
  if (include_images) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ImageEvalRecord& rec : images) {
      arr.push_back({{"image_id", rec.image_id},
                     {"num_dets", rec.num_dets},
                     {"num_valid_gt", rec.num_valid_gt},
                     {"num_crowd_gt", rec.num_crowd_gt},
                     {"matched_at_base_thr", rec.matched_at_base_thr}});
    }
    j["images"] = arr;
  }
  return j.dump(2) + "\n";
}

EvalReport evaluate_files(const std::string& gt_path,
                          const std::string& det_path, const EvalConfig& cfg) {
  const GtDataset gt = load_coco_gt(gt_path);
  const std::vector<Detection> dets = load_coco_detections(det_path);
  return evaluate(gt, dets, cfg);
}

}  // namespace proposalkit
