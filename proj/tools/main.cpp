// proposalkit command-line tool: dataset evaluation, assignment
// diagnostics, synthetic fixture generation, and file-level NMS.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "proposalkit/anchors.hpp"
#include "proposalkit/assignment.hpp"
#include "proposalkit/coco_io.hpp"
#include "proposalkit/config.hpp"
#include "proposalkit/diagnostics.hpp"
#include "proposalkit/eval.hpp"
#include "proposalkit/parallel.hpp"
#include "proposalkit/postprocess.hpp"
#include "proposalkit/synthetic.hpp"

namespace pk = proposalkit;

namespace {

pk::PipelineConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return pk::PipelineConfig{};
  return pk::load_pipeline_config(path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << text;
}

void print_challenge_row(const pk::EvalReport& report) {
  const char* columns[] = {"AR@100", "AP", "AP@.5", "AP@.75", "AR@1", "AR@10"};
  auto lookup = [&](const std::string& name) -> std::optional<double> {
    if (name == "AP") return report.ap;
    if (name.rfind("AP@", 0) == 0) {
      for (const auto& [thr, v] : report.ap_at) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.2f", thr);
        std::string s(buf);
        if (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.front() == '0') s.erase(s.begin());
        if ("AP@" + s == name) return v;
      }
      return std::nullopt;
    }
    const int budget = std::stoi(name.substr(3));
    const auto it = report.ar_at.find(budget);
    if (it == report.ar_at.end()) return std::nullopt;
    return it->second;
  };

  std::string header, values;
  for (const char* col : columns) {
    const auto v = lookup(col);
    if (!v) continue;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%8s", col);
    header += buf;
    std::snprintf(buf, sizeof(buf), "%8.4f", *v);
    values += buf;
  }
  std::cout << header << "\n" << values << "\n";
}

int run_evaluate(const std::string& gt_path, const std::string& det_path,
                 const std::string& config_path, const std::string& out_path,
                 double iou_thr_override, int max_dets_override, int threads,
                 bool with_images) {
  pk::PipelineConfig cfg = load_config_or_default(config_path);
  if (iou_thr_override > 0.0) {
    cfg.eval.iou_thresholds = {iou_thr_override};
  }
  if (max_dets_override > 0) cfg.eval.ap_max_dets = max_dets_override;
  if (threads > 0) cfg.eval.threads = threads;
  if (with_images) cfg.eval.include_image_records = true;

  const pk::EvalReport report = pk::evaluate_files(gt_path, det_path, cfg.eval);
  print_challenge_row(report);
  for (const std::string& w : report.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  if (!out_path.empty()) {
    write_text(out_path, report.to_json(cfg.eval.include_image_records));
  }
  return 0;
}

struct PredFile {
  std::unordered_map<std::int64_t, std::pair<std::vector<double>,
                                             std::vector<pk::Box>>> by_image;
};

PredFile load_pred_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  nlohmann::json root;
  in >> root;
  if (!root.is_object() || !root.contains("images")) {
    throw std::runtime_error(path + ": expected {\"images\": [...]}");
  }
  PredFile out;
  for (const auto& im : root.at("images")) {
    const std::int64_t id = im.at("image_id").get<std::int64_t>();
    std::vector<double> scores = im.at("scores").get<std::vector<double>>();
    std::vector<pk::Box> boxes;
    for (const auto& b : im.at("boxes")) {
      boxes.emplace_back(b[0].get<double>(), b[1].get<double>(),
                         b[2].get<double>(), b[3].get<double>());
    }
    if (scores.size() != boxes.size()) {
      throw std::runtime_error(path + ": scores/boxes length mismatch for image " +
                               std::to_string(id));
    }
    out.by_image.emplace(id, std::make_pair(std::move(scores), std::move(boxes)));
  }
  return out;
}

int run_assign(const std::string& gt_path, const std::string& config_path,
               const std::string& pred_path, const std::string& out_path,
               int threads) {
  const pk::PipelineConfig cfg = load_config_or_default(config_path);
  const pk::GtDataset gt = pk::load_coco_gt(gt_path);

  PredFile preds;
  if (!pred_path.empty()) preds = load_pred_file(pred_path);

  std::unordered_map<std::int64_t, std::vector<pk::GroundTruthBox>> gts_by_image;
  for (const pk::GroundTruthBox& ann : gt.annotations) {
    gts_by_image[ann.image_id].push_back(ann);
  }

  std::vector<pk::ImageAssignDiagnostics> images;
  std::vector<std::string> warnings;
  bool warned_topk = false;

  for (const pk::CocoImage& im : gt.images) {
    if (im.width < 1 || im.height < 1) {
      throw std::runtime_error("image " + std::to_string(im.id) +
                               " is missing width/height, required by assign");
    }
    pk::PyramidSpec spec = cfg.pyramid;
    spec.image = pk::ImageSize{im.width, im.height};
    const pk::AnchorSet anchors = pk::AnchorSet::generate(spec);

    std::vector<pk::Box> gt_boxes;
    std::vector<std::int64_t> gt_ids;
    for (const pk::GroundTruthBox& g : gts_by_image[im.id]) {
      gt_boxes.push_back(g.box);
      gt_ids.push_back(g.gt_id);
    }

    // Default synthetic predictions: every anchor predicts itself with a
    // flat objectness of 0.7.
    std::vector<double> scores(anchors.size(), 0.7);
    std::vector<pk::Box> pred_boxes = anchors.boxes();
    if (const auto it = preds.by_image.find(im.id); it != preds.by_image.end()) {
      if (it->second.first.size() != anchors.size()) {
        throw std::runtime_error(
            "prediction file entry for image " + std::to_string(im.id) +
            " does not align with the generated anchor grid (" +
            std::to_string(it->second.first.size()) + " vs " +
            std::to_string(anchors.size()) + ")");
      }
      scores = it->second.first;
      pred_boxes = it->second.second;
    }

    const pk::DualAssignment dual =
        pk::assign_dual(anchors, gt_boxes, scores, pred_boxes,
                        cfg.cls_sampler, cfg.reg_sampler, threads);
    if (!dual.warnings.empty() && !warned_topk) {
      warnings.insert(warnings.end(), dual.warnings.begin(),
                      dual.warnings.end());
      warned_topk = true;
    }
    images.push_back(pk::diagnose_image(dual, gt_ids, im.id));
  }

  const pk::AssignDiagnostics diag =
      pk::aggregate_diagnostics(std::move(images), std::move(warnings));
  const std::string text = diag.to_json();
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
    std::printf("assigned %zu images: overlap_fraction %.4f, subset %s\n",
                diag.images.size(), diag.overlap_fraction,
                diag.subset_holds ? "holds" : "violated");
  }
  for (const std::string& w : diag.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  return 0;
}

int run_synth(std::uint64_t seed, int num_images, const std::string& out_gt,
              const std::string& out_det, double jitter, int mean_gts) {
  pk::SynthConfig cfg;
  cfg.seed = seed;
  cfg.num_images = num_images;
  cfg.jitter = jitter;
  cfg.mean_gts_per_image = mean_gts;
  const int n = pk::write_synthetic_dataset(cfg, out_gt, out_det);
  std::printf("wrote %d images to %s / %s\n", n, out_gt.c_str(),
              out_det.c_str());
  return 0;
}

int run_nms(const std::string& in_path, const std::string& out_path,
            double iou_thr, int max_dets) {
  const std::vector<pk::Detection> dets = pk::load_coco_detections(in_path);
  std::map<std::int64_t, std::vector<pk::Detection>> by_image;
  for (const pk::Detection& d : dets) by_image[d.image_id].push_back(d);

  std::vector<pk::Detection> out;
  for (auto& [image_id, image_dets] : by_image) {
    std::vector<pk::Detection> kept = pk::nms(image_dets, iou_thr);
    if (max_dets > 0) kept = pk::topk_proposals(kept, max_dets);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  pk::save_coco_detections(out_path, out);
  std::printf("kept %zu of %zu detections\n", out.size(), dets.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"proposalkit: class-agnostic proposal plumbing and evaluation"};
  app.require_subcommand(1);

  // evaluate
  std::string gt_path, det_path, config_path, out_path;
  double iou_thr = 0.0;
  int max_dets = 0;
  int threads = 0;
  bool with_images = false;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Score detections against COCO-format ground truth");
  evaluate->add_option("--gt", gt_path, "ground-truth JSON")->required();
  evaluate->add_option("--det", det_path, "detections JSON")->required();
  evaluate->add_option("--config", config_path, "pipeline config JSON");
  evaluate->add_option("--out", out_path, "report output path");
  evaluate->add_option("--iou-thr", iou_thr,
                       "evaluate at this single IoU threshold only");
  evaluate->add_option("--max-dets", max_dets, "override AP max detections");
  evaluate->add_option("--threads", threads, "worker threads (default: auto)");
  evaluate->add_flag("--images", with_images,
                     "include per-image records in the report");

  // assign
  std::string a_gt, a_config, a_pred, a_out;
  int a_threads = 0;
  CLI::App* assign = app.add_subcommand(
      "assign", "Run the dual-sampler assignment and report diagnostics");
  assign->add_option("--gt", a_gt, "ground-truth JSON")->required();
  assign->add_option("--config", a_config, "pipeline config JSON");
  assign->add_option("--pred", a_pred,
                     "per-anchor predictions JSON (default: synthetic)");
  assign->add_option("--out", a_out, "diagnostics output path");
  assign->add_option("--threads", a_threads, "worker threads");

  // synth
  std::uint64_t seed = 0;
  int num_images = 100;
  double jitter = 0.0;
  int mean_gts = 10;
  std::string out_gt, out_det;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a seeded synthetic COCO dataset");
  synth->add_option("--seed", seed, "RNG seed")->required();
  synth->add_option("--images", num_images, "number of images");
  synth->add_option("--out-gt", out_gt, "ground-truth output path")->required();
  synth->add_option("--out-det", out_det, "detections output path")->required();
  synth->add_option("--jitter", jitter, "detection corner jitter in pixels");
  synth->add_option("--mean-gts", mean_gts, "mean boxes per image");

  // nms
  std::string n_in, n_out;
  double n_thr = 0.8;
  int n_max = 0;
  CLI::App* nms_cmd = app.add_subcommand(
      "nms", "Per-image NMS over a COCO results file");
  nms_cmd->add_option("--in", n_in, "detections JSON")->required();
  nms_cmd->add_option("--out", n_out, "output path")->required();
  nms_cmd->add_option("--iou-thr", n_thr, "suppression threshold");
  nms_cmd->add_option("--max-dets", n_max, "keep at most this many per image");

  CLI11_PARSE(app, argc, argv);

  try {
    if (evaluate->parsed()) {
      return run_evaluate(gt_path, det_path, config_path, out_path, iou_thr,
                          max_dets, threads, with_images);
    }
    if (assign->parsed()) {
      return run_assign(a_gt, a_config, a_pred, a_out, a_threads);
    }
    if (synth->parsed()) {
      return run_synth(seed, num_images, out_gt, out_det, jitter, mean_gts);
    }
    if (nms_cmd->parsed()) {
      return run_nms(n_in, n_out, n_thr, n_max);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
