#include "proposalkit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "proposalkit/coco_io.hpp"
#include "proposalkit/random.hpp"

namespace proposalkit {

namespace {

Box random_box(Rng& rng, const ImageSize& img) {
  const double w = rng.uniform(8.0, std::max(9.0, img.width * 0.5));
  const double h = rng.uniform(8.0, std::max(9.0, img.height * 0.5));
  const double x1 = rng.uniform(0.0, std::max(1.0, img.width - w));
  const double y1 = rng.uniform(0.0, std::max(1.0, img.height - h));
  return Box(x1, y1, std::min<double>(img.width, x1 + w),
             std::min<double>(img.height, y1 + h));
}

Box jittered(Rng& rng, const Box& b, double jitter, const ImageSize& img) {
  const double x1 = b.x1 + rng.uniform(-jitter, jitter);
  const double y1 = b.y1 + rng.uniform(-jitter, jitter);
  const double x2 = b.x2 + rng.uniform(-jitter, jitter);
  const double y2 = b.y2 + rng.uniform(-jitter, jitter);
  const Box raw(std::min(x1, x2), std::min(y1, y2), std::max(x1, x2),
                std::max(y1, y2));
  return clip(raw, img);
}

}  // namespace

std::vector<SyntheticScene> generate_scenes(const SynthConfig& cfg) {
  if (cfg.num_images < 0) {
    throw std::invalid_argument("synth: num_images must be >= 0");
  }
  if (cfg.jitter < 0.0) {
    throw std::invalid_argument("synth: jitter must be >= 0");
  }
  if (cfg.mean_gts_per_image < 1) {
    throw std::invalid_argument("synth: mean_gts_per_image must be >= 1");
  }

  Rng rng(cfg.seed);
  std::vector<SyntheticScene> scenes;
  scenes.reserve(static_cast<std::size_t>(cfg.num_images));

  std::int64_t next_gt_id = 1;
  const double miss_rate = std::min(0.2, cfg.jitter / 100.0);

  for (int i = 0; i < cfg.num_images; ++i) {
    SyntheticScene scene;
    scene.image.id = i + 1;
    scene.image.width = rng.uniform_int(320, 1280);
    scene.image.height = rng.uniform_int(240, 960);
    const ImageSize img{scene.image.width, scene.image.height};

    const int lo = std::max(1, cfg.mean_gts_per_image / 2);
    const int hi = cfg.mean_gts_per_image + cfg.mean_gts_per_image / 2;
    const int num_gts = rng.uniform_int(lo, hi);
    for (int g = 0; g < num_gts; ++g) {
      Box box = random_box(rng, img);
      // Exact duplicate GT boxes make score-tied greedy matching ambiguous.
      bool duplicate = true;
      while (duplicate) {
        duplicate = false;
        for (const GroundTruthBox& prev : scene.gts) {
          if (prev.box == box) {
            duplicate = true;
            box = random_box(rng, img);
            break;
          }
        }
      }
      GroundTruthBox gt;
      gt.box = box;
      gt.image_id = scene.image.id;
      gt.gt_id = next_gt_id++;
      gt.crowd = rng.bernoulli(cfg.crowd_fraction);
      scene.gts.push_back(gt);
    }

    for (const GroundTruthBox& gt : scene.gts) {
      if (gt.crowd) continue;
      if (cfg.jitter == 0.0) {
        scene.dets.push_back(
            Detection{gt.box, 1.0, std::nullopt, scene.image.id});
        continue;
      }
      if (rng.bernoulli(miss_rate)) continue;
      const Box det_box = jittered(rng, gt.box, cfg.jitter, img);
      if (det_box.area() <= 0.0) continue;
      const double quality = iou(det_box, gt.box);
      const double score =
          std::clamp(quality * rng.uniform(0.7, 1.0), 0.001, 0.999);
      scene.dets.push_back(
          Detection{det_box, score, std::nullopt, scene.image.id});
    }

    if (cfg.jitter > 0.0) {
      const int num_fp = rng.uniform_int(0, 2);
      for (int f = 0; f < num_fp; ++f) {
        scene.dets.push_back(Detection{random_box(rng, img),
                                       rng.uniform(0.001, 0.4), std::nullopt,
                                       scene.image.id});
      }
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

GtDataset scenes_to_gt(const std::vector<SyntheticScene>& scenes) {
  GtDataset out;
  for (const SyntheticScene& s : scenes) {
    out.images.push_back(s.image);
    out.annotations.insert(out.annotations.end(), s.gts.begin(), s.gts.end());
  }
  return out;
}

std::vector<Detection> scenes_to_detections(
    const std::vector<SyntheticScene>& scenes) {
  std::vector<Detection> out;
  for (const SyntheticScene& s : scenes) {
    out.insert(out.end(), s.dets.begin(), s.dets.end());
  }
  return out;
}

int write_synthetic_dataset(const SynthConfig& cfg, const std::string& gt_path,
                            const std::string& det_path) {
  const std::vector<SyntheticScene> scenes = generate_scenes(cfg);
  save_coco_gt(gt_path, scenes_to_gt(scenes));
  const std::vector<Detection> dets = scenes_to_detections(scenes);
  save_coco_detections(det_path, dets);
  return static_cast<int>(scenes.size());
}

}  // namespace proposalkit
