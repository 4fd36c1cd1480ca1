#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "proposalkit/eval.hpp"

namespace proposalkit {

/// Seeded generator of COCO-format scenes with controllable detection
/// noise. jitter == 0 produces detections identical to the non-crowd ground
/// truth with score 1.0, so self-evaluation scores 1.0 everywhere.
struct SynthConfig {
  std::uint64_t seed = 0;
  int num_images = 100;
  double jitter = 0.0;        // uniform corner perturbation, pixels
  int mean_gts_per_image = 10;
  double crowd_fraction = 0.02;

  bool operator==(const SynthConfig&) const = default;
};

struct SyntheticScene {
  CocoImage image;
  std::vector<GroundTruthBox> gts;
  std::vector<Detection> dets;
};

std::vector<SyntheticScene> generate_scenes(const SynthConfig& cfg);

GtDataset scenes_to_gt(const std::vector<SyntheticScene>& scenes);
std::vector<Detection> scenes_to_detections(
    const std::vector<SyntheticScene>& scenes);

/// Writes the GT and detections files for `cfg` and returns the scene count.
int write_synthetic_dataset(const SynthConfig& cfg, const std::string& gt_path,
                            const std::string& det_path);

}  // namespace proposalkit
