#pragma once

#include <stdexcept>
#include <string>

#include "proposalkit/anchors.hpp"
#include "proposalkit/assignment.hpp"
#include "proposalkit/crop.hpp"
#include "proposalkit/eval.hpp"

namespace proposalkit {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Whole-pipeline configuration. Defaults encode the reference operating
/// point: NMS 0.8, dual SimOTA samplers (center ratio 0.25, top-k 10/20),
/// 20 px crop margin onto 512x512 patches.
struct PipelineConfig {
  double nms_iou_thr = 0.8;
  SamplerConfig cls_sampler;
  SamplerConfig reg_sampler;
  CropSpec crop;
  EvalConfig eval;
  PyramidSpec pyramid;  // image field filled per invocation

  PipelineConfig();

  bool operator==(const PipelineConfig&) const = default;
};

/// Strict JSON parsing: unknown keys are rejected with their field path.
PipelineConfig parse_pipeline_config(const std::string& text,
                                     const std::string& name = "<config>");
PipelineConfig load_pipeline_config(const std::string& path);
std::string serialize_pipeline_config(const PipelineConfig& cfg);

}  // namespace proposalkit
