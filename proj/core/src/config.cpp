#include "proposalkit/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace proposalkit {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(path + ": unknown key \"" + key + "\"");
  }
}

double get_double(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError(path + "." + key + ": expected a number");
  }
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(path + "." + key + ": expected an integer");
  }
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) {
    throw ConfigError(path + "." + key + ": expected a boolean");
  }
  return v.get<bool>();
}

AssignMode mode_from_string(const std::string& s, const std::string& path) {
  if (s == "max_iou") return AssignMode::kMaxIou;
  if (s == "ota") return AssignMode::kOta;
  if (s == "simota") return AssignMode::kSimOta;
  throw ConfigError(path + ": mode must be one of max_iou | ota | simota");
}

std::string mode_to_string(AssignMode mode) {
  switch (mode) {
    case AssignMode::kMaxIou: return "max_iou";
    case AssignMode::kOta: return "ota";
    case AssignMode::kSimOta: return "simota";
  }
  return "simota";
}

CenterPrior prior_from_string(const std::string& s, const std::string& path) {
  if (s == "shrunk_box") return CenterPrior::kShrunkBox;
  if (s == "stride_radius") return CenterPrior::kStrideRadius;
  throw ConfigError(path +
                    ": center_prior must be shrunk_box | stride_radius");
}

std::string prior_to_string(CenterPrior prior) {
  return prior == CenterPrior::kShrunkBox ? "shrunk_box" : "stride_radius";
}

SamplerConfig parse_sampler(const json& obj, const std::string& path,
                            const SamplerConfig& defaults) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  reject_unknown_keys(obj, path,
                      {"center_ratio", "top_k", "reg_weight", "mode",
                       "dynamic_k", "center_prior", "stride_radius",
                       "pos_iou_thr", "neg_iou_thr", "ota_eps", "ota_max_iter"});
  SamplerConfig out = defaults;
  out.center_ratio = get_double(obj, path, "center_ratio", out.center_ratio);
  out.top_k = get_int(obj, path, "top_k", out.top_k);
  out.reg_weight = get_double(obj, path, "reg_weight", out.reg_weight);
  if (obj.contains("mode")) {
    if (!obj.at("mode").is_string()) {
      throw ConfigError(path + ".mode: expected a string");
    }
    out.mode = mode_from_string(obj.at("mode").get<std::string>(),
                                path + ".mode");
  }
  out.dynamic_k = get_bool(obj, path, "dynamic_k", out.dynamic_k);
  if (obj.contains("center_prior")) {
    if (!obj.at("center_prior").is_string()) {
      throw ConfigError(path + ".center_prior: expected a string");
    }
    out.center_prior = prior_from_string(
        obj.at("center_prior").get<std::string>(), path + ".center_prior");
  }
  out.stride_radius = get_double(obj, path, "stride_radius", out.stride_radius);
  out.pos_iou_thr = get_double(obj, path, "pos_iou_thr", out.pos_iou_thr);
  out.neg_iou_thr = get_double(obj, path, "neg_iou_thr", out.neg_iou_thr);
  out.ota_eps = get_double(obj, path, "ota_eps", out.ota_eps);
  out.ota_max_iter = get_int(obj, path, "ota_max_iter", out.ota_max_iter);
  validate(out);
  return out;
}

json sampler_to_json(const SamplerConfig& s) {
  return {{"center_ratio", s.center_ratio},
          {"top_k", s.top_k},
          {"reg_weight", s.reg_weight},
          {"mode", mode_to_string(s.mode)},
          {"dynamic_k", s.dynamic_k},
          {"center_prior", prior_to_string(s.center_prior)},
          {"stride_radius", s.stride_radius},
          {"pos_iou_thr", s.pos_iou_thr},
          {"neg_iou_thr", s.neg_iou_thr},
          {"ota_eps", s.ota_eps},
          {"ota_max_iter", s.ota_max_iter}};
}

}  // namespace

PipelineConfig::PipelineConfig() {
  cls_sampler.top_k = 10;
  reg_sampler.top_k = 20;
  pyramid.strides = {4, 8, 16, 32, 64};
  pyramid.base_scale = 8.0;
}

PipelineConfig parse_pipeline_config(const std::string& text,
                                     const std::string& name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(name + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError(name + ": expected an object");
  reject_unknown_keys(root, name,
                      {"nms_iou_thr", "cls_sampler", "reg_sampler", "crop",
                       "eval", "pyramid"});

  PipelineConfig cfg;
  cfg.nms_iou_thr = get_double(root, name, "nms_iou_thr", cfg.nms_iou_thr);
  if (!(cfg.nms_iou_thr >= 0.0 && cfg.nms_iou_thr <= 1.0)) {
    throw ConfigError(name + ".nms_iou_thr: must lie in [0, 1]");
  }
  if (root.contains("cls_sampler")) {
    cfg.cls_sampler =
        parse_sampler(root.at("cls_sampler"), name + ".cls_sampler",
                      cfg.cls_sampler);
  }
  if (root.contains("reg_sampler")) {
    cfg.reg_sampler =
        parse_sampler(root.at("reg_sampler"), name + ".reg_sampler",
                      cfg.reg_sampler);
  }
  if (root.contains("crop")) {
    const json& crop = root.at("crop");
    const std::string path = name + ".crop";
    if (!crop.is_object()) throw ConfigError(path + ": expected an object");
    reject_unknown_keys(crop, path, {"margin", "patch_width", "patch_height"});
    cfg.crop.margin = get_double(crop, path, "margin", cfg.crop.margin);
    cfg.crop.patch_width =
        get_int(crop, path, "patch_width", cfg.crop.patch_width);
    cfg.crop.patch_height =
        get_int(crop, path, "patch_height", cfg.crop.patch_height);
    if (cfg.crop.margin < 0.0 || cfg.crop.patch_width < 1 ||
        cfg.crop.patch_height < 1) {
      throw ConfigError(path + ": invalid crop geometry");
    }
  }
  if (root.contains("eval")) {
    const json& ev = root.at("eval");
    const std::string path = name + ".eval";
    if (!ev.is_object()) throw ConfigError(path + ": expected an object");
    reject_unknown_keys(ev, path,
                        {"iou_thresholds", "recall_budgets", "ap_max_dets",
                         "threads", "include_image_records"});
    if (ev.contains("iou_thresholds")) {
      const json& arr = ev.at("iou_thresholds");
      if (!arr.is_array()) {
        throw ConfigError(path + ".iou_thresholds: expected an array");
      }
      cfg.eval.iou_thresholds.clear();
      for (const json& v : arr) {
        if (!v.is_number()) {
          throw ConfigError(path + ".iou_thresholds: expected numbers");
        }
        cfg.eval.iou_thresholds.push_back(v.get<double>());
      }
    }
    if (ev.contains("recall_budgets")) {
      const json& arr = ev.at("recall_budgets");
      if (!arr.is_array()) {
        throw ConfigError(path + ".recall_budgets: expected an array");
      }
      cfg.eval.recall_budgets.clear();
      for (const json& v : arr) {
        if (!v.is_number_integer()) {
          throw ConfigError(path + ".recall_budgets: expected integers");
        }
        cfg.eval.recall_budgets.push_back(v.get<int>());
      }
    }
    cfg.eval.ap_max_dets =
        get_int(ev, path, "ap_max_dets", cfg.eval.ap_max_dets);
    cfg.eval.threads = get_int(ev, path, "threads", cfg.eval.threads);
    cfg.eval.include_image_records = get_bool(
        ev, path, "include_image_records", cfg.eval.include_image_records);
    try {
      validate(cfg.eval);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  if (root.contains("pyramid")) {
    const json& pyr = root.at("pyramid");
    const std::string path = name + ".pyramid";
    if (!pyr.is_object()) throw ConfigError(path + ": expected an object");
    reject_unknown_keys(pyr, path, {"strides", "base_scale"});
    if (pyr.contains("strides")) {
      const json& arr = pyr.at("strides");
      if (!arr.is_array()) {
        throw ConfigError(path + ".strides: expected an array");
      }
      cfg.pyramid.strides.clear();
      for (const json& v : arr) {
        if (!v.is_number_integer()) {
          throw ConfigError(path + ".strides: expected integers");
        }
        cfg.pyramid.strides.push_back(v.get<int>());
      }
    }
    cfg.pyramid.base_scale =
        get_double(pyr, path, "base_scale", cfg.pyramid.base_scale);
    if (cfg.pyramid.base_scale <= 0.0) {
      throw ConfigError(path + ".base_scale: must be positive");
    }
    for (std::size_t i = 0; i < cfg.pyramid.strides.size(); ++i) {
      if (cfg.pyramid.strides[i] <= 0 ||
          (i > 0 && cfg.pyramid.strides[i] <= cfg.pyramid.strides[i - 1])) {
        throw ConfigError(path +
                          ".strides: must be positive and strictly increasing");
      }
    }
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pipeline_config(buf.str(), path);
}

std::string serialize_pipeline_config(const PipelineConfig& cfg) {
  json root;
  root["nms_iou_thr"] = cfg.nms_iou_thr;
  root["cls_sampler"] = sampler_to_json(cfg.cls_sampler);
  root["reg_sampler"] = sampler_to_json(cfg.reg_sampler);
  root["crop"] = {{"margin", cfg.crop.margin},
                  {"patch_width", cfg.crop.patch_width},
                  {"patch_height", cfg.crop.patch_height}};
  root["eval"] = {{"iou_thresholds", cfg.eval.iou_thresholds},
                  {"recall_budgets", cfg.eval.recall_budgets},
                  {"ap_max_dets", cfg.eval.ap_max_dets},
                  {"threads", cfg.eval.threads},
                  {"include_image_records", cfg.eval.include_image_records}};
  root["pyramid"] = {{"strides", cfg.pyramid.strides},
                     {"base_scale", cfg.pyramid.base_scale}};
  return root.dump(2) + "\n";
}

}  // namespace proposalkit
