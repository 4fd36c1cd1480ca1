#include "proposalkit/coco_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace proposalkit {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Line number of a byte offset, for parse diagnostics.
std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

json parse_text(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(name + ":" + std::to_string(line_of(text, e.byte)) + ": " +
                     e.what());
  }
}

double require_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw ParseError(ctx + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(ctx + ": expected a finite number");
  return v;
}

std::int64_t require_int(const json& j, const std::string& ctx) {
  if (!j.is_number_integer()) throw ParseError(ctx + ": expected an integer");
  return j.get<std::int64_t>();
}

Box parse_bbox(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 4) {
    throw ParseError(ctx + ": expected an array of 4 numbers [x, y, w, h]");
  }
  const double x = require_number(j[0], ctx + "[0]");
  const double y = require_number(j[1], ctx + "[1]");
  const double w = require_number(j[2], ctx + "[2]");
  const double h = require_number(j[3], ctx + "[3]");
  if (w < 0.0 || h < 0.0) {
    throw ParseError(ctx + ": width and height must be non-negative");
  }
  return bbox_to_box(x, y, w, h);
}

bool parse_iscrowd(const json& ann, const std::string& ctx) {
  if (!ann.contains("iscrowd")) return false;
  const json& v = ann.at("iscrowd");
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<std::int64_t>() != 0;
  throw ParseError(ctx + ".iscrowd: expected 0/1 or a boolean");
}

}  // namespace

Box bbox_to_box(double x, double y, double w, double h) {
  return Box(x, y, x + w, y + h);
}

std::array<double, 4> box_to_bbox(const Box& box) {
  return {box.x1, box.y1, box.width(), box.height()};
}

GtDataset parse_coco_gt(const std::string& text, const std::string& name) {
  const json root = parse_text(text, name);
  if (!root.is_object()) {
    throw ParseError(name + ": top level must be an object");
  }
  if (!root.contains("images") || !root.at("images").is_array()) {
    throw ParseError(name + ": missing \"images\" array");
  }
  if (!root.contains("annotations") || !root.at("annotations").is_array()) {
    throw ParseError(name + ": missing \"annotations\" array");
  }

  GtDataset out;
  const json& images = root.at("images");
  out.images.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string ctx = name + ": images[" + std::to_string(i) + "]";
    const json& im = images[i];
    if (!im.is_object() || !im.contains("id")) {
      throw ParseError(ctx + ": expected an object with an \"id\"");
    }
    CocoImage rec;
    rec.id = require_int(im.at("id"), ctx + ".id");
    if (im.contains("width")) {
      rec.width = static_cast<int>(require_int(im.at("width"), ctx + ".width"));
    }
    if (im.contains("height")) {
      rec.height =
          static_cast<int>(require_int(im.at("height"), ctx + ".height"));
    }
    out.images.push_back(rec);
  }

  const json& anns = root.at("annotations");
  out.annotations.reserve(anns.size());
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string ctx = name + ": annotations[" + std::to_string(i) + "]";
    const json& ann = anns[i];
    if (!ann.is_object()) throw ParseError(ctx + ": expected an object");
    for (const char* key : {"id", "image_id", "bbox"}) {
      if (!ann.contains(key)) {
        throw ParseError(ctx + ": missing \"" + std::string(key) + "\"");
      }
    }
    GroundTruthBox gt;
    gt.gt_id = require_int(ann.at("id"), ctx + ".id");
    gt.image_id = require_int(ann.at("image_id"), ctx + ".image_id");
    gt.box = parse_bbox(ann.at("bbox"), ctx + ".bbox");
    gt.crowd = parse_iscrowd(ann, ctx);
    out.annotations.push_back(gt);
  }
  return out;
}

GtDataset load_coco_gt(const std::string& path) {
  return parse_coco_gt(read_file(path), path);
}

std::vector<Detection> parse_coco_detections(const std::string& text,
                                             const std::string& name) {
  const json root = parse_text(text, name);
  if (!root.is_array()) {
    throw ParseError(name + ": top level must be a results array");
  }
  std::vector<Detection> out;
  out.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string ctx = name + ": detections[" + std::to_string(i) + "]";
    const json& det = root[i];
    if (!det.is_object()) throw ParseError(ctx + ": expected an object");
    for (const char* key : {"image_id", "bbox", "score"}) {
      if (!det.contains(key)) {
        throw ParseError(ctx + ": missing \"" + std::string(key) + "\"");
      }
    }
    Detection rec;
    rec.image_id = require_int(det.at("image_id"), ctx + ".image_id");
    rec.box = parse_bbox(det.at("bbox"), ctx + ".bbox");
    rec.score = require_number(det.at("score"), ctx + ".score");
    if (det.contains("iou_score")) {
      rec.iou_score = require_number(det.at("iou_score"), ctx + ".iou_score");
    }
    out.push_back(rec);
  }
  return out;
}

std::vector<Detection> load_coco_detections(const std::string& path) {
  return parse_coco_detections(read_file(path), path);
}

void save_coco_gt(const std::string& path, const GtDataset& gt) {
  json root;
  json images = json::array();
  for (const CocoImage& im : gt.images) {
    images.push_back(
        {{"id", im.id}, {"width", im.width}, {"height", im.height}});
  }
  json anns = json::array();
  for (const GroundTruthBox& g : gt.annotations) {
    const auto bbox = box_to_bbox(g.box);
    anns.push_back({{"id", g.gt_id},
                    {"image_id", g.image_id},
                    {"bbox", bbox},
                    {"area", g.box.area()},
                    {"iscrowd", g.crowd ? 1 : 0},
                    {"category_id", 1}});
  }
  root["images"] = images;
  root["annotations"] = anns;
  root["categories"] = json::array({{{"id", 1}, {"name", "object"}}});

  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw std::runtime_error(path + ": cannot open for writing");
  outf << root.dump(2) << "\n";
}

void save_coco_detections(const std::string& path,
                          std::span<const Detection> dets) {
  json root = json::array();
  for (const Detection& d : dets) {
    const auto bbox = box_to_bbox(d.box);
    json rec = {{"image_id", d.image_id},
                {"bbox", bbox},
                {"score", d.score},
                {"category_id", 1}};
    if (d.iou_score) rec["iou_score"] = *d.iou_score;
    root.push_back(rec);
  }
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw std::runtime_error(path + ": cannot open for writing");
  outf << root.dump(2) << "\n";
}

}  // namespace proposalkit
