#include "proposalkit/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace proposalkit {

namespace {

std::vector<std::size_t> score_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });
  return order;
}

}  // namespace

std::vector<Detection> nms(std::span<const Detection> dets, double iou_thr) {
  for (const Detection& d : dets) {
    if (!std::isfinite(d.score)) {
      throw std::invalid_argument("nms: detection scores must be finite");
    }
  }
  const std::vector<std::size_t> order = score_order(dets);
  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    const Box& candidate = dets[idx].box;
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (iou(candidate, k.box) > iou_thr) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(dets[idx]);
  }
  return kept;
}

std::vector<Detection> topk_proposals(std::span<const Detection> dets, int k) {
  if (k < 0) throw std::invalid_argument("topk_proposals: k must be >= 0");
  std::vector<std::size_t> order = score_order(dets);
  if (order.size() > static_cast<std::size_t>(k)) {
    order.resize(static_cast<std::size_t>(k));
  }
  std::vector<Detection> out;
  out.reserve(order.size());
  for (std::size_t idx : order) out.push_back(dets[idx]);
  return out;
}

std::vector<Detection> cascade_refine(const AnchorSet& anchors,
                                      std::span<const StageRefiner> stages,
                                      const ImageSize& img) {
  if (stages.empty()) {
    throw std::invalid_argument("cascade_refine: at least one stage required");
  }
  validate_image_size(img);

  std::vector<Box> boxes = anchors.boxes();
  std::vector<double> scores(boxes.size(), 0.0);
  for (const StageRefiner& stage : stages) {
    const std::vector<StageOutput> outputs = stage(boxes);
    if (outputs.size() != boxes.size()) {
      throw std::invalid_argument(
          "cascade_refine: stage output length mismatch");
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      boxes[i] = decode_delta(boxes[i], outputs[i].delta);
      scores[i] = outputs[i].score;
    }
  }

  std::vector<Detection> dets;
  dets.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    dets.push_back(Detection{clip(boxes[i], img), scores[i], std::nullopt, 0});
  }
  return dets;
}

std::vector<Detection> merge_flip_tta(std::span<const Detection> orig,
                                      std::span<const Detection> flipped,
                                      const ImageSize& img, double iou_thr) {
  std::vector<Detection> combined(orig.begin(), orig.end());
  combined.reserve(orig.size() + flipped.size());
  for (Detection d : flipped) {
    d.box = hflip(d.box, img);
    combined.push_back(d);
  }
  return nms(combined, iou_thr);
}

}  // namespace proposalkit
