#include "proposalkit/geometry.hpp"

#include <algorithm>

namespace proposalkit {

const double kDefaultDeltaClamp = std::log(1000.0 / 16.0);

void validate_image_size(const ImageSize& img) {
  if (img.width < 1 || img.height < 1) {
    throw std::invalid_argument("image size must be at least 1x1");
  }
}

Box::Box(double x1_, double y1_, double x2_, double y2_)
    : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) ||
      !std::isfinite(y2)) {
    throw std::invalid_argument("box coordinates must be finite");
  }
  if (x2 < x1 || y2 < y1) {
    throw std::invalid_argument("inverted box: requires x2 >= x1 and y2 >= y1");
  }
}

namespace {

double intersection_area(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

}  // namespace

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double giou(const Box& a, const Box& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0) {
    throw std::invalid_argument("giou requires boxes with positive area");
  }
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double cw = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
  const double ch = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
  const double enclosing = cw * ch;
  // max(0, .) keeps giou <= iou exact under floating point when C ~ U.
  return inter / uni - std::max(0.0, enclosing - uni) / enclosing;
}

BoxDelta encode_delta(const Box& anchor, const Box& target) {
  if (anchor.width() <= 0.0 || anchor.height() <= 0.0) {
    throw std::invalid_argument("encode_delta: anchor must have positive size");
  }
  if (target.width() <= 0.0 || target.height() <= 0.0) {
    throw std::invalid_argument("encode_delta: target must have positive size");
  }
  const double aw = anchor.width();
  const double ah = anchor.height();
  return BoxDelta{(target.center_x() - anchor.center_x()) / aw,
                  (target.center_y() - anchor.center_y()) / ah,
                  std::log(target.width() / aw),
                  std::log(target.height() / ah)};
}

Box decode_delta(const Box& anchor, const BoxDelta& delta, double max_delta) {
  if (anchor.width() <= 0.0 || anchor.height() <= 0.0) {
    throw std::invalid_argument("decode_delta: anchor must have positive size");
  }
  if (max_delta < 0.0) max_delta = kDefaultDeltaClamp;
  const double dw = std::clamp(delta.dw, -max_delta, max_delta);
  const double dh = std::clamp(delta.dh, -max_delta, max_delta);
  const double cx = anchor.center_x() + delta.dx * anchor.width();
  const double cy = anchor.center_y() + delta.dy * anchor.height();
  const double w = anchor.width() * std::exp(dw);
  const double h = anchor.height() * std::exp(dh);
  return Box(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
}

Box hflip(const Box& b, const ImageSize& img) {
  validate_image_size(img);
  const double w = static_cast<double>(img.width);
  return Box(w - b.x2, b.y1, w - b.x1, b.y2);
}

Box clip(const Box& b, const ImageSize& img) {
  validate_image_size(img);
  const double w = static_cast<double>(img.width);
  const double h = static_cast<double>(img.height);
  return Box(std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h),
             std::clamp(b.x2, 0.0, w), std::clamp(b.y2, 0.0, h));
}

}  // namespace proposalkit
