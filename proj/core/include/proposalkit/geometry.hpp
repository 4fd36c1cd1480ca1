#pragma once

#include <cmath>
#include <stdexcept>

namespace proposalkit {

struct ImageSize {
  int width = 0;
  int height = 0;

  bool operator==(const ImageSize&) const = default;
};

/// Throws std::invalid_argument unless width and height are >= 1.
void validate_image_size(const ImageSize& img);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned rectangle in continuous pixel coordinates, corner form.
/// Zero-area boxes are allowed; inverted or non-finite boxes are rejected
/// at construction.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  Box() = default;
  Box(double x1_, double y1_, double x2_, double y2_);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  bool operator==(const Box&) const = default;
};

/// Center-offset / log-size box coding. dx, dy are offsets relative to the
/// anchor width/height; dw, dh are log size ratios.
struct BoxDelta {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;

  bool operator==(const BoxDelta&) const = default;
};

/// Clamp applied to dw/dh before exponentiation, ln(1000/16).
extern const double kDefaultDeltaClamp;

/// Intersection over union in [0, 1]. Degenerate (zero-area) boxes yield 0
/// against anything, including themselves.
double iou(const Box& a, const Box& b);

/// Generalized IoU in [-1, 1]: IoU - (C - U)/C with C the smallest enclosing
/// box area and U the union area. Throws std::invalid_argument for
/// degenerate (zero-area) inputs.
double giou(const Box& a, const Box& b);

/// Deltas that map `anchor` onto `target`. Throws if either box has a
/// non-positive width or height.
BoxDelta encode_delta(const Box& anchor, const Box& target);

/// Applies `delta` to `anchor`: cx' = cx + dx*w, w' = w*exp(dw) (same for
/// y/h), with dw/dh clamped to [-max_delta, max_delta] first. Throws if the
/// anchor has a non-positive width or height.
Box decode_delta(const Box& anchor, const BoxDelta& delta,
                 double max_delta = -1.0);

/// Mirror about the vertical image axis: x1' = W - x2, x2' = W - x1.
Box hflip(const Box& b, const ImageSize& img);

/// Clamp coordinates to [0, W] x [0, H].
Box clip(const Box& b, const ImageSize& img);

}  // namespace proposalkit
