#include "proposalkit/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "proposalkit/parallel.hpp"

namespace proposalkit {

const double kOutOfRegionPenalty = 1e5;

namespace {

constexpr double kIouEps = 1e-8;
constexpr double kScoreEps = 1e-7;

void check_matrix_shape(const CostMatrix& cm) {
  if (cm.cost.rows() != cm.num_gts || cm.cost.cols() != cm.num_anchors ||
      cm.iou.rows() != cm.num_gts || cm.iou.cols() != cm.num_anchors) {
    throw std::invalid_argument("cost matrix shape mismatch");
  }
}

bool center_in_region(double cx, double cy, const Box& gt, double ratio) {
  const double half_w = 0.5 * gt.width() * ratio;
  const double half_h = 0.5 * gt.height() * ratio;
  const double gx = gt.center_x();
  const double gy = gt.center_y();
  return cx >= gx - half_w && cx <= gx + half_w && cy >= gy - half_h &&
         cy <= gy + half_h;
}

bool center_in_stride_radius(double cx, double cy, int stride, const Box& gt,
                             double radius) {
  const double r = radius * stride;
  return std::abs(cx - gt.center_x()) <= r && std::abs(cy - gt.center_y()) <= r;
}

/// Dynamic k: floor of the sum of the top-q candidate IoUs, clamped to
/// [1, candidate count].
int dynamic_k_for(const std::vector<std::size_t>& candidates, const MatD& iou,
                  std::size_t gt, int top_k, bool dynamic) {
  const int n = static_cast<int>(candidates.size());
  if (!dynamic) return std::min(top_k, n);
  std::vector<double> ious;
  ious.reserve(candidates.size());
  for (std::size_t a : candidates) ious.push_back(iou(gt, a));
  std::sort(ious.begin(), ious.end(), std::greater<double>());
  const int q = std::min<int>(top_k, n);
  double sum = 0.0;
  for (int i = 0; i < q; ++i) sum += ious[i];
  int k = static_cast<int>(std::floor(sum));
  k = std::max(1, k);
  return std::min(k, n);
}

Assignment resolve_selection(const CostMatrix& cm,
                             const std::vector<std::vector<std::size_t>>& picks) {
  Assignment out;
  out.labels.assign(cm.num_anchors, kNegativeLabel);
  out.positives_per_gt.assign(cm.num_gts, 0);

  // Anchors claimed by several GTs keep the min-cost one (ties: lowest GT).
  std::vector<int> owner(cm.num_anchors, kNegativeLabel);
  for (std::size_t g = 0; g < picks.size(); ++g) {
    for (std::size_t a : picks[g]) {
      if (owner[a] == kNegativeLabel ||
          cm.cost(g, a) < cm.cost(static_cast<std::size_t>(owner[a]), a)) {
        owner[a] = static_cast<int>(g);
      }
    }
  }
  for (std::size_t a = 0; a < cm.num_anchors; ++a) {
    out.labels[a] = owner[a];
    if (owner[a] >= 0) ++out.positives_per_gt[owner[a]];
  }
  for (std::size_t g = 0; g < cm.num_gts; ++g) {
    if (out.positives_per_gt[g] == 0) {
      out.unassigned_gts.push_back(static_cast<int>(g));
    }
  }
  return out;
}

double log_sum_exp(const double* values, std::size_t n) {
  double max_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) max_v = std::max(max_v, values[i]);
  if (!std::isfinite(max_v)) return max_v;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(values[i] - max_v);
  return max_v + std::log(sum);
}

}  // namespace

void validate(const SamplerConfig& cfg) {
  if (!(cfg.center_ratio > 0.0 && cfg.center_ratio <= 1.0)) {
    throw std::invalid_argument("center_ratio must be in (0, 1]");
  }
  if (cfg.top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (!(cfg.reg_weight > 0.0)) {
    throw std::invalid_argument("reg_weight must be positive");
  }
  if (cfg.stride_radius <= 0.0) {
    throw std::invalid_argument("stride_radius must be positive");
  }
  if (!(cfg.neg_iou_thr <= cfg.pos_iou_thr)) {
    throw std::invalid_argument("neg_iou_thr must not exceed pos_iou_thr");
  }
  if (cfg.ota_eps <= 0.0 || cfg.ota_max_iter < 1) {
    throw std::invalid_argument("invalid OTA solver parameters");
  }
}

std::size_t Assignment::num_positives() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](int l) { return l >= 0; }));
}

std::vector<std::uint8_t> center_region_mask(const AnchorSet& anchors,
                                             const Box& gt,
                                             double center_ratio) {
  if (!(center_ratio > 0.0 && center_ratio <= 1.0)) {
    throw std::invalid_argument("center_ratio must be in (0, 1]");
  }
  std::vector<std::uint8_t> mask(anchors.size(), 0);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const Box& b = anchors.box(a);
    mask[a] = center_in_region(b.center_x(), b.center_y(), gt, center_ratio);
  }
  return mask;
}

CostMatrix build_costs(const AnchorSet& anchors, std::span<const Box> gts,
                       std::span<const double> cls_scores,
                       std::span<const Box> pred_boxes,
                       const SamplerConfig& cfg, int threads) {
  validate(cfg);
  if (cls_scores.size() != anchors.size() ||
      pred_boxes.size() != anchors.size()) {
    throw std::invalid_argument(
        "cls_scores and pred_boxes must align with the anchor indexing");
  }
  for (double s : cls_scores) {
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw std::invalid_argument("cls_scores must lie in [0, 1]");
    }
  }

  CostMatrix cm;
  cm.num_gts = gts.size();
  cm.num_anchors = anchors.size();
  cm.cost = MatD(cm.num_gts, cm.num_anchors);
  cm.iou = MatD(cm.num_gts, cm.num_anchors);
  cm.in_region = Mat<std::uint8_t>(cm.num_gts, cm.num_anchors);
  cm.in_box = Mat<std::uint8_t>(cm.num_gts, cm.num_anchors);

  cm.bg_cost.resize(cm.num_anchors);
  std::vector<double> cls_cost(cm.num_anchors);
  for (std::size_t a = 0; a < cm.num_anchors; ++a) {
    const double s = std::clamp(cls_scores[a], kScoreEps, 1.0 - kScoreEps);
    cls_cost[a] = -std::log(s);
    cm.bg_cost[a] = -std::log(1.0 - s);
  }

  parallel_for(cm.num_gts, effective_threads(threads),
               [&](std::size_t begin, std::size_t end) {
    for (std::size_t g = begin; g < end; ++g) {
      const Box& gt = gts[g];
      for (std::size_t a = 0; a < cm.num_anchors; ++a) {
        const double overlap = iou(pred_boxes[a], gt);
        cm.iou(g, a) = overlap;
        const double reg_cost =
            std::max(0.0, -std::log(std::min(overlap + kIouEps, 1.0)));
        const AnchorCenter c = anchors.center(a);
        const bool in_region =
            cfg.center_prior == CenterPrior::kShrunkBox
                ? center_in_region(c.x, c.y, gt, cfg.center_ratio)
                : center_in_stride_radius(c.x, c.y, c.stride, gt,
                                          cfg.stride_radius);
        cm.in_region(g, a) = in_region;
        cm.in_box(g, a) = center_in_region(c.x, c.y, gt, 1.0);
        double total = cls_cost[a] + cfg.reg_weight * reg_cost;
        if (!in_region) total += kOutOfRegionPenalty;
        cm.cost(g, a) = total;
      }
    }
  });
  return cm;
}

Assignment assign_max_iou(const MatD& ious, double pos_thr, double neg_thr) {
  if (!(neg_thr <= pos_thr)) {
    throw std::invalid_argument("neg_thr must not exceed pos_thr");
  }
  const std::size_t num_gts = ious.rows();
  const std::size_t num_anchors = ious.cols();
  Assignment out;
  out.labels.assign(num_anchors, kNegativeLabel);
  out.positives_per_gt.assign(num_gts, 0);

  for (std::size_t a = 0; a < num_anchors; ++a) {
    double best = -1.0;
    int best_gt = kNegativeLabel;
    for (std::size_t g = 0; g < num_gts; ++g) {
      if (ious(g, a) > best) {
        best = ious(g, a);
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt == kNegativeLabel) continue;  // no GTs at all
    if (best >= pos_thr) {
      out.labels[a] = best_gt;
    } else if (best >= neg_thr) {
      out.labels[a] = kIgnoreLabel;
    }
  }

  // Every GT gets its best anchor, provided that anchor overlaps it at all.
  for (std::size_t g = 0; g < num_gts; ++g) {
    double best = 0.0;
    int best_anchor = -1;
    for (std::size_t a = 0; a < num_anchors; ++a) {
      if (ious(g, a) > best) {
        best = ious(g, a);
        best_anchor = static_cast<int>(a);
      }
    }
    if (best_anchor >= 0) out.labels[best_anchor] = static_cast<int>(g);
  }

  for (int l : out.labels) {
    if (l >= 0) ++out.positives_per_gt[l];
  }
  for (std::size_t g = 0; g < num_gts; ++g) {
    if (out.positives_per_gt[g] == 0) {
      out.unassigned_gts.push_back(static_cast<int>(g));
    }
  }
  return out;
}

SinkhornResult sinkhorn(const MatD& cost, std::span<const double> supply,
                        std::span<const double> demand, double eps,
                        int max_iter, double tol) {
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  if (supply.size() != rows || demand.size() != cols) {
    throw std::invalid_argument("sinkhorn: marginal sizes must match the cost");
  }
  if (eps <= 0.0) throw std::invalid_argument("sinkhorn: eps must be positive");
  if (max_iter < 1) throw std::invalid_argument("sinkhorn: max_iter must be >= 1");
  for (double v : cost.data()) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("sinkhorn: cost entries must be finite");
    }
  }
  double supply_sum = 0.0, demand_sum = 0.0;
  for (double v : supply) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("sinkhorn: supply must be non-negative");
    }
    supply_sum += v;
  }
  for (double v : demand) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("sinkhorn: demand must be non-negative");
    }
    demand_sum += v;
  }
  if (std::abs(supply_sum - demand_sum) > 1e-9) {
    throw std::invalid_argument("sinkhorn: supply and demand must balance");
  }

  const double neg_inf = -std::numeric_limits<double>::infinity();
  // Scaled potentials: plan_ij = exp(a_i + b_j + m_ij), m = -cost/eps.
  MatD m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = -cost(i, j) / eps;
  }
  std::vector<double> log_supply(rows), log_demand(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    log_supply[i] = supply[i] > 0.0 ? std::log(supply[i]) : neg_inf;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    log_demand[j] = demand[j] > 0.0 ? std::log(demand[j]) : neg_inf;
  }

  std::vector<double> a(rows, 0.0), b(cols, 0.0), scratch(std::max(rows, cols));

  SinkhornResult res;
  res.plan = MatD(rows, cols);
  auto compute_error = [&]() {
    double err = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double p = std::exp(a[i] + b[j] + m(i, j));
        res.plan(i, j) = p;
        row_sum += p;
      }
      err = std::max(err, std::abs(row_sum - supply[i]));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      double col_sum = 0.0;
      for (std::size_t i = 0; i < rows; ++i) col_sum += res.plan(i, j);
      err = std::max(err, std::abs(col_sum - demand[j]));
    }
    return err;
  };

  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < rows; ++i) {
      if (log_supply[i] == neg_inf) {
        a[i] = neg_inf;
        continue;
      }
      for (std::size_t j = 0; j < cols; ++j) scratch[j] = b[j] + m(i, j);
      a[i] = log_supply[i] - log_sum_exp(scratch.data(), cols);
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (log_demand[j] == neg_inf) {
        b[j] = neg_inf;
        continue;
      }
      for (std::size_t i = 0; i < rows; ++i) scratch[i] = a[i] + m(i, j);
      b[j] = log_demand[j] - log_sum_exp(scratch.data(), rows);
    }
    res.iterations = it + 1;
    res.marginal_error = compute_error();
    if (res.marginal_error < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

Assignment assign_simota(const CostMatrix& cm, const SamplerConfig& cfg) {
  validate(cfg);
  check_matrix_shape(cm);

  std::vector<std::vector<std::size_t>> picks(cm.num_gts);
  for (std::size_t g = 0; g < cm.num_gts; ++g) {
    std::vector<std::size_t> candidates;
    for (std::size_t a = 0; a < cm.num_anchors; ++a) {
      if (cm.in_region(g, a)) candidates.push_back(a);
    }
    if (candidates.empty()) {
      for (std::size_t a = 0; a < cm.num_anchors; ++a) {
        if (cm.in_box(g, a)) candidates.push_back(a);
      }
    }
    if (candidates.empty()) continue;  // reported via unassigned_gts

    const int k = dynamic_k_for(candidates, cm.iou, g, cfg.top_k, cfg.dynamic_k);
    std::sort(candidates.begin(), candidates.end(),
              [&](std::size_t lhs, std::size_t rhs) {
                const double cl = cm.cost(g, lhs);
                const double cr = cm.cost(g, rhs);
                if (cl != cr) return cl < cr;
                return lhs < rhs;
              });
    candidates.resize(static_cast<std::size_t>(k));
    picks[g] = std::move(candidates);
  }
  return resolve_selection(cm, picks);
}

Assignment assign_ota(const CostMatrix& cm, const SamplerConfig& cfg) {
  validate(cfg);
  check_matrix_shape(cm);
  if (cm.bg_cost.size() != cm.num_anchors) {
    throw std::invalid_argument("assign_ota requires background costs");
  }

  Assignment out;
  out.labels.assign(cm.num_anchors, kNegativeLabel);
  out.positives_per_gt.assign(cm.num_gts, 0);
  if (cm.num_gts == 0 || cm.num_anchors == 0) {
    for (std::size_t g = 0; g < cm.num_gts; ++g) {
      out.unassigned_gts.push_back(static_cast<int>(g));
    }
    return out;
  }

  // Suppliers: one per GT with capacity k_g, plus background absorbing the
  // rest. Unit demand per anchor.
  std::vector<double> supply(cm.num_gts + 1, 0.0);
  double positive_mass = 0.0;
  for (std::size_t g = 0; g < cm.num_gts; ++g) {
    std::vector<std::size_t> candidates;
    for (std::size_t a = 0; a < cm.num_anchors; ++a) {
      if (cm.in_region(g, a)) candidates.push_back(a);
    }
    if (candidates.empty()) {
      for (std::size_t a = 0; a < cm.num_anchors; ++a) {
        if (cm.in_box(g, a)) candidates.push_back(a);
      }
    }
    const int k = candidates.empty()
                      ? 1
                      : dynamic_k_for(candidates, cm.iou, g, cfg.top_k,
                                      cfg.dynamic_k);
    supply[g] = static_cast<double>(k);
    positive_mass += supply[g];
  }
  const double total = static_cast<double>(cm.num_anchors);
  if (positive_mass > total) {
    throw std::invalid_argument(
        "assign_ota: demanded positives exceed the anchor count");
  }
  supply[cm.num_gts] = total - positive_mass;

  MatD cost(cm.num_gts + 1, cm.num_anchors);
  for (std::size_t g = 0; g < cm.num_gts; ++g) {
    for (std::size_t a = 0; a < cm.num_anchors; ++a) cost(g, a) = cm.cost(g, a);
  }
  for (std::size_t a = 0; a < cm.num_anchors; ++a) {
    cost(cm.num_gts, a) = cm.bg_cost[a];
  }
  std::vector<double> demand(cm.num_anchors, 1.0);

  const SinkhornResult plan =
      sinkhorn(cost, supply, demand, cfg.ota_eps, cfg.ota_max_iter);

  for (std::size_t a = 0; a < cm.num_anchors; ++a) {
    double best = plan.plan(cm.num_gts, a);  // background
    int label = kNegativeLabel;
    for (std::size_t g = 0; g < cm.num_gts; ++g) {
      if (plan.plan(g, a) > best) {
        best = plan.plan(g, a);
        label = static_cast<int>(g);
      }
    }
    out.labels[a] = label;
    if (label >= 0) ++out.positives_per_gt[label];
  }
  for (std::size_t g = 0; g < cm.num_gts; ++g) {
    if (out.positives_per_gt[g] == 0) {
      out.unassigned_gts.push_back(static_cast<int>(g));
    }
  }
  return out;
}

namespace {

Assignment run_assigner(const CostMatrix& cm, const SamplerConfig& cfg) {
  switch (cfg.mode) {
    case AssignMode::kMaxIou:
      return assign_max_iou(cm.iou, cfg.pos_iou_thr, cfg.neg_iou_thr);
    case AssignMode::kOta:
      return assign_ota(cm, cfg);
    case AssignMode::kSimOta:
      return assign_simota(cm, cfg);
  }
  throw std::logic_error("unknown assignment mode");
}

}  // namespace

DualAssignment assign_dual(const AnchorSet& anchors, std::span<const Box> gts,
                           std::span<const double> cls_scores,
                           std::span<const Box> pred_boxes,
                           const SamplerConfig& cls_cfg,
                           const SamplerConfig& reg_cfg, int threads) {
  validate(cls_cfg);
  validate(reg_cfg);

  DualAssignment out;
  if (cls_cfg.top_k > reg_cfg.top_k) {
    out.warnings.push_back(
        "cls sampler top_k exceeds reg top_k; the regression head is expected "
        "to receive at least as many positives as classification");
  }

  const CostMatrix cls_cost =
      build_costs(anchors, gts, cls_scores, pred_boxes, cls_cfg, threads);
  out.cls = run_assigner(cls_cost, cls_cfg);
  // The cost matrix only depends on the center prior and reg_weight; reuse
  // it when both heads agree on those.
  if (cls_cfg.center_ratio == reg_cfg.center_ratio &&
      cls_cfg.center_prior == reg_cfg.center_prior &&
      cls_cfg.stride_radius == reg_cfg.stride_radius &&
      cls_cfg.reg_weight == reg_cfg.reg_weight) {
    out.reg = run_assigner(cls_cost, reg_cfg);
  } else {
    const CostMatrix reg_cost =
        build_costs(anchors, gts, cls_scores, pred_boxes, reg_cfg, threads);
    out.reg = run_assigner(reg_cost, reg_cfg);
  }
  return out;
}

}  // namespace proposalkit
