#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "proposalkit/assignment.hpp"
#include "proposalkit/random.hpp"

using namespace proposalkit;
using testutil::simota_oracle;

namespace {

std::set<std::size_t> positive_set(const Assignment& a) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (a.labels[i] >= 0) out.insert(i);
  }
  return out;
}

CostMatrix direct_cost_matrix(std::vector<double> cost,
                              std::vector<double> iou, std::size_t gts,
                              std::size_t anchors) {
  CostMatrix cm;
  cm.num_gts = gts;
  cm.num_anchors = anchors;
  cm.cost = MatD(gts, anchors);
  cm.iou = MatD(gts, anchors);
  cm.cost.data() = std::move(cost);
  cm.iou.data() = std::move(iou);
  cm.in_region = Mat<std::uint8_t>(gts, anchors, 1);
  cm.in_box = Mat<std::uint8_t>(gts, anchors, 1);
  return cm;
}

}  // namespace

TEST_CASE("build_costs worked values") {
  // Two anchors on a 16x8 image; GT equals the full image.
  const AnchorSet anchors = AnchorSet::generate({{8}, 1.0, {16, 8}});
  REQUIRE(anchors.size() == 2);
  const Box gt(0, 0, 16, 8);
  SamplerConfig cfg;
  cfg.center_ratio = 1.0;

  SUBCASE("perfect prediction has near-zero cost") {
    const std::vector<double> scores{1.0, 1.0};
    const std::vector<Box> preds{gt, gt};
    const CostMatrix cm = build_costs(anchors, {{gt}}, scores, preds, cfg);
    CHECK(cm.cost(0, 0) < 1e-6);
    CHECK(cm.cost(0, 0) >= 0.0);
    CHECK(cm.iou(0, 0) == 1.0);
  }

  SUBCASE("score 0.5 with IoU 0.5 costs ~4 ln 2") {
    const std::vector<double> scores{0.5, 0.5};
    const std::vector<Box> preds{Box(0, 0, 8, 8), Box(0, 0, 8, 8)};
    const CostMatrix cm = build_costs(anchors, {{gt}}, scores, preds, cfg);
    CHECK(cm.iou(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cm.cost(0, 0) == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-6));
  }

  SUBCASE("out-of-region anchors carry the penalty") {
    SamplerConfig tight = cfg;
    tight.center_ratio = 0.25;  // region around (8, 4): x in [6, 10]
    const std::vector<double> scores{0.5, 0.5};
    const std::vector<Box> preds{Box(0, 0, 8, 8), Box(0, 0, 8, 8)};
    const CostMatrix cm = build_costs(anchors, {{gt}}, scores, preds, tight);
    CHECK_FALSE(cm.in_region(0, 0));  // center (4, 4)
    CHECK_FALSE(cm.in_region(0, 1));  // center (12, 4)
    CHECK(cm.in_box(0, 0));
    const double base = 4.0 * std::log(2.0);
    CHECK(cm.cost(0, 0) == doctest::Approx(base + 1e5).epsilon(1e-9));
  }

  SUBCASE("empty GT list gives a zero-row matrix") {
    const std::vector<double> scores{0.5, 0.5};
    const std::vector<Box> preds = anchors.boxes();
    const CostMatrix cm = build_costs(anchors, {}, scores, preds, cfg);
    CHECK(cm.num_gts == 0);
    CHECK(cm.num_anchors == 2);
  }

  SUBCASE("misaligned inputs are rejected") {
    const std::vector<double> scores{0.5};
    const std::vector<Box> preds = anchors.boxes();
    CHECK_THROWS_AS(build_costs(anchors, {{gt}}, scores, preds, cfg),
                    std::invalid_argument);
  }

  SUBCASE("scores outside [0,1] are rejected") {
    const std::vector<double> scores{1.5, 0.5};
    const std::vector<Box> preds = anchors.boxes();
    CHECK_THROWS_AS(build_costs(anchors, {{gt}}, scores, preds, cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("build_costs is identical across thread counts") {
  const AnchorSet anchors = AnchorSet::generate({{8}, 1.0, {64, 64}});
  Rng rng(23);
  std::vector<Box> gts;
  for (int i = 0; i < 5; ++i) gts.push_back(testutil::random_box(rng, 64.0));
  std::vector<double> scores;
  std::vector<Box> preds;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    scores.push_back(rng.uniform(0.05, 0.95));
    preds.push_back(testutil::random_box(rng, 64.0));
  }
  SamplerConfig cfg;
  const CostMatrix one = build_costs(anchors, gts, scores, preds, cfg, 1);
  const CostMatrix many = build_costs(anchors, gts, scores, preds, cfg, 8);
  CHECK(one.cost == many.cost);
  CHECK(one.iou == many.iou);
  CHECK(one.in_region == many.in_region);
}

TEST_CASE("center_region_mask") {
  const AnchorSet anchors = AnchorSet::generate({{8}, 1.0, {64, 64}});
  const Box gt(0, 0, 40, 40);

  SUBCASE("GT center is always inside") {
    // anchor centered at (20, 20) == GT center
    const auto mask = center_region_mask(anchors, gt, 0.01);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      if (anchors.center(i).x == 20.0 && anchors.center(i).y == 20.0) idx = i;
    }
    CHECK(mask[idx]);
  }

  SUBCASE("ratio 0.25 shrinks to [15,25]^2") {
    const auto mask = center_region_mask(anchors, gt, 0.25);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const AnchorCenter c = anchors.center(i);
      const bool inside = c.x >= 15.0 && c.x <= 25.0 && c.y >= 15.0 && c.y <= 25.0;
      CHECK(static_cast<bool>(mask[i]) == inside);
      if (c.x == 20.0 && c.y == 12.0) CHECK_FALSE(mask[i]);
    }
  }

  SUBCASE("ratio 1.0 equals center-inside-box") {
    const auto mask = center_region_mask(anchors, gt, 1.0);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const AnchorCenter c = anchors.center(i);
      const bool inside =
          c.x >= gt.x1 && c.x <= gt.x2 && c.y >= gt.y1 && c.y <= gt.y2;
      CHECK(static_cast<bool>(mask[i]) == inside);
    }
  }

  SUBCASE("invalid ratio rejected") {
    CHECK_THROWS_AS(center_region_mask(anchors, gt, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(center_region_mask(anchors, gt, 1.5),
                    std::invalid_argument);
  }
}

TEST_CASE("assign_max_iou") {
  SUBCASE("high IoU is positive") {
    MatD ious(1, 1);
    ious(0, 0) = 0.9;
    const Assignment a = assign_max_iou(ious, 0.7, 0.3);
    CHECK(a.labels == std::vector<int>{0});
  }
  SUBCASE("best-anchor-per-GT forcing") {
    MatD ious(1, 1);
    ious(0, 0) = 0.5;  // between the thresholds
    const Assignment a = assign_max_iou(ious, 0.7, 0.3);
    CHECK(a.labels == std::vector<int>{0});
  }
  SUBCASE("low IoU anchors are negative") {
    MatD ious(1, 2);
    ious(0, 0) = 0.8;
    ious(0, 1) = 0.1;
    const Assignment a = assign_max_iou(ious, 0.7, 0.3);
    CHECK(a.labels == std::vector<int>{0, kNegativeLabel});
  }
  SUBCASE("between thresholds and not best -> ignore") {
    MatD ious(1, 2);
    ious(0, 0) = 0.8;
    ious(0, 1) = 0.5;
    const Assignment a = assign_max_iou(ious, 0.7, 0.3);
    CHECK(a.labels == std::vector<int>{0, kIgnoreLabel});
  }
  SUBCASE("zero-overlap GTs are not forced onto anchors") {
    MatD ious(1, 2);  // all zeros
    const Assignment a = assign_max_iou(ious, 0.7, 0.3);
    CHECK(a.labels == std::vector<int>{kNegativeLabel, kNegativeLabel});
    CHECK(a.unassigned_gts == std::vector<int>{0});
  }
}

TEST_CASE("sinkhorn basics") {
  SUBCASE("uniform 2x2 gives the uniform plan") {
    MatD cost(2, 2, 1.0);
    const std::vector<double> marg{0.5, 0.5};
    const SinkhornResult res = sinkhorn(cost, marg, marg, 0.5, 1000);
    CHECK(res.converged);
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(res.plan(i, j) == doctest::Approx(0.25).epsilon(1e-6));
      }
    }
  }

  SUBCASE("polarized 2x2 matches the brute-force LP") {
    MatD cost(2, 2);
    cost(0, 0) = 0.0; cost(0, 1) = 10.0;
    cost(1, 0) = 10.0; cost(1, 1) = 0.0;
    const std::vector<double> marg{0.5, 0.5};
    const SinkhornResult res = sinkhorn(cost, marg, marg, 0.05, 1000);
    CHECK(res.converged);

    // Brute force: the feasible 2x2 plans form a segment parameterized by
    // t = P00; scan it for the LP optimum.
    double best_t = 0.0, best_cost = 1e18;
    for (int i = 0; i <= 10000; ++i) {
      const double t = 0.5 * i / 10000.0;
      const double c = cost(0, 0) * t + cost(0, 1) * (0.5 - t) +
                       cost(1, 0) * (0.5 - t) + cost(1, 1) * t;
      if (c < best_cost) {
        best_cost = c;
        best_t = t;
      }
    }
    CHECK(best_t == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(res.plan(0, 0) == doctest::Approx(best_t).epsilon(1e-3));
    CHECK(res.plan(1, 1) == doctest::Approx(best_t).epsilon(1e-3));
    CHECK(res.plan(0, 0) > 0.49);
    CHECK(res.plan(1, 1) > 0.49);
  }

  SUBCASE("1xN plan row equals the demand") {
    MatD cost(1, 5);
    Rng rng(9);
    std::vector<double> demand(5);
    double sum = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      cost(0, j) = rng.uniform(0.0, 3.0);
      demand[j] = rng.uniform(0.1, 1.0);
      sum += demand[j];
    }
    for (double& d : demand) d /= sum;
    const std::vector<double> supply{1.0};
    const SinkhornResult res = sinkhorn(cost, supply, demand, 0.1, 1000);
    CHECK(res.converged);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(res.plan(0, j) == doctest::Approx(demand[j]).epsilon(1e-6));
    }
  }

  SUBCASE("input validation") {
    MatD cost(2, 2, 1.0);
    const std::vector<double> ok{0.5, 0.5};
    const std::vector<double> bad{0.6, 0.5};
    CHECK_THROWS_AS(sinkhorn(cost, ok, bad, 0.5, 100), std::invalid_argument);
    CHECK_THROWS_AS(sinkhorn(cost, ok, ok, 0.0, 100), std::invalid_argument);
    MatD nan_cost(2, 2, std::nan(""));
    CHECK_THROWS_AS(sinkhorn(nan_cost, ok, ok, 0.5, 100),
                    std::invalid_argument);
    const std::vector<double> neg{-0.5, 1.5};
    CHECK_THROWS_AS(sinkhorn(cost, neg, ok, 0.5, 100), std::invalid_argument);
  }
}

TEST_CASE("sinkhorn satisfies marginals on random balanced instances") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = static_cast<std::size_t>(rng.uniform_int(1, 20));
    const std::size_t cols = static_cast<std::size_t>(rng.uniform_int(1, 100));
    MatD cost(rows, cols);
    for (double& c : cost.data()) c = rng.uniform(0.0, 1.0);
    std::vector<double> supply(rows), demand(cols);
    double s = 0.0, d = 0.0;
    for (double& v : supply) { v = rng.uniform(0.1, 1.0); s += v; }
    for (double& v : demand) { v = rng.uniform(0.1, 1.0); d += v; }
    for (double& v : supply) v /= s;
    for (double& v : demand) v /= d;
    const SinkhornResult res = sinkhorn(cost, supply, demand, 0.1, 1000);
    CHECK(res.converged);
    CHECK(res.marginal_error < 1e-6);
    for (double p : res.plan.data()) CHECK(p >= 0.0);
  }
}

TEST_CASE("simota dynamic-k hand traces") {
  SUBCASE("IoUs 0.9/0.8/0.7 with top_k 10 give two positives") {
    CostMatrix cm = direct_cost_matrix(
        {0.1, 0.2, 0.3, 0.4}, {0.9, 0.8, 0.7, 0.0}, 1, 4);
    SamplerConfig cfg;
    cfg.top_k = 10;
    const Assignment a = assign_simota(cm, cfg);
    CHECK(a.num_positives() == 2);
    CHECK(a.labels == std::vector<int>{0, 0, kNegativeLabel, kNegativeLabel});
    CHECK(a.positives_per_gt == std::vector<int>{2});
  }

  SUBCASE("tiny IoUs still yield one positive") {
    CostMatrix cm =
        direct_cost_matrix({0.5, 0.4}, {0.05, 0.02}, 1, 2);
    SamplerConfig cfg;
    const Assignment a = assign_simota(cm, cfg);
    CHECK(a.num_positives() == 1);
    CHECK(a.labels == std::vector<int>{kNegativeLabel, 0});  // lower cost
  }

  SUBCASE("contested anchor goes to the cheaper GT") {
    CostMatrix cm = direct_cost_matrix(
        {0.2, 0.7}, {0.3, 0.4}, 2, 1);
    SamplerConfig cfg;
    const Assignment a = assign_simota(cm, cfg);
    CHECK(a.labels == std::vector<int>{0});
    CHECK(a.positives_per_gt == std::vector<int>{1, 0});
    CHECK(a.unassigned_gts == std::vector<int>{1});
  }
}

TEST_CASE("simota center-region fallback") {
  const AnchorSet anchors = AnchorSet::generate({{8}, 1.0, {16, 16}});
  REQUIRE(anchors.size() == 4);
  std::vector<double> scores(4, 0.7);
  const std::vector<Box> preds = anchors.boxes();
  SamplerConfig cfg;  // ratio 0.25

  SUBCASE("region missing all centers falls back to the full box") {
    // region [6,10]^2 contains no centers; the box holds all four.
    const Box gt(0, 0, 16, 16);
    const CostMatrix cm = build_costs(anchors, {{gt}}, scores, preds, cfg);
    for (std::size_t a = 0; a < 4; ++a) CHECK_FALSE(cm.in_region(0, a));
    const Assignment res = assign_simota(cm, cfg);
    CHECK(res.num_positives() >= 1);
    CHECK(res.unassigned_gts.empty());
  }

  SUBCASE("GT holding no anchor centers is reported unassigned") {
    const Box gt(5, 5, 7, 7);
    const CostMatrix cm = build_costs(anchors, {{gt}}, scores, preds, cfg);
    const Assignment res = assign_simota(cm, cfg);
    CHECK(res.num_positives() == 0);
    CHECK(res.unassigned_gts == std::vector<int>{0});
  }
}

namespace {

struct SmallScene {
  AnchorSet anchors;
  std::vector<Box> gts;
  std::vector<double> scores;
  std::vector<Box> preds;
};

CostMatrix scene_costs(const SmallScene& s, const SamplerConfig& cfg) {
  return build_costs(s.anchors, s.gts, s.scores, s.preds, cfg);
}

}  // namespace

TEST_CASE("simota agrees with the oracle on every small scene") {
  // 1, 2, and 4 anchor grids.
  const std::vector<PyramidSpec> grids = {
      {{8}, 1.0, {8, 8}}, {{8}, 1.0, {16, 8}}, {{8}, 1.0, {16, 16}}};
  const std::vector<Box> gt_palette = {
      Box(0, 0, 8, 8),    Box(0, 0, 16, 8),  Box(2, 2, 14, 14),
      Box(0, 0, 16, 16),  Box(5, 5, 7, 7),   Box(8, 0, 16, 16)};
  const std::vector<double> score_palette = {0.3, 0.7};

  int scenes = 0;
  for (const PyramidSpec& grid : grids) {
    const AnchorSet anchors = AnchorSet::generate(grid);
    const std::size_t n = anchors.size();

    std::vector<std::vector<Box>> gt_sets;
    for (const Box& g : gt_palette) gt_sets.push_back({g});
    for (std::size_t i = 0; i < gt_palette.size(); ++i) {
      for (std::size_t j = i + 1; j < gt_palette.size(); ++j) {
        gt_sets.push_back({gt_palette[i], gt_palette[j]});
      }
    }

    for (const auto& gts : gt_sets) {
      for (std::size_t score_bits = 0; score_bits < (1u << n); ++score_bits) {
        std::vector<double> scores(n);
        for (std::size_t a = 0; a < n; ++a) {
          scores[a] = score_palette[(score_bits >> a) & 1u];
        }
        for (int pred_mode = 0; pred_mode < 2; ++pred_mode) {
          std::vector<Box> preds = anchors.boxes();
          if (pred_mode == 1) {
            for (Box& p : preds) p = Box(p.x1 + 2, p.y1 + 1, p.x2 + 2, p.y2 + 1);
          }
          for (const bool dynamic : {true, false}) {
            SamplerConfig cfg;
            cfg.top_k = 2;
            cfg.dynamic_k = dynamic;
            const CostMatrix cm =
                build_costs(anchors, gts, scores, preds, cfg);
            const Assignment got = assign_simota(cm, cfg);
            const Assignment want = simota_oracle(cm, cfg);
            REQUIRE(got.labels == want.labels);
            REQUIRE(got.positives_per_gt == want.positives_per_gt);
            REQUIRE(got.unassigned_gts == want.unassigned_gts);
            ++scenes;
          }
        }
      }
    }
  }
  CHECK(scenes > 1000);
}

namespace {

SmallScene random_scene(Rng& rng, int max_gts = 5) {
  SmallScene s{AnchorSet::generate({{8}, 1.0, {64, 64}}), {}, {}, {}};
  const int num_gts = rng.uniform_int(1, max_gts);
  for (int g = 0; g < num_gts; ++g) {
    s.gts.push_back(testutil::random_box(rng, 64.0, 4.0));
  }
  for (std::size_t a = 0; a < s.anchors.size(); ++a) {
    s.scores.push_back(rng.uniform(0.05, 0.95));
    const Box base = s.anchors.box(a);
    const BoxDelta d{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                     rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)};
    s.preds.push_back(decode_delta(base, d));
  }
  return s;
}

}  // namespace

TEST_CASE("simota is deterministic and monotone in top_k") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const SmallScene s = random_scene(rng);
    SamplerConfig small_cfg;
    small_cfg.top_k = 5;
    SamplerConfig big_cfg;
    big_cfg.top_k = 15;

    const CostMatrix cm = scene_costs(s, small_cfg);
    const Assignment a1 = assign_simota(cm, small_cfg);
    const Assignment a2 = assign_simota(cm, small_cfg);
    CHECK(a1.labels == a2.labels);

    const Assignment big = assign_simota(cm, big_cfg);
    const auto small_set = positive_set(a1);
    const auto big_set = positive_set(big);
    CHECK(std::includes(big_set.begin(), big_set.end(), small_set.begin(),
                        small_set.end()));
  }
}

TEST_CASE("dual sampler") {
  SUBCASE("defaults give the subset property on random scenes") {
    Rng rng(101);
    for (int trial = 0; trial < 300; ++trial) {
      const SmallScene s = random_scene(rng);
      SamplerConfig cls_cfg;  // top_k 10
      SamplerConfig reg_cfg;
      reg_cfg.top_k = 20;
      const DualAssignment dual = assign_dual(
          s.anchors, s.gts, s.scores, s.preds, cls_cfg, reg_cfg);
      CHECK(dual.warnings.empty());
      const auto cls_set = positive_set(dual.cls);
      const auto reg_set = positive_set(dual.reg);
      CHECK(reg_set.size() >= cls_set.size());
      CHECK(std::includes(reg_set.begin(), reg_set.end(), cls_set.begin(),
                          cls_set.end()));
    }
  }

  SUBCASE("identical configs give identical assignments") {
    Rng rng(55);
    const SmallScene s = random_scene(rng);
    SamplerConfig cfg;
    const DualAssignment dual =
        assign_dual(s.anchors, s.gts, s.scores, s.preds, cfg, cfg);
    CHECK(dual.cls.labels == dual.reg.labels);
  }

  SUBCASE("single anchor, single GT: both heads positive") {
    const AnchorSet anchors = AnchorSet::generate({{8}, 1.0, {8, 8}});
    const std::vector<Box> gts{Box(0, 0, 8, 8)};
    const std::vector<double> scores{0.7};
    const std::vector<Box> preds = anchors.boxes();
    SamplerConfig cls_cfg, reg_cfg;
    reg_cfg.top_k = 20;
    const DualAssignment dual =
        assign_dual(anchors, gts, scores, preds, cls_cfg, reg_cfg);
    CHECK(dual.cls.labels == std::vector<int>{0});
    CHECK(dual.reg.labels == std::vector<int>{0});
  }

  SUBCASE("cls top_k above reg top_k warns") {
    const AnchorSet anchors = AnchorSet::generate({{8}, 1.0, {8, 8}});
    const std::vector<Box> gts{Box(0, 0, 8, 8)};
    const std::vector<double> scores{0.7};
    const std::vector<Box> preds = anchors.boxes();
    SamplerConfig cls_cfg, reg_cfg;
    cls_cfg.top_k = 20;
    reg_cfg.top_k = 10;
    const DualAssignment dual =
        assign_dual(anchors, gts, scores, preds, cls_cfg, reg_cfg);
    CHECK(dual.warnings.size() == 1);
  }
}

TEST_CASE("assign_ota roughly agrees with simota on easy scenes") {
  // A scene with well-separated GTs: the exact transport solution should
  // pick the same anchors as the greedy approximation.
  const AnchorSet anchors = AnchorSet::generate({{8}, 1.0, {64, 64}});
  const std::vector<Box> gts{Box(0, 0, 24, 24), Box(40, 40, 64, 64)};
  std::vector<double> scores(anchors.size(), 0.5);
  std::vector<Box> preds = anchors.boxes();
  SamplerConfig cfg;
  cfg.top_k = 5;
  const CostMatrix cm = build_costs(anchors, gts, scores, preds, cfg);

  const Assignment greedy = assign_simota(cm, cfg);
  const Assignment exact = assign_ota(cm, cfg);
  CHECK(exact.num_positives() == greedy.num_positives());
  CHECK(positive_set(exact) == positive_set(greedy));
}

TEST_CASE("sampler config validation") {
  SamplerConfig cfg;
  cfg.center_ratio = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = SamplerConfig{};
  cfg.top_k = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = SamplerConfig{};
  cfg.reg_weight = -1.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}
