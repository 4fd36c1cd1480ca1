#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "eval_reference.hpp"
#include "helpers.hpp"
#include "proposalkit/coco_io.hpp"
#include "proposalkit/eval.hpp"
#include "proposalkit/random.hpp"
#include "proposalkit/synthetic.hpp"

using namespace proposalkit;

namespace {

std::vector<testutil::RefScene> to_ref_scenes(const GtDataset& gt,
                                              const std::vector<Detection>& dets) {
  std::vector<testutil::RefScene> scenes;
  for (const CocoImage& im : gt.images) {
    testutil::RefScene s;
    for (const GroundTruthBox& g : gt.annotations) {
      if (g.image_id == im.id) s.gts.push_back(g);
    }
    for (const Detection& d : dets) {
      if (d.image_id == im.id) s.dets.push_back(d);
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

GtDataset simple_gt() {
  GtDataset gt;
  gt.images = {{1, 100, 100}};
  gt.annotations = {{Box(10, 10, 20, 20), 1, 1, false}};
  return gt;
}

}  // namespace

TEST_CASE("match_image worked examples") {
  const std::vector<GroundTruthBox> gts{{Box(0, 0, 10, 10), 1, 1, false}};

  SUBCASE("perfect detection is a TP") {
    const std::vector<Detection> dets{{Box(0, 0, 10, 10), 1.0, std::nullopt, 1}};
    const auto m = match_image(dets, gts, 0.5, 100);
    REQUIRE(m.size() == 1);
    CHECK(m[0].gt_index == 0);
    CHECK_FALSE(m[0].ignored);
  }

  SUBCASE("IoU 0.6 matches at 0.5 but not at 0.75") {
    const std::vector<Detection> dets{{Box(0, 0, 10, 6), 1.0, std::nullopt, 1}};
    CHECK(match_image(dets, gts, 0.5, 100)[0].gt_index == 0);
    CHECK(match_image(dets, gts, 0.75, 100)[0].gt_index == -1);
  }

  SUBCASE("two detections on one GT: higher score wins") {
    const std::vector<Detection> dets{
        {Box(0, 0, 10, 10), 0.6, std::nullopt, 1},
        {Box(0, 0, 10, 9), 0.9, std::nullopt, 1}};
    const auto m = match_image(dets, gts, 0.5, 100);
    REQUIRE(m.size() == 2);
    CHECK(m[0].det_index == 1);  // score 0.9 first
    CHECK(m[0].gt_index == 0);
    CHECK(m[1].gt_index == -1);  // the GT is taken
  }

  SUBCASE("crowd GTs absorb without rewarding") {
    const std::vector<GroundTruthBox> crowd_gts{
        {Box(0, 0, 10, 10), 1, 1, false}, {Box(50, 50, 90, 90), 1, 2, true}};
    const std::vector<Detection> dets{
        {Box(60, 60, 70, 70), 0.9, std::nullopt, 1}};  // inside the crowd
    const auto m = match_image(dets, crowd_gts, 0.5, 100);
    REQUIRE(m.size() == 1);
    CHECK(m[0].gt_index == 1);
    CHECK(m[0].ignored);
  }

  SUBCASE("duplicate gt ids are rejected") {
    const std::vector<GroundTruthBox> dup{{Box(0, 0, 10, 10), 1, 7, false},
                                          {Box(20, 20, 30, 30), 1, 7, false}};
    CHECK_THROWS_AS(match_image({}, dup, 0.5, 100), std::invalid_argument);
  }

  SUBCASE("max_dets truncates by score") {
    const std::vector<Detection> dets{
        {Box(0, 0, 10, 10), 0.2, std::nullopt, 1},
        {Box(40, 40, 50, 50), 0.9, std::nullopt, 1}};
    const auto m = match_image(dets, gts, 0.5, 1);
    REQUIRE(m.size() == 1);
    CHECK(m[0].det_index == 1);
    CHECK(m[0].gt_index == -1);
  }
}

TEST_CASE("match_image agrees with the exhaustive reference on small scenes") {
  Rng rng(71);
  for (int trial = 0; trial < 500; ++trial) {
    testutil::RefScene scene;
    const int num_gts = rng.uniform_int(0, 3);
    for (int g = 0; g < num_gts; ++g) {
      scene.gts.push_back(GroundTruthBox{testutil::random_box(rng, 60.0), 1,
                                         g + 1, rng.bernoulli(0.2)});
    }
    const int num_dets = rng.uniform_int(0, 5);
    for (int d = 0; d < num_dets; ++d) {
      scene.dets.push_back(Detection{testutil::random_box(rng, 60.0),
                                     rng.uniform(0.0, 1.0), std::nullopt, 1});
    }
    for (double thr : {0.5, 0.75}) {
      const auto got = match_image(scene.dets, scene.gts, thr, 100);
      const auto want = testutil::ref_match(scene, thr, 100);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        const int outcome = got[i].gt_index < 0 ? 0 : (got[i].ignored ? 2 : 1);
        REQUIRE(outcome == want[i]);
      }
    }
  }
}

TEST_CASE("evaluate trivial cases") {
  SUBCASE("ground truth as detections scores 1.0 everywhere") {
    SynthConfig synth;
    synth.seed = 5;
    synth.num_images = 20;
    synth.jitter = 0.0;
    const auto scenes = generate_scenes(synth);
    const GtDataset gt = scenes_to_gt(scenes);
    const std::vector<Detection> dets = scenes_to_detections(scenes);
    const EvalReport report = evaluate(gt, dets);
    // Budgets below the per-image GT count cannot recall everything, so
    // only the large budgets must saturate.
    for (const auto& [k, v] : report.ar_at) {
      if (k >= 100) CHECK(v == 1.0);
    }
    CHECK(report.ap == 1.0);
    for (const auto& [t, v] : report.ap_at) CHECK(v == 1.0);
  }

  SUBCASE("one GT per image saturates every budget") {
    SynthConfig synth;
    synth.seed = 7;
    synth.num_images = 20;
    synth.jitter = 0.0;
    synth.mean_gts_per_image = 1;
    const auto scenes = generate_scenes(synth);
    const EvalReport report =
        evaluate(scenes_to_gt(scenes), scenes_to_detections(scenes));
    for (const auto& [k, v] : report.ar_at) CHECK(v == 1.0);
    CHECK(report.ap == 1.0);
  }

  SUBCASE("no detections scores 0.0") {
    const EvalReport report = evaluate(simple_gt(), {});
    for (const auto& [k, v] : report.ar_at) CHECK(v == 0.0);
    CHECK(report.ap == 0.0);
  }

  SUBCASE("no valid ground truth reports the -1 sentinel") {
    GtDataset gt;
    gt.images = {{1, 100, 100}};
    gt.annotations = {{Box(10, 10, 20, 20), 1, 1, true}};  // crowd only
    const std::vector<Detection> dets{{Box(0, 0, 5, 5), 0.9, std::nullopt, 1}};
    const EvalReport report = evaluate(gt, dets);
    CHECK(report.ap == -1.0);
    for (const auto& [k, v] : report.ar_at) CHECK(v == -1.0);
    CHECK_FALSE(report.warnings.empty());
  }
}

TEST_CASE("single-detection IoU-0.6 case") {
  const std::string dir = testutil::data_dir();
  const EvalReport report = evaluate_files(dir + "/fixture_single_gt.json",
                                           dir + "/fixture_single_det.json");
  CHECK(report.ar_at.at(1) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(report.ap_at.at(0.5) == 1.0);
  CHECK(report.ap_at.at(0.75) == 0.0);
  CHECK(report.ap == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("three-image fixture matches hand computation and the reference") {
  const std::string dir = testutil::data_dir();
  const GtDataset gt = load_coco_gt(dir + "/fixture3_gt.json");
  const std::vector<Detection> dets =
      load_coco_detections(dir + "/fixture3_det.json");
  const EvalReport report = evaluate(gt, dets);

  // Hand-traced: thresholds {.5,.55,.6} see TPs {d1, d2, im2}; the rest see
  // {d2, im2}; one always-FP detection and one crowd-absorbed detection.
  CHECK(report.ar_at.at(1) == doctest::Approx(0.325).epsilon(1e-12));
  CHECK(report.ar_at.at(10) == doctest::Approx(0.575).epsilon(1e-12));
  CHECK(report.ar_at.at(100) == doctest::Approx(0.575).epsilon(1e-12));
  CHECK(report.ap_at.at(0.5) == doctest::Approx(69.75 / 101.0).epsilon(1e-12));
  CHECK(report.ap_at.at(0.75) == doctest::Approx(25.5 / 101.0).epsilon(1e-12));
  CHECK(report.ap == doctest::Approx(387.75 / 1010.0).epsilon(1e-12));

  const testutil::RefReport ref =
      testutil::reference_evaluate(to_ref_scenes(gt, dets), EvalConfig{});
  for (const auto& [budget, value] : report.ar_at) {
    CHECK(value == doctest::Approx(ref.ar.at(budget)).epsilon(1e-12));
  }
  CHECK(report.ap == doctest::Approx(ref.ap).epsilon(1e-12));
  for (const auto& [thr, value] : report.ap_at) {
    CHECK(value == doctest::Approx(ref.ap_at.at(thr)).epsilon(1e-12));
  }
}

TEST_CASE("evaluator agrees with the reference on random noisy scenes") {
  SynthConfig synth;
  synth.seed = 11;
  synth.num_images = 30;
  synth.jitter = 6.0;
  synth.mean_gts_per_image = 4;
  const auto scenes = generate_scenes(synth);
  const GtDataset gt = scenes_to_gt(scenes);
  const std::vector<Detection> dets = scenes_to_detections(scenes);

  const EvalReport report = evaluate(gt, dets);
  const testutil::RefReport ref =
      testutil::reference_evaluate(to_ref_scenes(gt, dets), EvalConfig{});
  for (const auto& [budget, value] : report.ar_at) {
    CHECK(value == doctest::Approx(ref.ar.at(budget)).epsilon(1e-12));
  }
  CHECK(report.ap == doctest::Approx(ref.ap).epsilon(1e-12));
}

TEST_CASE("AR is monotone in the budget") {
  SynthConfig synth;
  synth.seed = 13;
  synth.num_images = 25;
  synth.jitter = 8.0;
  const auto scenes = generate_scenes(synth);
  const EvalReport report =
      evaluate(scenes_to_gt(scenes), scenes_to_detections(scenes));
  double prev = -1.0;
  for (const auto& [budget, value] : report.ar_at) {
    CHECK(value >= prev);
    prev = value;
  }
}

TEST_CASE("metrics depend only on the score ordering") {
  SynthConfig synth;
  synth.seed = 17;
  synth.num_images = 20;
  synth.jitter = 5.0;
  const auto scenes = generate_scenes(synth);
  const GtDataset gt = scenes_to_gt(scenes);
  std::vector<Detection> dets = scenes_to_detections(scenes);
  const EvalReport before = evaluate(gt, dets);
  for (Detection& d : dets) d.score *= 0.5;  // exact, order-preserving
  const EvalReport after = evaluate(gt, dets);
  CHECK(before.ar_at == after.ar_at);
  CHECK(before.ap == after.ap);
  CHECK(before.ap_at == after.ap_at);
}

TEST_CASE("appending a weakest detection never lowers AR") {
  SynthConfig synth;
  synth.seed = 19;
  synth.num_images = 10;
  synth.jitter = 6.0;
  const auto scenes = generate_scenes(synth);
  const GtDataset gt = scenes_to_gt(scenes);
  std::vector<Detection> dets = scenes_to_detections(scenes);
  const EvalReport before = evaluate(gt, dets);

  Rng rng(97);
  dets.push_back(Detection{testutil::random_box(rng, 200.0), 1e-6,
                           std::nullopt, gt.images.front().id});
  const EvalReport after = evaluate(gt, dets);
  for (const auto& [budget, value] : after.ar_at) {
    CHECK(value >= before.ar_at.at(budget) - 1e-12);
  }
}

TEST_CASE("removing an always-FP detection never lowers AP") {
  SynthConfig synth;
  synth.seed = 23;
  synth.num_images = 12;
  synth.jitter = 10.0;
  const auto scenes = generate_scenes(synth);
  const GtDataset gt = scenes_to_gt(scenes);
  const std::vector<Detection> dets = scenes_to_detections(scenes);
  const EvalReport before = evaluate(gt, dets);

  const DatasetMatches matches = match_dataset(gt, dets, EvalConfig{});
  // Find a detection that is an FP at every threshold.
  std::int64_t fp_image = -1;
  double fp_score = 0.0;
  for (const ImageMatchTable& im : matches.images) {
    for (std::size_t d = 0; d < im.det_scores.size(); ++d) {
      bool always_fp = true;
      for (std::size_t t = 0; t < matches.iou_thresholds.size(); ++t) {
        if (im.det_match_gt(t, d) >= 0 || im.det_ignored(t, d)) {
          always_fp = false;
          break;
        }
      }
      if (always_fp) {
        fp_image = im.image_id;
        fp_score = im.det_scores[d];
        break;
      }
    }
    if (fp_image >= 0) break;
  }
  REQUIRE(fp_image >= 0);

  std::vector<Detection> pruned;
  bool removed = false;
  for (const Detection& d : dets) {
    if (!removed && d.image_id == fp_image && d.score == fp_score) {
      removed = true;
      continue;
    }
    pruned.push_back(d);
  }
  REQUIRE(removed);
  const EvalReport after = evaluate(gt, pruned);
  CHECK(after.ap >= before.ap - 1e-12);
}

TEST_CASE("parallel evaluation is bit-identical to sequential") {
  SynthConfig synth;
  synth.seed = 29;
  synth.num_images = 40;
  synth.jitter = 7.0;
  const auto scenes = generate_scenes(synth);
  const GtDataset gt = scenes_to_gt(scenes);
  const std::vector<Detection> dets = scenes_to_detections(scenes);

  EvalConfig seq;
  seq.threads = 1;
  EvalConfig par;
  par.threads = 8;
  const EvalReport a = evaluate(gt, dets, seq);
  const EvalReport b = evaluate(gt, dets, par);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.ar_at == b.ar_at);
  CHECK(a.ap == b.ap);
}

TEST_CASE("detections on unknown images count against precision and warn") {
  const GtDataset gt = simple_gt();
  std::vector<Detection> dets{{Box(10, 10, 20, 20), 0.9, std::nullopt, 1}};
  const EvalReport clean = evaluate(gt, dets);
  CHECK(clean.ap == 1.0);
  CHECK(clean.warnings.empty());

  dets.push_back(Detection{Box(0, 0, 10, 10), 0.95, std::nullopt, 42});
  const EvalReport flagged = evaluate(gt, dets);
  CHECK_FALSE(flagged.warnings.empty());
  CHECK(flagged.ap < clean.ap);
}

TEST_CASE("report JSON carries the challenge column names") {
  const EvalReport report = evaluate(simple_gt(), {});
  const std::string json = report.to_json();
  for (const char* key : {"\"AR@100\"", "\"AP\"", "\"AP@.5\"", "\"AP@.75\"",
                          "\"AR@1\"", "\"AR@10\"", "\"AR@300\"",
                          "\"AR@1000\""}) {
    CHECK(json.find(key) != std::string::npos);
  }
}

TEST_CASE("eval config validation") {
  EvalConfig cfg;
  cfg.iou_thresholds = {0.5, 0.5};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = EvalConfig{};
  cfg.recall_budgets = {10, 5};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = EvalConfig{};
  cfg.iou_thresholds = {0.0};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = EvalConfig{};
  cfg.ap_max_dets = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("duplicate image ids in the ground truth are rejected") {
  GtDataset gt;
  gt.images = {{1, 10, 10}, {1, 20, 20}};
  CHECK_THROWS_AS(evaluate(gt, {}), std::invalid_argument);
}
