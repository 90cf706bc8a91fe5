#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "vidshield/pipeline.hpp"
#include "vidshield/synthetic_corpus.hpp"

using namespace vidshield;

namespace {

PipelineConfig config_from(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

PipelineConfig low_gamma_zero_mode() {
  PipelineConfig cfg;
  cfg.thresholds = {0.05, 0.3};
  cfg.temporal.residual_mode = ResidualMode::zero;
  return cfg;
}

VideoClip mosaic_clip(int T, std::uint64_t seed, int size = 64) {
  return make_static_clip(synthesize_scene({size, size, 1, seed, SceneStyle::mosaic}), T);
}

SyntheticCorpusSpec small_corpus_spec() {
  SyntheticCorpusSpec s;
  s.clean_clips = 2;
  s.sparse_clips = 3;
  s.dense_clips = 2;
  s.frames = 8;
  s.width = 32;
  s.height = 32;
  return s;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const auto defaults = config_from("");
  EXPECT_EQ(defaults.thresholds.gamma1, 0.175);
  EXPECT_EQ(defaults.thresholds.gamma2, 0.3);
  EXPECT_EQ(defaults.temporal.motion_block, 16);
  EXPECT_EQ(defaults.temporal.search_range, 7);
  EXPECT_EQ(defaults.temporal.dct_block, 8);
  EXPECT_EQ(defaults.temporal.quant_step, 16.0);
  EXPECT_EQ(defaults.temporal.residual_mode, ResidualMode::quantized);
  EXPECT_EQ(defaults.gamma1_candidates.size(), 39u);

  const auto cfg = config_from(
      "# tuned\n"
      "gamma1 = 0.1\n"
      "gamma2=0.4  # trailing comment\n"
      "\n"
      "residual_mode = zero\n"
      "search_range = 4\n"
      "quant_step = 8.5\n"
      "denoiser = external:cat\n"
      "gamma1_candidates = 0.1, 0.2,0.3\n");
  EXPECT_EQ(cfg.thresholds.gamma1, 0.1);
  EXPECT_EQ(cfg.thresholds.gamma2, 0.4);
  EXPECT_EQ(cfg.temporal.residual_mode, ResidualMode::zero);
  EXPECT_EQ(cfg.temporal.search_range, 4);
  EXPECT_EQ(cfg.temporal.quant_step, 8.5);
  EXPECT_EQ(cfg.denoiser, "external:cat");
  EXPECT_EQ(cfg.gamma1_candidates, (std::vector<double>{0.1, 0.2, 0.3}));
}

TEST(Config, Errors) {
  EXPECT_ERRC(config_from("gamma3 = 1\n"), Errc::malformed_input);
  EXPECT_ERRC(config_from("gamma1\n"), Errc::malformed_input);
  EXPECT_ERRC(config_from("gamma1 = abc\n"), Errc::invalid_argument);
  EXPECT_ERRC(config_from("search_range = 3.5\n"), Errc::invalid_argument);
  EXPECT_ERRC(config_from("gamma1 = 0.5\ngamma2 = 0.4\n"), Errc::invalid_argument);
  EXPECT_ERRC(config_from("denoiser = magic\n"), Errc::invalid_argument);
  EXPECT_ERRC(config_from("residual_mode = half\n"), Errc::invalid_argument);
  EXPECT_ERRC(config_from("gamma2_candidates = \n"), Errc::invalid_argument);
  EXPECT_ERRC(load_config("/nonexistent/vidshield.conf"), Errc::io_failure);
}

TEST(Pipeline, CleanClipPassesThrough) {
  const auto clip = mosaic_clip(6, 1, 32);
  const auto out = run_pipeline(clip, {{4, 4, 4, 4, 4, 4}}, {});
  EXPECT_EQ(out.verdict.kind, VerdictKind::Clean);
  EXPECT_EQ(out.defense, DefenseApplied::none);
  for (int n = 0; n < 6; ++n) EXPECT_EQ(out.output[n], clip[n]);
}

TEST(Pipeline, SingleFrameInShortClipIsBelowDefaultGamma1) {
  // one exception in eight frames: alpha = 0.125 < 0.175
  const auto out = run_pipeline(mosaic_clip(8, 1, 32), {{0, 0, 0, 9, 0, 0, 0, 0}}, {});
  EXPECT_DOUBLE_EQ(out.verdict.alpha, 0.125);
  EXPECT_EQ(out.verdict.kind, VerdictKind::Clean);
}

TEST(Pipeline, SparseAttackIsRemovedExactlyInZeroMode) {
  for (const std::uint64_t seed : {3ULL, 4ULL, 5ULL}) {
    const auto clean = mosaic_clip(8, seed);
    const auto attacked = inject_noise_on_frames(clean, {4}, 16, seed);
    const auto labels = oracle_classify(attacked.clip, clean, {7, 4.0, seed});
    const auto out = run_pipeline(attacked.clip, labels, low_gamma_zero_mode());
    EXPECT_EQ(out.verdict.kind, VerdictKind::SparseAdversarial);
    EXPECT_EQ(out.defense, DefenseApplied::temporal);
    EXPECT_EQ(out.mask, attacked.mask);
    ASSERT_EQ(out.records.size(), 1u);
    for (int n = 0; n < 8; ++n) EXPECT_EQ(out.output[n], clean[n]) << n;
  }
}

TEST(Pipeline, DenseAttackGoesToSpatialDefense) {
  const auto clean = mosaic_clip(8, 6);
  const auto attacked = inject_dense_attack(clean, {AttackKind::dense, 4, 0, 6});
  const auto labels = oracle_classify(attacked, clean, {7, 2.0, 6});
  const auto out = run_pipeline(attacked, labels, {});
  EXPECT_EQ(out.verdict.kind, VerdictKind::DenseAdversarial);
  EXPECT_EQ(out.defense, DefenseApplied::spatial);
  EXPECT_LT(mean_frame_mse(out.output, clean), mean_frame_mse(attacked, clean));
}

TEST(Pipeline, ExternalDenoiserFromConfig) {
  const auto clean = mosaic_clip(5, 6, 16);
  const auto attacked = inject_dense_attack(clean, {AttackKind::dense, 8, 0, 1});
  const auto labels = oracle_classify(attacked, clean, {1, 2.0, 1});
  auto cfg = config_from("denoiser = external:cat\n");
  const auto out = run_pipeline(attacked, labels, cfg);
  EXPECT_EQ(out.defense, DefenseApplied::spatial);
  for (int n = 0; n < 5; ++n) EXPECT_EQ(out.output[n], attacked[n]);
}

TEST(Pipeline, LabelLengthMismatch) {
  EXPECT_ERRC(run_pipeline(mosaic_clip(5, 1, 16), {{1, 1, 1}}, {}), Errc::dimension_mismatch);
}

TEST(Manifest, ParsesAndResolvesRelativePaths) {
  std::istringstream in(
      R"({"clip": "a/frames", "label": 3, "attack": "sparse", "mask": [2, 5], "clean": "a/clean", "seed": 11})"
      "\n\n"
      R"({"clip": "/abs/b", "label": 0, "attack": "none", "labels": "b.jsonl"})"
      "\n");
  const auto entries = read_manifest(in, "/data/set");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].clip_dir, std::filesystem::path("/data/set/a/frames"));
  EXPECT_EQ(entries[0].attack, AttackKind::sparse);
  EXPECT_EQ(entries[0].mask, (std::vector<int>{2, 5}));
  EXPECT_EQ(entries[0].clean_dir, std::filesystem::path("/data/set/a/clean"));
  EXPECT_EQ(entries[0].seed, 11u);
  EXPECT_EQ(entries[1].clip_dir, std::filesystem::path("/abs/b"));
  EXPECT_EQ(entries[1].labels_path, std::filesystem::path("/data/set/b.jsonl"));
  EXPECT_FALSE(entries[1].seed.has_value());
}

TEST(Manifest, Errors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_manifest(in, ".");
  };
  EXPECT_ERRC(parse(""), Errc::malformed_input);
  EXPECT_ERRC(parse("{\"label\": 1, \"attack\": \"none\"}\n"), Errc::malformed_input);
  EXPECT_ERRC(parse("{\"clip\": \"x\", \"label\": 1, \"attack\": \"heavy\"}\n"), Errc::malformed_input);
  EXPECT_ERRC(parse("{\"clip\": \"x\", \"label\": -1, \"attack\": \"none\"}\n"), Errc::malformed_input);
  EXPECT_ERRC(parse("{\"clip\": \"x\", \"label\": \"one\", \"attack\": \"none\"}\n"), Errc::malformed_input);
  EXPECT_ERRC(parse("not json\n"), Errc::malformed_input);
  EXPECT_ERRC(read_manifest("/nonexistent/manifest.jsonl"), Errc::io_failure);
}

TEST(Calibrate, SeparableScoresLandInTheGaps) {
  std::vector<std::pair<double, AttackKind>> scored;
  for (const double a : {0.0, 0.05, 0.1, 0.14}) scored.emplace_back(a, AttackKind::none);
  for (const double a : {0.16, 0.25, 0.3, 0.44}) scored.emplace_back(a, AttackKind::sparse);
  for (const double a : {0.46, 0.6, 0.9}) scored.emplace_back(a, AttackKind::dense);
  const auto grid = default_threshold_candidates();
  const auto r = calibrate(scored, grid, grid);
  EXPECT_GT(r.thresholds.gamma1, 0.14);
  EXPECT_LE(r.thresholds.gamma1, 0.16);
  EXPECT_GT(r.thresholds.gamma2, 0.44);
  EXPECT_LE(r.thresholds.gamma2, 0.46);
  EXPECT_EQ(r.gamma1_table.rows.size(), grid.size());

  std::reverse(scored.begin(), scored.end());
  const auto again = calibrate(scored, grid, grid);
  EXPECT_EQ(again.thresholds.gamma1, r.thresholds.gamma1);
  EXPECT_EQ(again.thresholds.gamma2, r.thresholds.gamma2);
}

TEST(Calibrate, NeedsAllThreeKinds) {
  const auto grid = default_threshold_candidates();
  EXPECT_ERRC(calibrate({{0.0, AttackKind::none}, {0.5, AttackKind::dense}}, grid, grid), Errc::calibration_undefined);
  EXPECT_ERRC(calibrate({{0.2, AttackKind::sparse}, {0.5, AttackKind::dense}}, grid, grid),
              Errc::calibration_undefined);
}

TEST(Calibrate, RejectsInvertedThresholds) {
  // sparse scores above dense ones push gamma2 below gamma1
  const std::vector<std::pair<double, AttackKind>> scored = {
      {0.0, AttackKind::none}, {0.8, AttackKind::sparse}, {0.9, AttackKind::sparse}, {0.3, AttackKind::dense}};
  EXPECT_ERRC(calibrate(scored, std::vector<double>{0.5}, std::vector<double>{0.1}), Errc::calibration_undefined);
}

TEST(Calibrate, SyntheticCorpusIsDeterministicUnderReordering) {
  auto corpus = make_synthetic_corpus(small_corpus_spec());
  const PipelineConfig cfg;
  const auto a = calibrate(corpus, cfg);
  std::reverse(corpus.begin(), corpus.end());
  const auto b = calibrate(corpus, cfg);
  EXPECT_EQ(a.thresholds.gamma1, b.thresholds.gamma1);
  EXPECT_EQ(a.thresholds.gamma2, b.thresholds.gamma2);
  EXPECT_LT(a.thresholds.gamma1, 0.125);
}

TEST(Evaluate, CleanOnlyCorpusIsUntouchedByEveryArm) {
  auto spec = small_corpus_spec();
  spec.sparse_clips = spec.dense_clips = 0;
  const auto corpus = make_synthetic_corpus(spec);
  const auto report = evaluate_corpus(corpus, {});
  for (const Arm arm : kAllArms) {
    EXPECT_EQ(report.arm(arm).summary.acc_pre, 1.0);
    EXPECT_EQ(report.arm(arm).summary.acc_post, 1.0);
    EXPECT_EQ(report.arm(arm).summary.mse_post, 0.0) << to_string(arm);
  }
}

TEST(Evaluate, AggregatesMatchRowsAndCombinedArmLeads) {
  const auto corpus = make_synthetic_corpus(small_corpus_spec());
  auto cfg = low_gamma_zero_mode();
  cfg.thresholds = calibrate(corpus, cfg).thresholds;
  const auto report = evaluate_corpus(corpus, cfg);
  EXPECT_EQ(report.detection_macro_f1, 1.0);
  for (const auto& arm : report.arms) {
    ASSERT_EQ(arm.rows.size(), corpus.size());
    double acc = 0.0, mse = 0.0;
    for (const auto& r : arm.rows) {
      acc += r.acc_post;
      mse += r.mse_post;
    }
    EXPECT_NEAR(arm.summary.acc_post, acc / corpus.size(), 1e-12);
    EXPECT_NEAR(arm.summary.mse_post, mse / corpus.size(), 1e-12);
    EXPECT_GE(report.arm(Arm::detection_both).summary.acc_post, arm.summary.acc_post);
  }
  for (const auto& r : report.arm(Arm::detection_both).rows) {
    if (r.clip_id.starts_with("sparse")) {
      EXPECT_EQ(r.acc_post, 1.0);
      EXPECT_EQ(r.defense, "temporal");
    }
    if (r.clip_id.starts_with("dense")) {
      EXPECT_GT(r.acc_post, r.acc_pre);
    }
  }

  const auto j = to_json(report);
  EXPECT_EQ(j.at("thresholds").at("gamma1"), cfg.thresholds.gamma1);
  EXPECT_EQ(j.at("rows").size(), corpus.size());
  for (const char* key : {"clip_id", "alpha", "verdict", "defense", "acc_pre", "acc_post", "mse_pre", "mse_post"}) {
    EXPECT_TRUE(j.at("rows")[0].contains(key)) << key;
  }
  EXPECT_EQ(j.at("arms").size(), 4u);
  EXPECT_TRUE(j.at("arms")[0].at("aggregate").contains("acc_post"));
  EXPECT_ERRC(evaluate_corpus(std::vector<CorpusClip>{}, cfg), Errc::empty_input);
}

TEST(Corpus, DiskRoundTrip) {
  testing_support::TempDir dir("corpus");
  const auto corpus = make_synthetic_corpus(small_corpus_spec());
  const auto manifest = write_corpus(corpus, dir.path());
  const auto entries = read_manifest(manifest);
  ASSERT_EQ(entries.size(), corpus.size());
  const auto loaded = load_corpus(entries);
  const PipelineConfig cfg;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(loaded[i].attack, corpus[i].attack);
    EXPECT_EQ(loaded[i].label, corpus[i].label);
    EXPECT_EQ(loaded[i].oracle_seed, corpus[i].oracle_seed);
    for (int n = 0; n < corpus[i].clip.frame_count(); ++n) {
      EXPECT_EQ(loaded[i].clip[n], corpus[i].clip[n]);
      EXPECT_EQ(loaded[i].clean[n], corpus[i].clean[n]);
    }
    EXPECT_EQ(corpus_labels(loaded[i], cfg), corpus_labels(corpus[i], cfg));
    const bool attacked = corpus[i].attack != AttackKind::none;
    EXPECT_EQ(entries[i].mask.empty(), !attacked);
  }
}

TEST(Corpus, ExternalLabelsOverrideTheOracle) {
  testing_support::TempDir dir("labels");
  const auto clip = mosaic_clip(4, 2, 16);
  save_clip(clip, dir.path() / "c");
  {
    std::ofstream out(dir.path() / "l.jsonl");
    write_label_stream(out, {{1, 2, 1, 1}});
  }
  std::istringstream in(R"({"clip": "c", "label": 1, "attack": "none", "labels": "l.jsonl"})");
  const auto loaded = load_corpus(read_manifest(in, dir.path()));
  EXPECT_EQ(corpus_labels(loaded[0], {}), (LabelStream{{1, 2, 1, 1}}));

  std::istringstream attacked(R"({"clip": "c", "label": 1, "attack": "sparse"})");
  EXPECT_ERRC(load_corpus(read_manifest(attacked, dir.path())), Errc::malformed_input);
}
