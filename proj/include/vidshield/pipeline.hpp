#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vidshield/defense.hpp"
#include "vidshield/detection.hpp"
#include "vidshield/error.hpp"
#include "vidshield/external_denoiser.hpp"
#include "vidshield/frame.hpp"
#include "vidshield/harness.hpp"
#include "vidshield/json_io.hpp"
#include "vidshield/png_io.hpp"

namespace vidshield {

// k / 40 for k = 1..39: the 0.025 grid used for both threshold sweeps.
inline std::vector<double> default_threshold_candidates() {
  std::vector<double> grid;
  for (int k = 1; k < 40; ++k) grid.push_back(k / 40.0);
  return grid;
}

struct PipelineConfig {
  DetectionThresholds thresholds;
  TemporalDefenseParams temporal;
  std::string denoiser = "baseline";  // "baseline" or "external:<command>"
  double oracle_tau = 4.0;
  int num_classes = 101;
  std::vector<double> gamma1_candidates = default_threshold_candidates();
  std::vector<double> gamma2_candidates = default_threshold_candidates();

  void validate() const {
    thresholds.validate();
    temporal.validate();
    if (denoiser != "baseline" && !denoiser.starts_with("external:")) {
      fail(Errc::invalid_argument, "denoiser must be 'baseline' or 'external:<command>'");
    }
    if (!(oracle_tau > 0.0)) fail(Errc::invalid_argument, "oracle_tau must be positive");
    if (num_classes < 2) fail(Errc::invalid_argument, "num_classes must be at least 2");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof()) fail(Errc::invalid_argument, "config key '" + key + "': bad value '" + text + "'");
  return value;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<double>(key, trim(item)));
  if (out.empty()) fail(Errc::invalid_argument, "config key '" + key + "' needs at least one value");
  return out;
}

}  // namespace detail

// Flat `key = value` lines; blank lines and '#' comments are ignored.
// Unknown keys are rejected.
inline PipelineConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  PipelineConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(Errc::malformed_input, source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key == "gamma1") cfg.thresholds.gamma1 = detail::parse_number<double>(key, value);
    else if (key == "gamma2") cfg.thresholds.gamma2 = detail::parse_number<double>(key, value);
    else if (key == "motion_block") cfg.temporal.motion_block = detail::parse_number<int>(key, value);
    else if (key == "search_range") cfg.temporal.search_range = detail::parse_number<int>(key, value);
    else if (key == "dct_block") cfg.temporal.dct_block = detail::parse_number<int>(key, value);
    else if (key == "quant_step") cfg.temporal.quant_step = detail::parse_number<double>(key, value);
    else if (key == "residual_mode") cfg.temporal.residual_mode = residual_mode_from_string(value);
    else if (key == "denoiser") cfg.denoiser = value;
    else if (key == "oracle_tau") cfg.oracle_tau = detail::parse_number<double>(key, value);
    else if (key == "num_classes") cfg.num_classes = detail::parse_number<int>(key, value);
    else if (key == "gamma1_candidates") cfg.gamma1_candidates = detail::parse_list(key, value);
    else if (key == "gamma2_candidates") cfg.gamma2_candidates = detail::parse_list(key, value);
    else fail(Errc::malformed_input, source + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open config " + path.string());
  return parse_config(in, path.string());
}

// The baseline denoiser shares the transform block size and step with the
// temporal residual codec.
inline SpatialDenoiser make_denoiser(const PipelineConfig& cfg) {
  if (cfg.denoiser == "baseline") return make_baseline_denoiser(cfg.temporal.dct_block, cfg.temporal.quant_step);
  constexpr std::string_view prefix = "external:";
  if (cfg.denoiser.starts_with(prefix)) return make_external_denoiser(cfg.denoiser.substr(prefix.size()));
  fail(Errc::invalid_argument, "unknown denoiser '" + cfg.denoiser + "'");
}

// ---------------------------------------------------------------------------
// Detect-then-defend.

enum class DefenseApplied { none, temporal, spatial, spatial_fallback };

inline std::string_view to_string(DefenseApplied d) noexcept {
  switch (d) {
    case DefenseApplied::none: return "none";
    case DefenseApplied::temporal: return "temporal";
    case DefenseApplied::spatial: return "spatial";
    case DefenseApplied::spatial_fallback: return "spatial_fallback";
  }
  return "none";
}

struct PipelineOutcome {
  VideoClip output;
  DetectionVerdict verdict;
  FrameMask mask;
  DefenseApplied defense = DefenseApplied::none;
  std::vector<DefenseRecord> records;
};

// Clean clips pass through untouched; sparse verdicts go to the temporal
// defense over the detected exception frames; dense verdicts (and sparse
// clips where every frame is flagged) go to the spatial denoiser.
inline PipelineOutcome run_pipeline(const VideoClip& clip, const LabelStream& labels, const PipelineConfig& cfg,
                                    const SpatialDenoiser& denoiser) {
  if (labels.frame_count() != clip.frame_count()) {
    fail(Errc::dimension_mismatch, "label stream has " + std::to_string(labels.frame_count()) +
                                       " entries for a clip of " + std::to_string(clip.frame_count()) + " frames");
  }
  PipelineOutcome outcome{clip, detect(labels, cfg.thresholds), exception_frame_mask(labels), DefenseApplied::none, {}};
  switch (outcome.verdict.kind) {
    case VerdictKind::Clean:
      break;
    case VerdictKind::SparseAdversarial:
      if (count_flagged(outcome.mask) == clip.frame_count()) {
        outcome.output = spatial_defend(clip, denoiser);
        outcome.defense = DefenseApplied::spatial_fallback;
      } else {
        auto result = temporal_defend(clip, outcome.mask, cfg.temporal);
        outcome.output = std::move(result.clip);
        outcome.records = std::move(result.records);
        outcome.defense = DefenseApplied::temporal;
      }
      break;
    case VerdictKind::DenseAdversarial:
      outcome.output = spatial_defend(clip, denoiser);
      outcome.defense = DefenseApplied::spatial;
      break;
  }
  return outcome;
}

inline PipelineOutcome run_pipeline(const VideoClip& clip, const LabelStream& labels, const PipelineConfig& cfg) {
  return run_pipeline(clip, labels, cfg, make_denoiser(cfg));
}

// ---------------------------------------------------------------------------
// Corpus.

struct ManifestEntry {
  std::string clip;  // as written in the manifest; doubles as the clip id
  std::filesystem::path clip_dir;
  int label = 0;
  AttackKind attack = AttackKind::none;
  std::vector<int> mask;  // ground-truth attacked frames, when known
  std::optional<std::filesystem::path> clean_dir;
  std::optional<std::filesystem::path> labels_path;
  std::optional<std::uint64_t> seed;
};

// JSON Lines: {"clip": <dir>, "label": <int>, "attack": "none"|"sparse"|"dense",
// "mask": [<int>...]?}. Optional extensions: "clean" (clean reference dir for
// the oracle), "labels" (JSONL label stream), "seed" (oracle seed).
// Relative paths resolve against the manifest's directory.
inline std::vector<ManifestEntry> read_manifest(std::istream& in, const std::filesystem::path& base,
                                                const std::string& source = "<manifest>") {
  std::vector<ManifestEntry> entries;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  detail::for_each_jsonl(in, source, [&](const json& obj, int line_no) {
    ManifestEntry e;
    e.clip = obj.at("clip").get<std::string>();
    e.clip_dir = resolve(e.clip);
    e.label = obj.at("label").get<int>();
    e.attack = attack_kind_from_string(obj.at("attack").get<std::string>());
    if (obj.contains("mask")) e.mask = obj.at("mask").get<std::vector<int>>();
    if (obj.contains("clean")) e.clean_dir = resolve(obj.at("clean").get<std::string>());
    if (obj.contains("labels")) e.labels_path = resolve(obj.at("labels").get<std::string>());
    if (obj.contains("seed")) e.seed = obj.at("seed").get<std::uint64_t>();
    if (e.label < 0) fail(Errc::malformed_input, source + ":" + std::to_string(line_no) + ": negative label");
    entries.push_back(std::move(e));
  });
  if (entries.empty()) fail(Errc::malformed_input, source + ": manifest lists no clips");
  return entries;
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_failure, "cannot open manifest " + path.string());
  return read_manifest(in, path.parent_path(), path.string());
}

inline json to_json(const ManifestEntry& e) {
  json obj{{"clip", e.clip}, {"label", e.label}, {"attack", std::string(to_string(e.attack))}};
  if (!e.mask.empty()) obj["mask"] = e.mask;
  if (e.clean_dir) obj["clean"] = e.clean_dir->string();
  if (e.labels_path) obj["labels"] = e.labels_path->string();
  if (e.seed) obj["seed"] = *e.seed;
  return obj;
}

struct CorpusClip {
  std::string id;
  VideoClip clip;
  VideoClip clean;  // oracle reference
  int label = 0;
  AttackKind attack = AttackKind::none;
  std::optional<LabelStream> labels;  // external labels; oracle labels when absent
  std::uint64_t oracle_seed = 0;
};

inline CorpusClip load_corpus_clip(const ManifestEntry& e) {
  CorpusClip c;
  c.id = e.clip;
  c.clip = load_clip(e.clip_dir);
  if (e.clean_dir) {
    c.clean = load_clip(*e.clean_dir);
  } else if (e.attack == AttackKind::none) {
    c.clean = c.clip;
  } else {
    fail(Errc::malformed_input, "manifest entry '" + e.clip + "' is attacked but names no clean reference");
  }
  if (!c.clean.same_geometry(c.clip)) fail(Errc::dimension_mismatch, "clean reference of '" + e.clip + "' differs in geometry");
  for (const int n : e.mask) {
    if (n < 0 || n >= c.clip.frame_count()) fail(Errc::malformed_input, "mask index out of range in '" + e.clip + "'");
  }
  c.label = e.label;
  c.attack = e.attack;
  if (e.labels_path) c.labels = read_label_stream(*e.labels_path);
  c.oracle_seed = e.seed.value_or(stable_hash(e.clip));
  return c;
}

inline std::vector<CorpusClip> load_corpus(const std::vector<ManifestEntry>& entries) {
  std::vector<CorpusClip> corpus;
  corpus.reserve(entries.size());
  for (const auto& e : entries) corpus.push_back(load_corpus_clip(e));
  return corpus;
}

inline OracleClassifierSpec oracle_for(const CorpusClip& c, const PipelineConfig& cfg) {
  return {c.label, cfg.oracle_tau, c.oracle_seed, cfg.num_classes};
}

inline LabelStream corpus_labels(const CorpusClip& c, const PipelineConfig& cfg) {
  if (c.labels) {
    if (c.labels->frame_count() != c.clip.frame_count()) {
      fail(Errc::dimension_mismatch, "label stream of '" + c.id + "' does not match its frame count");
    }
    return *c.labels;
  }
  return oracle_classify(c.clip, c.clean, oracle_for(c, cfg));
}

// ---------------------------------------------------------------------------
// Calibration.

struct CalibrationResult {
  DetectionThresholds thresholds;
  CalibrationTable gamma1_table;
  CalibrationTable gamma2_table;
};

// gamma1 separates clean from adversarial (adversarial positive); gamma2
// separates sparse from dense (dense positive).
inline CalibrationResult calibrate(const std::vector<std::pair<double, AttackKind>>& scored,
                                   std::span<const double> gamma1_candidates, std::span<const double> gamma2_candidates) {
  std::vector<ScoredSample> stage1, stage2;
  bool seen[3] = {false, false, false};
  for (const auto& [alpha, attack] : scored) {
    seen[static_cast<int>(attack)] = true;
    stage1.push_back({alpha, attack != AttackKind::none});
    if (attack != AttackKind::none) stage2.push_back({alpha, attack == AttackKind::dense});
  }
  if (!seen[0] || !seen[1] || !seen[2]) {
    fail(Errc::calibration_undefined, "calibration needs clean, sparse and dense clips");
  }
  CalibrationResult result;
  result.gamma1_table = sweep_thresholds(stage1, gamma1_candidates);
  result.gamma2_table = sweep_thresholds(stage2, gamma2_candidates);
  result.thresholds = {select_optimal_threshold(result.gamma1_table), select_optimal_threshold(result.gamma2_table)};
  if (!(result.thresholds.gamma1 < result.thresholds.gamma2)) {
    fail(Errc::calibration_undefined, "calibrated gamma1 " + std::to_string(result.thresholds.gamma1) +
                                          " is not below gamma2 " + std::to_string(result.thresholds.gamma2));
  }
  return result;
}

inline CalibrationResult calibrate(std::span<const CorpusClip> corpus, const PipelineConfig& cfg) {
  std::vector<std::pair<double, AttackKind>> scored;
  for (const auto& c : corpus) scored.emplace_back(compute_exception_index(corpus_labels(c, cfg)), c.attack);
  return calibrate(scored, cfg.gamma1_candidates, cfg.gamma2_candidates);
}

// ---------------------------------------------------------------------------
// Evaluation.

struct ReportRow {
  std::string clip_id;
  double alpha = 0.0;
  VerdictKind verdict = VerdictKind::Clean;
  std::string defense;
  double acc_pre = 0.0;
  double acc_post = 0.0;
  double mse_pre = 0.0;
  double mse_post = 0.0;
};

struct ArmSummary {
  double acc_pre = 0.0;
  double acc_post = 0.0;
  double mse_pre = 0.0;
  double mse_post = 0.0;
};

inline ArmSummary summarize(std::span<const ReportRow> rows) {
  ArmSummary s;
  if (rows.empty()) return s;
  for (const auto& r : rows) {
    s.acc_pre += r.acc_pre;
    s.acc_post += r.acc_post;
    s.mse_pre += r.mse_pre;
    s.mse_post += r.mse_post;
  }
  const auto n = static_cast<double>(rows.size());
  return {s.acc_pre / n, s.acc_post / n, s.mse_pre / n, s.mse_post / n};
}

enum class Arm { no_defense, spatial_only, temporal_only, detection_both };

inline constexpr Arm kAllArms[] = {Arm::no_defense, Arm::spatial_only, Arm::temporal_only, Arm::detection_both};

inline std::string_view to_string(Arm arm) noexcept {
  switch (arm) {
    case Arm::no_defense: return "no_defense";
    case Arm::spatial_only: return "spatial_only";
    case Arm::temporal_only: return "temporal_only";
    case Arm::detection_both: return "detection_both";
  }
  return "no_defense";
}

struct ArmReport {
  Arm arm = Arm::no_defense;
  std::vector<ReportRow> rows;
  ArmSummary summary;
};

struct DefenseReport {
  DetectionThresholds thresholds;
  double detection_macro_f1 = 0.0;
  std::vector<ArmReport> arms;

  const ArmReport& arm(Arm which) const {
    for (const auto& a : arms) {
      if (a.arm == which) return a;
    }
    fail(Errc::out_of_range, "report has no arm " + std::string(to_string(which)));
  }
};

// Every arm sees the same detection result; only the purification differs.
// Accuracy is the oracle's per-frame accuracy on the arm's output.
inline DefenseReport evaluate_corpus(std::span<const CorpusClip> corpus, const PipelineConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) fail(Errc::empty_input, "evaluate_corpus: empty corpus");
  const SpatialDenoiser denoiser = make_denoiser(cfg);

  DefenseReport report;
  report.thresholds = cfg.thresholds;
  for (const Arm arm : kAllArms) report.arms.push_back({arm, {}, {}});

  std::vector<VerdictKind> truth, predicted;
  for (const auto& c : corpus) {
    const LabelStream labels = corpus_labels(c, cfg);
    const OracleClassifierSpec oracle = oracle_for(c, cfg);
    const double acc_pre = label_accuracy(oracle_classify(c.clip, c.clean, oracle), c.label);
    const double mse_pre = mean_frame_mse(c.clip, c.clean);
    const PipelineOutcome full = run_pipeline(c.clip, labels, cfg, denoiser);
    truth.push_back(expected_verdict(c.attack));
    predicted.push_back(full.verdict.kind);

    for (auto& arm_report : report.arms) {
      VideoClip output;
      std::string defense;
      switch (arm_report.arm) {
        case Arm::no_defense:
          output = c.clip;
          defense = "none";
          break;
        case Arm::spatial_only:
          output = spatial_defend(c.clip, denoiser);
          defense = "spatial";
          break;
        case Arm::temporal_only:
          if (count_flagged(full.mask) == 0 || count_flagged(full.mask) == c.clip.frame_count()) {
            output = c.clip;
            defense = "none";
          } else {
            output = temporal_defend(c.clip, full.mask, cfg.temporal).clip;
            defense = "temporal";
          }
          break;
        case Arm::detection_both:
          output = full.output;
          defense = std::string(to_string(full.defense));
          break;
      }
      arm_report.rows.push_back({c.id, full.verdict.alpha, full.verdict.kind, std::move(defense), acc_pre,
                                 label_accuracy(oracle_classify(output, c.clean, oracle), c.label), mse_pre,
                                 mean_frame_mse(output, c.clean)});
    }
  }
  for (auto& arm_report : report.arms) arm_report.summary = summarize(arm_report.rows);
  report.detection_macro_f1 = macro_f1(truth, predicted);
  return report;
}

inline json to_json(const ReportRow& r) {
  return {{"clip_id", r.clip_id}, {"alpha", r.alpha},       {"verdict", std::string(to_string(r.verdict))},
          {"defense", r.defense}, {"acc_pre", r.acc_pre},   {"acc_post", r.acc_post},
          {"mse_pre", r.mse_pre}, {"mse_post", r.mse_post}};
}

inline json to_json(const ArmSummary& s) {
  return {{"acc_pre", s.acc_pre}, {"acc_post", s.acc_post}, {"mse_pre", s.mse_pre}, {"mse_post", s.mse_post}};
}

// Top-level "rows" carries the full detect-then-defend arm; every arm is
// also listed under "arms" with its own rows and aggregate.
inline json to_json(const DefenseReport& report) {
  json arms = json::array();
  json pipeline_rows = json::array();
  for (const auto& a : report.arms) {
    json rows = json::array();
    for (const auto& r : a.rows) rows.push_back(to_json(r));
    if (a.arm == Arm::detection_both) pipeline_rows = rows;
    arms.push_back({{"arm", std::string(to_string(a.arm))}, {"rows", rows}, {"aggregate", to_json(a.summary)}});
  }
  return {{"thresholds", to_json(report.thresholds)},
          {"detection_macro_f1", report.detection_macro_f1},
          {"rows", pipeline_rows},
          {"arms", arms}};
}

inline json to_json(const CalibrationResult& r) {
  return {{"gamma1", r.thresholds.gamma1},
          {"gamma2", r.thresholds.gamma2},
          {"gamma1_table", to_json(r.gamma1_table)},
          {"gamma2_table", to_json(r.gamma2_table)}};
}

}  // namespace vidshield
