// vidshield: detect and purify adversarial frame sequences.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vidshield/vidshield.hpp"

namespace fs = std::filesystem;
using namespace vidshield;

namespace {

PipelineConfig config_from(const std::string& path) {
  return path.empty() ? PipelineConfig{} : load_config(path);
}

void print(const json& doc) { std::cout << doc.dump(2) << '\n'; }

json verdict_json(const VideoClip& clip, const LabelStream& labels, const PipelineConfig& cfg) {
  if (labels.frame_count() != clip.frame_count()) {
    fail(Errc::dimension_mismatch, "label stream has " + std::to_string(labels.frame_count()) +
                                       " entries for a clip of " + std::to_string(clip.frame_count()) + " frames");
  }
  const auto verdict = detect(labels, cfg.thresholds);
  const auto mask = exception_frame_mask(labels);
  json exceptions = json::array();
  for (int n = 0; n < labels.frame_count(); ++n) {
    if (mask[static_cast<std::size_t>(n)]) exceptions.push_back(n);
  }
  json out = to_json(verdict);
  out["frames"] = labels.frame_count();
  out["exception_frames"] = exceptions;
  out["thresholds"] = to_json(cfg.thresholds);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vidshield - temporal-consistency detection and purification of adversarial videos"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "Compute the exception index and verdict for a clip");
  std::string clip_dir, labels_path;
  detect_cmd->add_option("clip", clip_dir, "Directory of frame_NNNNNN.png files")->required();
  detect_cmd->add_option("--labels", labels_path, "Per-frame labels (JSON Lines)")->required();

  // defend
  auto* defend_cmd = app.add_subcommand("defend", "Detect, then purify the clip with the matching defense");
  std::string out_dir, records_path;
  defend_cmd->add_option("clip", clip_dir, "Directory of frame_NNNNNN.png files")->required();
  defend_cmd->add_option("--labels", labels_path, "Per-frame labels (JSON Lines)")->required();
  defend_cmd->add_option("--out", out_dir, "Output directory for the purified clip")->required();
  defend_cmd->add_option("--records", records_path, "Where to write temporal defense records (default <out>/defense_records.bin)");

  // calibrate
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Choose gamma1/gamma2 by F1 sweep over a labelled corpus");
  std::string manifest_path;
  calibrate_cmd->add_option("--manifest", manifest_path, "Corpus manifest (JSON Lines)")->required()->check(CLI::ExistingFile);

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic clip, attack it and label it");
  std::string kind = "sparse", style = "mosaic";
  int epsilon = 16, attacked_frames = 1, length = 16, size = 64, channels = 1, label = 0;
  std::uint64_t seed = 0;
  simulate_cmd->add_option("--kind", kind, "Attack kind")->check(CLI::IsMember({"none", "sparse", "dense"}));
  simulate_cmd->add_option("--epsilon", epsilon, "Max per-pixel perturbation (1..64)");
  simulate_cmd->add_option("--frames", attacked_frames, "Attacked frame count for sparse attacks");
  simulate_cmd->add_option("--seed", seed, "Seed for scene, attack and oracle");
  simulate_cmd->add_option("--out", out_dir, "Output directory")->required();
  simulate_cmd->add_option("--length", length, "Clip length T");
  simulate_cmd->add_option("--size", size, "Frame width and height");
  simulate_cmd->add_option("--channels", channels, "1 (gray) or 3 (RGB)")->check(CLI::IsMember({1, 3}));
  simulate_cmd->add_option("--label", label, "True class label");
  simulate_cmd->add_option("--style", style, "Scene content")->check(CLI::IsMember({"mosaic", "waves"}));

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Generate a synthetic clean/sparse/dense corpus with manifest");
  SyntheticCorpusSpec corpus_spec;
  corpus_cmd->add_option("--out", out_dir, "Output directory")->required();
  corpus_cmd->add_option("--clean", corpus_spec.clean_clips, "Clean clip count");
  corpus_cmd->add_option("--sparse", corpus_spec.sparse_clips, "Sparse-attacked clip count");
  corpus_cmd->add_option("--dense", corpus_spec.dense_clips, "Dense-attacked clip count");
  corpus_cmd->add_option("--length", corpus_spec.frames, "Clip length T");
  corpus_cmd->add_option("--seed", corpus_spec.seed, "Corpus seed");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Run every defense arm over a corpus and write a report");
  std::string report_path;
  bool recalibrate = false;
  evaluate_cmd->add_option("--manifest", manifest_path, "Corpus manifest (JSON Lines)")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--report", report_path, "Report destination (JSON)")->required();
  evaluate_cmd->add_flag("--calibrate", recalibrate, "Calibrate thresholds on the same corpus first");

  // roc
  auto* roc_cmd = app.add_subcommand("roc", "ROC curve and AUC from scored samples");
  std::string samples_path;
  roc_cmd->add_option("--samples", samples_path, "{\"score\":x,\"positive\":b} per line")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    PipelineConfig cfg = config_from(config_path);

    if (*detect_cmd) {
      print(verdict_json(load_clip(clip_dir), read_label_stream(fs::path(labels_path)), cfg));
    } else if (*defend_cmd) {
      const VideoClip clip = load_clip(clip_dir);
      const LabelStream labels = read_label_stream(fs::path(labels_path));
      json summary = verdict_json(clip, labels, cfg);
      const PipelineOutcome outcome = run_pipeline(clip, labels, cfg);
      save_clip(outcome.output, out_dir);
      summary["defense"] = std::string(to_string(outcome.defense));
      if (!outcome.records.empty()) {
        const fs::path dest = records_path.empty() ? fs::path(out_dir) / "defense_records.bin" : fs::path(records_path);
        write_file_bytes(dest, serialize_defense_records(outcome.records));
        summary["records"] = dest.string();
      }
      print(summary);
    } else if (*calibrate_cmd) {
      const auto corpus = load_corpus(read_manifest(fs::path(manifest_path)));
      print(to_json(calibrate(corpus, cfg)));
    } else if (*simulate_cmd) {
      const AttackKind attack = attack_kind_from_string(kind);
      const SceneStyle scene_style = style == "waves" ? SceneStyle::waves : SceneStyle::mosaic;
      const VideoClip clean = make_static_clip(synthesize_scene({size, size, channels, seed, scene_style}), length);
      AttackResult attacked{clean, FrameMask(static_cast<std::size_t>(length), false)};
      if (attack == AttackKind::sparse) {
        attacked = inject_sparse_attack(clean, {attack, epsilon, attacked_frames, seed});
      } else if (attack == AttackKind::dense) {
        attacked.clip = inject_dense_attack(clean, {attack, epsilon, 0, seed});
        attacked.mask.assign(attacked.mask.size(), true);
      }
      const fs::path out(out_dir);
      save_clip(clean, out / "clean");
      save_clip(attacked.clip, out / "attacked");
      const OracleClassifierSpec oracle{label, cfg.oracle_tau, seed, cfg.num_classes};
      const LabelStream labels = oracle_classify(attacked.clip, clean, oracle);
      {
        std::ofstream labels_out(out / "labels.jsonl", std::ios::trunc);
        if (!labels_out) fail(Errc::io_failure, "cannot write " + (out / "labels.jsonl").string());
        write_label_stream(labels_out, labels);
      }
      ManifestEntry entry;
      entry.clip = "attacked";
      entry.label = label;
      entry.attack = attack;
      entry.clean_dir = "clean";
      entry.labels_path = "labels.jsonl";
      entry.seed = seed;
      for (int n = 0; n < length; ++n) {
        if (attacked.mask[static_cast<std::size_t>(n)]) entry.mask.push_back(n);
      }
      std::ofstream manifest(out / "manifest.jsonl", std::ios::trunc);
      manifest << to_json(entry).dump() << '\n';
      print({{"out", out.string()},
             {"attack", kind},
             {"attacked_frames", entry.mask},
             {"alpha", compute_exception_index(labels)}});
    } else if (*corpus_cmd) {
      corpus_spec.num_classes = cfg.num_classes;
      const auto corpus = make_synthetic_corpus(corpus_spec);
      const auto manifest = write_corpus(corpus, out_dir);
      print({{"manifest", manifest.string()}, {"clips", corpus.size()}});
    } else if (*evaluate_cmd) {
      const auto corpus = load_corpus(read_manifest(fs::path(manifest_path)));
      if (recalibrate) cfg.thresholds = calibrate(corpus, cfg).thresholds;
      const json report = to_json(evaluate_corpus(corpus, cfg));
      std::ofstream out(report_path, std::ios::trunc);
      if (!out) fail(Errc::io_failure, "cannot write " + report_path);
      out << report.dump(2) << '\n';
      json summary{{"report", report_path}, {"detection_macro_f1", report["detection_macro_f1"]}, {"thresholds", report["thresholds"]}};
      for (const auto& arm : report["arms"]) summary["accuracy"][arm["arm"].get<std::string>()] = arm["aggregate"]["acc_post"];
      print(summary);
    } else if (*roc_cmd) {
      print(to_json(roc_curve(read_scored_samples(fs::path(samples_path)))));
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
