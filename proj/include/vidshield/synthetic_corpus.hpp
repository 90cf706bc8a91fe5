#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vidshield/harness.hpp"
#include "vidshield/pipeline.hpp"
#include "vidshield/png_io.hpp"

namespace vidshield {

// Static-scene clips with seeded attacks: the desk-scale stand-in for an
// adversarial video benchmark.
struct SyntheticCorpusSpec {
  int clean_clips = 20;
  int sparse_clips = 20;
  int dense_clips = 20;
  int frames = 16;
  int width = 64;
  int height = 64;
  int channels = 1;
  int sparse_epsilon = 16;
  int dense_epsilon = 4;
  int max_sparse_frames = 3;
  int num_classes = 101;
  SceneStyle style = SceneStyle::mosaic;
  std::uint64_t seed = 2019;
};

inline std::vector<CorpusClip> make_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  std::vector<CorpusClip> corpus;
  const int total = spec.clean_clips + spec.sparse_clips + spec.dense_clips;
  for (int i = 0; i < total; ++i) {
    const AttackKind kind = i < spec.clean_clips                      ? AttackKind::none
                            : i < spec.clean_clips + spec.sparse_clips ? AttackKind::sparse
                                                                       : AttackKind::dense;
    const auto clip_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(i));
    const Frame scene = synthesize_scene({spec.width, spec.height, spec.channels, clip_seed, spec.style});
    const VideoClip clean = make_static_clip(scene, spec.frames);

    CorpusClip c;
    c.id = std::string(to_string(kind)) + "_" + std::to_string(i);
    c.clean = clean;
    c.label = i % spec.num_classes;
    c.attack = kind;
    c.oracle_seed = mix_seed(clip_seed, 0x0c1a55);
    switch (kind) {
      case AttackKind::none:
        c.clip = clean;
        break;
      case AttackKind::sparse: {
        const int k = 1 + i % spec.max_sparse_frames;
        c.clip = inject_sparse_attack(clean, {AttackKind::sparse, spec.sparse_epsilon, k, clip_seed}).clip;
        break;
      }
      case AttackKind::dense:
        c.clip = inject_dense_attack(clean, {AttackKind::dense, spec.dense_epsilon, 0, clip_seed});
        break;
    }
    corpus.push_back(std::move(c));
  }
  return corpus;
}

// Writes <dir>/<id>/{attacked,clean}/ frame sequences plus
// <dir>/manifest.jsonl with paths relative to <dir>.
inline std::filesystem::path write_corpus(std::span<const CorpusClip> corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto manifest_path = dir / "manifest.jsonl";
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!manifest) fail(Errc::io_failure, "cannot write " + manifest_path.string());
  for (const auto& c : corpus) {
    save_clip(c.clip, dir / c.id / "attacked");
    save_clip(c.clean, dir / c.id / "clean");
    ManifestEntry e;
    e.clip = c.id + "/attacked";
    e.label = c.label;
    e.attack = c.attack;
    e.clean_dir = std::filesystem::path(c.id) / "clean";
    e.seed = c.oracle_seed;
    for (int n = 0; n < c.clip.frame_count(); ++n) {
      if (!(c.clip[n] == c.clean[n])) e.mask.push_back(n);
    }
    manifest << to_json(e).dump() << '\n';
  }
  return manifest_path;
}

}  // namespace vidshield
