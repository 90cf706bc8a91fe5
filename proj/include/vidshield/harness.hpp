#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "vidshield/detection.hpp"
#include "vidshield/error.hpp"
#include "vidshield/frame.hpp"

namespace vidshield {

// ---------------------------------------------------------------------------
// Deterministic randomness. std distributions are implementation-defined, so
// bounded draws are done by hand on top of the fully specified mt19937_64.

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Uniform integer in [lo, hi] by rejection sampling.
inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return lo + static_cast<std::int64_t>(draw % span);
}

inline double uniform_real(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// FNV-1a, used to derive stable per-clip seeds from identifiers.
inline std::uint64_t stable_hash(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Synthetic content.

enum class SceneStyle {
  // Smooth multi-orientation sinusoids, a function of absolute canvas
  // coordinates, so sampling at a shifted origin is an exact translation.
  waves,
  // Piecewise-constant tiles of random even intensity on an aligned grid.
  // Strong edges for block matching; each tile is DC-only under an aligned
  // block DCT.
  mosaic,
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  int channels = 1;
  std::uint64_t seed = 0;
  SceneStyle style = SceneStyle::waves;
  int tile = 8;
};

inline Frame synthesize_scene(const SceneSpec& spec, int origin_row = 0, int origin_col = 0) {
  Frame frame(spec.width, spec.height, spec.channels);
  std::mt19937_64 rng(mix_seed(spec.seed, 0x5ce4e));

  if (spec.style == SceneStyle::mosaic) {
    if (spec.tile < 1) fail(Errc::invalid_argument, "mosaic tile size must be positive");
    auto floor_div = [](int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
    for (int r = 0; r < spec.height; ++r) {
      for (int c = 0; c < spec.width; ++c) {
        const auto ty = static_cast<std::uint64_t>(static_cast<std::int64_t>(floor_div(r + origin_row, spec.tile)));
        const auto tx = static_cast<std::uint64_t>(static_cast<std::int64_t>(floor_div(c + origin_col, spec.tile)));
        for (int ch = 0; ch < spec.channels; ++ch) {
          const auto h = mix_seed(spec.seed, (ty << 40) ^ (tx << 8) ^ static_cast<std::uint64_t>(ch));
          frame.at(r, c, ch) = static_cast<std::uint8_t>(48 + 2 * (h % 81));
        }
      }
    }
    return frame;
  }

  struct Wave {
    double fy, fx, phase, amplitude;
  };
  std::vector<Wave> waves;
  for (int w = 0; w < 3; ++w) {
    const double period = 24.0 + 16.0 * uniform_real(rng);
    const double angle = std::numbers::pi * (w / 3.0 + 0.25 * uniform_real(rng));
    waves.push_back({std::sin(angle) / period, std::cos(angle) / period, 2.0 * std::numbers::pi * uniform_real(rng),
                     25.0 + 10.0 * uniform_real(rng)});
  }
  std::vector<double> channel_offset;
  for (int ch = 0; ch < spec.channels; ++ch) channel_offset.push_back(-25.0 + 50.0 * uniform_real(rng));

  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      const double y = r + origin_row;
      const double x = c + origin_col;
      double v = 128.0;
      for (const auto& w : waves) v += w.amplitude * std::sin(2.0 * std::numbers::pi * (w.fy * y + w.fx * x) + w.phase);
      for (int ch = 0; ch < spec.channels; ++ch) frame.at(r, c, ch) = clamp_to_u8(v + channel_offset[ch]);
    }
  }
  return frame;
}

inline VideoClip make_static_clip(const Frame& scene, int frame_count) {
  if (frame_count < 1) fail(Errc::invalid_argument, "frame count must be positive");
  return VideoClip(std::vector<Frame>(static_cast<std::size_t>(frame_count), scene));
}

// Frame k shows the scene shifted by k * (step_rows, step_cols): content
// moves up/left as the window slides down/right.
inline VideoClip make_panning_clip(const SceneSpec& spec, int frame_count, int step_rows, int step_cols) {
  if (frame_count < 1) fail(Errc::invalid_argument, "frame count must be positive");
  std::vector<Frame> frames;
  for (int k = 0; k < frame_count; ++k) frames.push_back(synthesize_scene(spec, k * step_rows, k * step_cols));
  return VideoClip(std::move(frames));
}

// ---------------------------------------------------------------------------
// Attacks.

enum class AttackKind { none, sparse, dense };

inline std::string_view to_string(AttackKind kind) noexcept {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::sparse: return "sparse";
    case AttackKind::dense: return "dense";
  }
  return "none";
}

inline AttackKind attack_kind_from_string(std::string_view text) {
  if (text == "none") return AttackKind::none;
  if (text == "sparse") return AttackKind::sparse;
  if (text == "dense") return AttackKind::dense;
  fail(Errc::malformed_input, "attack must be none, sparse or dense; got '" + std::string(text) + "'");
}

inline VerdictKind expected_verdict(AttackKind kind) noexcept {
  switch (kind) {
    case AttackKind::none: return VerdictKind::Clean;
    case AttackKind::sparse: return VerdictKind::SparseAdversarial;
    case AttackKind::dense: return VerdictKind::DenseAdversarial;
  }
  return VerdictKind::Clean;
}

struct AttackSpec {
  AttackKind kind = AttackKind::sparse;
  int epsilon = 8;
  int sparse_frame_count = 1;
  std::uint64_t seed = 0;

  void validate(int frame_count) const {
    if (epsilon <= 0 || epsilon > 64) fail(Errc::invalid_argument, "epsilon must lie in (0, 64]");
    if (kind == AttackKind::sparse && (sparse_frame_count < 1 || sparse_frame_count >= frame_count)) {
      fail(Errc::invalid_argument, "sparse attack needs 1 <= k < T (k=" + std::to_string(sparse_frame_count) +
                                       ", T=" + std::to_string(frame_count) + ")");
    }
  }
};

// Adds seeded uniform integer noise in [-epsilon, epsilon], clamped to 8 bits.
// Each frame index draws from its own stream, so frames are independent.
inline Frame add_uniform_noise(const Frame& frame, int epsilon, std::uint64_t seed, int frame_index) {
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(frame_index)));
  Frame out = frame;
  for (auto& s : out.samples()) {
    s = static_cast<std::uint8_t>(std::clamp<std::int64_t>(s + uniform_int(rng, -epsilon, epsilon), 0, 255));
  }
  return out;
}

// Picks k attacked frames. While k <= T-2 only interior frames are chosen,
// since the detector can never flag the first or last frame.
inline std::vector<int> choose_sparse_frames(int frame_count, int k, std::uint64_t seed) {
  if (k < 1 || k >= frame_count) fail(Errc::invalid_argument, "sparse frame count must satisfy 1 <= k < T");
  std::mt19937_64 rng(mix_seed(seed, 0xa77ac));
  std::vector<int> pool;
  for (int n = 1; n + 1 < frame_count; ++n) pool.push_back(n);
  std::vector<int> chosen;
  if (k > static_cast<int>(pool.size())) {
    chosen = pool;
    chosen.push_back(uniform_int(rng, 0, 1) == 0 ? 0 : frame_count - 1);
  } else {
    for (int i = 0; i < k; ++i) {
      const auto j = static_cast<std::size_t>(uniform_int(rng, i, static_cast<std::int64_t>(pool.size()) - 1));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      chosen.push_back(pool[static_cast<std::size_t>(i)]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

struct AttackResult {
  VideoClip clip;
  FrameMask mask;
};

// Noise only on the listed frames. Boundary frames are allowed here, which
// makes deliberately undetectable attacks constructible for negative tests.
inline AttackResult inject_noise_on_frames(const VideoClip& clip, const std::vector<int>& frames, int epsilon,
                                           std::uint64_t seed) {
  FrameMask mask(static_cast<std::size_t>(clip.frame_count()), false);
  std::vector<Frame> out = clip.frames();
  for (const int n : frames) {
    if (n < 0 || n >= clip.frame_count()) fail(Errc::out_of_range, "attacked frame index out of range");
    mask[static_cast<std::size_t>(n)] = true;
    out[static_cast<std::size_t>(n)] = add_uniform_noise(clip[n], epsilon, seed, n);
  }
  return {VideoClip(std::move(out)), std::move(mask)};
}

inline AttackResult inject_sparse_attack(const VideoClip& clip, const AttackSpec& spec) {
  if (spec.kind != AttackKind::sparse) fail(Errc::invalid_argument, "inject_sparse_attack needs a sparse spec");
  spec.validate(clip.frame_count());
  return inject_noise_on_frames(clip, choose_sparse_frames(clip.frame_count(), spec.sparse_frame_count, spec.seed),
                                spec.epsilon, spec.seed);
}

inline VideoClip inject_dense_attack(const VideoClip& clip, const AttackSpec& spec) {
  if (spec.kind != AttackKind::dense) fail(Errc::invalid_argument, "inject_dense_attack needs a dense spec");
  spec.validate(clip.frame_count());
  std::vector<int> all(static_cast<std::size_t>(clip.frame_count()));
  for (int n = 0; n < clip.frame_count(); ++n) all[static_cast<std::size_t>(n)] = n;
  return inject_noise_on_frames(clip, all, spec.epsilon, spec.seed).clip;
}

// ---------------------------------------------------------------------------
// Oracle classifier. A frame keeps the true label while its MSE against the
// clean reference stays within tau; beyond that it flips to a wrong label
// drawn from (seed, frame index) alone.

struct OracleClassifierSpec {
  int true_label = 0;
  double tau = 4.0;
  std::uint64_t seed = 0;
  int num_classes = 101;

  void validate() const {
    if (!(tau > 0.0)) fail(Errc::invalid_argument, "oracle tau must be positive");
    if (num_classes < 2) fail(Errc::invalid_argument, "oracle needs at least two classes");
    if (true_label < 0 || true_label >= num_classes) {
      fail(Errc::invalid_argument, "true label " + std::to_string(true_label) + " outside [0, " +
                                       std::to_string(num_classes) + ")");
    }
  }
};

inline int oracle_wrong_label(const OracleClassifierSpec& spec, int frame_index) {
  const std::uint64_t h = mix_seed(spec.seed, 0x10000000ULL + static_cast<std::uint64_t>(frame_index));
  const int wrong = static_cast<int>(h % static_cast<std::uint64_t>(spec.num_classes - 1));
  return wrong >= spec.true_label ? wrong + 1 : wrong;
}

inline LabelStream oracle_classify(const VideoClip& clip, const VideoClip& clean_reference,
                                   const OracleClassifierSpec& spec) {
  spec.validate();
  if (!clip.same_geometry(clean_reference)) {
    fail(Errc::dimension_mismatch, "oracle_classify: clip and clean reference differ in geometry or length");
  }
  LabelStream stream;
  for (int n = 0; n < clip.frame_count(); ++n) {
    const bool intact = frame_mse(clip[n], clean_reference[n]) <= spec.tau;
    stream.labels.push_back(intact ? spec.true_label : oracle_wrong_label(spec, n));
  }
  return stream;
}

inline double label_accuracy(const LabelStream& stream, int true_label) {
  if (stream.labels.empty()) fail(Errc::empty_input, "label_accuracy: empty stream");
  const auto hits = std::count(stream.labels.begin(), stream.labels.end(), true_label);
  return static_cast<double>(hits) / static_cast<double>(stream.labels.size());
}

inline double mean_frame_mse(const VideoClip& a, const VideoClip& b) {
  if (!a.same_geometry(b)) fail(Errc::dimension_mismatch, "mean_frame_mse: clips differ in geometry or length");
  double total = 0.0;
  for (int n = 0; n < a.frame_count(); ++n) total += frame_mse(a[n], b[n]);
  return total / a.frame_count();
}

}  // namespace vidshield
