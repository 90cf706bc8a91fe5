#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vidshield/error.hpp"
#include "vidshield/frame.hpp"

namespace vidshield {

// Per-frame predicted class labels, frame 0 first. Producers must classify
// each frame independently (no recurrent state carried across frames).
struct LabelStream {
  std::vector<int> labels;

  int frame_count() const noexcept { return static_cast<int>(labels.size()); }
  friend bool operator==(const LabelStream&, const LabelStream&) = default;
};

struct DetectionThresholds {
  double gamma1 = 0.175;
  double gamma2 = 0.3;

  void validate() const {
    if (!(gamma1 >= 0.0 && gamma2 <= 1.0 && gamma1 < gamma2)) {
      fail(Errc::invalid_argument, "thresholds must satisfy 0 <= gamma1 < gamma2 <= 1 (got " +
                                       std::to_string(gamma1) + ", " + std::to_string(gamma2) + ")");
    }
  }
};

enum class VerdictKind { Clean, SparseAdversarial, DenseAdversarial };

inline std::string_view to_string(VerdictKind kind) noexcept {
  switch (kind) {
    case VerdictKind::Clean: return "clean";
    case VerdictKind::SparseAdversarial: return "sparse";
    case VerdictKind::DenseAdversarial: return "dense";
  }
  return "clean";
}

inline VerdictKind verdict_from_string(std::string_view text) {
  if (text == "clean" || text == "none") return VerdictKind::Clean;
  if (text == "sparse") return VerdictKind::SparseAdversarial;
  if (text == "dense") return VerdictKind::DenseAdversarial;
  fail(Errc::malformed_input, "unknown verdict/attack kind '" + std::string(text) + "'");
}

struct DetectionVerdict {
  double alpha = 0.0;
  VerdictKind kind = VerdictKind::Clean;
};

namespace detail {

inline void require_detectable(const LabelStream& stream) {
  if (stream.frame_count() < 3) {
    fail(Errc::too_short, "exception index needs at least 3 frames, got " +
                              std::to_string(stream.frame_count()));
  }
}

}  // namespace detail

// Interior frame n is an exception when its label differs from both
// neighbours. The first and last frames are never flagged.
inline FrameMask exception_frame_mask(const LabelStream& stream) {
  detail::require_detectable(stream);
  const auto& f = stream.labels;
  FrameMask mask(f.size(), false);
  for (std::size_t n = 1; n + 1 < f.size(); ++n) {
    mask[n] = f[n - 1] != f[n] && f[n + 1] != f[n];
  }
  return mask;
}

// alpha = (#exception frames) / T. The normalizer is the full frame count
// even though only T-2 frames can qualify, so alpha <= (T-2)/T.
inline double compute_exception_index(const LabelStream& stream) {
  const FrameMask mask = exception_frame_mask(stream);
  return static_cast<double>(count_flagged(mask)) / static_cast<double>(stream.frame_count());
}

inline DetectionVerdict classify_verdict(double alpha, const DetectionThresholds& thresholds) {
  thresholds.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    fail(Errc::invalid_argument, "alpha must lie in [0,1], got " + std::to_string(alpha));
  }
  DetectionVerdict verdict{alpha, VerdictKind::Clean};
  if (alpha >= thresholds.gamma2) {
    verdict.kind = VerdictKind::DenseAdversarial;
  } else if (alpha >= thresholds.gamma1) {
    verdict.kind = VerdictKind::SparseAdversarial;
  }
  return verdict;
}

inline DetectionVerdict detect(const LabelStream& stream, const DetectionThresholds& thresholds) {
  return classify_verdict(compute_exception_index(stream), thresholds);
}

// ---------------------------------------------------------------------------
// Calibration and ROC.

struct ScoredSample {
  double score = 0.0;
  bool positive = false;
};

struct CalibrationRow {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double f1_score(double precision, double recall) noexcept {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

inline CalibrationRow make_calibration_row(double threshold, double precision, double recall) noexcept {
  return {threshold, precision, recall, f1_score(precision, recall)};
}

struct CalibrationTable {
  std::vector<CalibrationRow> rows;
};

namespace detail {

inline void require_both_classes(std::span<const ScoredSample> samples, const char* what) {
  if (samples.empty()) fail(Errc::empty_input, std::string(what) + ": no samples");
  const bool has_pos = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.positive; });
  const bool has_neg = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return !s.positive; });
  if (!has_pos || !has_neg) {
    fail(Errc::calibration_undefined, std::string(what) + ": samples must contain both classes");
  }
}

}  // namespace detail

// Predicted positive iff score >= threshold.
inline CalibrationTable sweep_thresholds(std::span<const ScoredSample> samples,
                                         std::span<const double> candidates) {
  detail::require_both_classes(samples, "sweep_thresholds");
  CalibrationTable table;
  table.rows.reserve(candidates.size());
  for (const double t : candidates) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& s : samples) {
      const bool predicted = s.score >= t;
      if (predicted && s.positive) ++tp;
      else if (predicted) ++fp;
      else if (s.positive) ++fn;
    }
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    table.rows.push_back(make_calibration_row(t, precision, recall));
  }
  return table;
}

// Highest F1 wins; ties go to the smallest threshold, so the result does not
// depend on row order.
inline double select_optimal_threshold(const CalibrationTable& table) {
  if (table.rows.empty()) fail(Errc::empty_input, "select_optimal_threshold: empty table");
  const CalibrationRow* best = &table.rows.front();
  for (const auto& row : table.rows) {
    if (row.f1 > best->f1 || (row.f1 == best->f1 && row.threshold < best->threshold)) best = &row;
  }
  return best->threshold;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

// Descending-score sweep with tied scores collapsed into a single step;
// AUC by the trapezoidal rule.
inline RocCurve roc_curve(std::span<const ScoredSample> samples) {
  detail::require_both_classes(samples, "roc_curve");
  std::vector<ScoredSample> sorted(samples.begin(), samples.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  const auto positives = static_cast<double>(
      std::count_if(sorted.begin(), sorted.end(), [](const auto& s) { return s.positive; }));
  const double negatives = static_cast<double>(sorted.size()) - positives;

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < sorted.size();) {
    const double score = sorted[k].score;
    for (; k < sorted.size() && sorted[k].score == score; ++k) {
      (sorted[k].positive ? tp : fp)++;
    }
    const RocPoint next{static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives};
    const RocPoint& prev = curve.points.back();
    curve.auc += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) / 2.0;
    curve.points.push_back(next);
  }
  return curve;
}

// Macro-averaged F1 over the three verdict kinds.
inline double macro_f1(std::span<const VerdictKind> truth, std::span<const VerdictKind> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    fail(Errc::invalid_argument, "macro_f1: truth and prediction lengths differ or are empty");
  }
  constexpr std::array kinds{VerdictKind::Clean, VerdictKind::SparseAdversarial, VerdictKind::DenseAdversarial};
  double total = 0.0;
  for (const auto kind : kinds) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      const bool t = truth[k] == kind;
      const bool p = predicted[k] == kind;
      if (t && p) ++tp;
      else if (p) ++fp;
      else if (t) ++fn;
    }
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    total += f1_score(precision, recall);
  }
  return total / static_cast<double>(kinds.size());
}

}  // namespace vidshield
