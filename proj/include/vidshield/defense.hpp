#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vidshield/binary_io.hpp"
#include "vidshield/error.hpp"
#include "vidshield/frame.hpp"
#include "vidshield/motion.hpp"
#include "vidshield/transform.hpp"

namespace vidshield {

enum class ResidualMode { quantized, zero };

inline std::string_view to_string(ResidualMode mode) noexcept {
  return mode == ResidualMode::zero ? "zero" : "quantized";
}

inline ResidualMode residual_mode_from_string(std::string_view text) {
  if (text == "quantized") return ResidualMode::quantized;
  if (text == "zero") return ResidualMode::zero;
  fail(Errc::invalid_argument, "residual_mode must be 'quantized' or 'zero', got '" + std::string(text) + "'");
}

struct TemporalDefenseParams {
  int motion_block = 16;
  int search_range = 7;
  int dct_block = 8;
  double quant_step = 16.0;
  ResidualMode residual_mode = ResidualMode::quantized;

  void validate() const {
    if (motion_block < 1 || search_range < 1 || dct_block < 1) {
      fail(Errc::invalid_argument, "temporal defense block sizes and search range must be positive");
    }
    QuantSpec{quant_step}.validate();
  }
};

// What was needed to rebuild one frame: the clean reference it was predicted
// from, the motion field, and (quantized mode) one residual plan per channel.
struct DefenseRecord {
  int frame_index = 0;
  int reference_index = 0;
  MotionField field;
  std::vector<ResidualPlan> residuals;

  friend bool operator==(const DefenseRecord&, const DefenseRecord&) = default;
};

struct TemporalDefenseResult {
  VideoClip clip;
  std::vector<DefenseRecord> records;
};

// Nearest unmasked frame before `index`, else the nearest one after it.
inline std::optional<int> clean_reference_index(const FrameMask& mask, int index) {
  for (int k = index - 1; k >= 0; --k) {
    if (!mask[static_cast<std::size_t>(k)]) return k;
  }
  for (int k = index + 1; k < static_cast<int>(mask.size()); ++k) {
    if (!mask[static_cast<std::size_t>(k)]) return k;
  }
  return std::nullopt;
}

namespace detail {

inline Plane<double> channel_difference(const Frame& a, const Frame& b, int ch) {
  Plane<double> out(a.height(), a.width());
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      out(r, c) = static_cast<double>(a.at(r, c, ch)) - static_cast<double>(b.at(r, c, ch));
    }
  }
  return out;
}

}  // namespace detail

// Rebuilds a single attacked frame from a clean reference.
inline Frame reconstruct_frame(const Frame& attacked, const Frame& reference, const TemporalDefenseParams& params,
                               DefenseRecord* record = nullptr) {
  require_same_geometry(attacked, reference);
  MotionField field = estimate_motion_field(attacked, reference, params.motion_block, params.search_range);
  Frame prediction = motion_compensate(reference, field);

  std::vector<ResidualPlan> plans;
  if (params.residual_mode == ResidualMode::quantized) {
    Frame out(attacked.width(), attacked.height(), attacked.channels());
    for (int ch = 0; ch < attacked.channels(); ++ch) {
      ResidualPlan plan =
          encode_residual(detail::channel_difference(attacked, prediction, ch), params.dct_block, {params.quant_step});
      const auto decoded = decode_residual(plan);
      for (int r = 0; r < out.height(); ++r) {
        for (int c = 0; c < out.width(); ++c) {
          out.at(r, c, ch) = clamp_to_u8(prediction.at(r, c, ch) + decoded(r, c));
        }
      }
      plans.push_back(std::move(plan));
    }
    prediction = std::move(out);
  }
  if (record != nullptr) {
    record->field = std::move(field);
    record->residuals = std::move(plans);
  }
  return prediction;
}

// Masked frames are replaced by a motion-compensated prediction from the
// nearest clean frame (plus the quantized residual in quantized mode).
// Runs of masked frames all reference clean frames, never each other.
// Unmasked frames pass through untouched.
inline TemporalDefenseResult temporal_defend(const VideoClip& clip, const FrameMask& mask,
                                             const TemporalDefenseParams& params) {
  params.validate();
  if (static_cast<int>(mask.size()) != clip.frame_count()) {
    fail(Errc::dimension_mismatch, "mask length " + std::to_string(mask.size()) + " != frame count " +
                                       std::to_string(clip.frame_count()));
  }
  if (count_flagged(mask) == clip.frame_count()) {
    fail(Errc::all_adversarial, "every frame is masked; temporal defense has no clean reference");
  }

  std::vector<Frame> frames = clip.frames();
  std::vector<DefenseRecord> records;
  for (int k = 0; k < clip.frame_count(); ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    const int ref = *clean_reference_index(mask, k);
    DefenseRecord record;
    record.frame_index = k;
    record.reference_index = ref;
    frames[static_cast<std::size_t>(k)] = reconstruct_frame(clip[k], clip[ref], params, &record);
    records.push_back(std::move(record));
  }
  return {VideoClip(std::move(frames)), std::move(records)};
}

// Any dimension-preserving per-frame transform.
using SpatialDenoiser = std::function<Frame(const Frame&)>;

inline VideoClip spatial_defend(const VideoClip& clip, const SpatialDenoiser& denoiser) {
  std::vector<Frame> out;
  out.reserve(static_cast<std::size_t>(clip.frame_count()));
  for (int k = 0; k < clip.frame_count(); ++k) {
    Frame denoised = denoiser(clip[k]);
    if (!denoised.same_geometry(clip[k])) {
      fail(Errc::denoiser_contract,
           "denoiser changed the geometry of frame " + std::to_string(k) + " (" + std::to_string(clip.width()) + "x" +
               std::to_string(clip.height()) + "x" + std::to_string(clip.channels()) + " -> " +
               std::to_string(denoised.width()) + "x" + std::to_string(denoised.height()) + "x" +
               std::to_string(denoised.channels()) + ")");
    }
    out.push_back(std::move(denoised));
  }
  return VideoClip(std::move(out));
}

// Classical compressive denoiser: per channel block DCT, uniform
// quantization, inverse DCT, round and clamp to 8 bits.
inline Frame baseline_compressive_denoiser(const Frame& frame, int block_size, double quant_step) {
  const QuantSpec spec{quant_step};
  spec.validate();
  Frame out(frame.width(), frame.height(), frame.channels());
  for (int ch = 0; ch < frame.channels(); ++ch) {
    Plane<double> plane(frame.height(), frame.width());
    for (int r = 0; r < frame.height(); ++r) {
      for (int c = 0; c < frame.width(); ++c) plane(r, c) = frame.at(r, c, ch);
    }
    const auto decoded = decode_residual(encode_residual(plane, block_size, spec));
    for (int r = 0; r < frame.height(); ++r) {
      for (int c = 0; c < frame.width(); ++c) out.at(r, c, ch) = clamp_to_u8(decoded(r, c));
    }
  }
  return out;
}

inline SpatialDenoiser make_baseline_denoiser(int block_size = 8, double quant_step = 16.0) {
  QuantSpec{quant_step}.validate();
  if (block_size < 1) fail(Errc::invalid_argument, "denoiser block size must be positive");
  return [block_size, quant_step](const Frame& f) { return baseline_compressive_denoiser(f, block_size, quant_step); };
}

// ---------------------------------------------------------------------------
// Record file. Little-endian:
//   "VSDR" u32 version u32 count, then per record
//   u32 frame_index u32 reference_index
//   u32 frame_width u32 frame_height u32 block_width u32 block_height
//   u32 vector_count { i16 dy i16 dx f64 mad } * vector_count
//   u32 plan_count { u32 byte_length, residual plan bytes } * plan_count

inline constexpr std::uint32_t kDefenseRecordVersion = 1;

inline std::vector<std::uint8_t> serialize_defense_records(std::span<const DefenseRecord> records) {
  ByteWriter w;
  for (const char c : std::string_view("VSDR")) w.put(static_cast<std::uint8_t>(c));
  w.put(kDefenseRecordVersion);
  w.put(static_cast<std::uint32_t>(records.size()));
  for (const auto& rec : records) {
    w.put(static_cast<std::uint32_t>(rec.frame_index));
    w.put(static_cast<std::uint32_t>(rec.reference_index));
    w.put(static_cast<std::uint32_t>(rec.field.frame_width));
    w.put(static_cast<std::uint32_t>(rec.field.frame_height));
    w.put(static_cast<std::uint32_t>(rec.field.block_width));
    w.put(static_cast<std::uint32_t>(rec.field.block_height));
    w.put(static_cast<std::uint32_t>(rec.field.vectors.size()));
    for (std::size_t b = 0; b < rec.field.vectors.size(); ++b) {
      w.put(static_cast<std::int16_t>(rec.field.vectors[b].dy));
      w.put(static_cast<std::int16_t>(rec.field.vectors[b].dx));
      w.put(b < rec.field.mad.size() ? rec.field.mad[b] : 0.0);
    }
    w.put(static_cast<std::uint32_t>(rec.residuals.size()));
    for (const auto& plan : rec.residuals) {
      const auto bytes = serialize_residual_plan(plan);
      w.put(static_cast<std::uint32_t>(bytes.size()));
      w.put_bytes(bytes);
    }
  }
  return std::move(w).take();
}

inline std::vector<DefenseRecord> deserialize_defense_records(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (const char c : std::string_view("VSDR")) {
    if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(c)) fail(Errc::malformed_input, "not a defense record file");
  }
  if (r.get<std::uint32_t>() != kDefenseRecordVersion) fail(Errc::malformed_input, "unsupported record version");
  const auto count = r.get<std::uint32_t>();
  std::vector<DefenseRecord> records;
  for (std::uint32_t k = 0; k < count; ++k) {
    DefenseRecord rec;
    rec.frame_index = static_cast<int>(r.get<std::uint32_t>());
    rec.reference_index = static_cast<int>(r.get<std::uint32_t>());
    rec.field.frame_width = static_cast<int>(r.get<std::uint32_t>());
    rec.field.frame_height = static_cast<int>(r.get<std::uint32_t>());
    rec.field.block_width = static_cast<int>(r.get<std::uint32_t>());
    rec.field.block_height = static_cast<int>(r.get<std::uint32_t>());
    const auto vectors = r.get<std::uint32_t>();
    for (std::uint32_t b = 0; b < vectors; ++b) {
      const int dy = r.get<std::int16_t>();
      const int dx = r.get<std::int16_t>();
      rec.field.vectors.push_back({dy, dx});
      rec.field.mad.push_back(r.get<double>());
    }
    const auto plans = r.get<std::uint32_t>();
    for (std::uint32_t p = 0; p < plans; ++p) {
      const auto length = r.get<std::uint32_t>();
      rec.residuals.push_back(deserialize_residual_plan(r.get_bytes(length)));
    }
    records.push_back(std::move(rec));
  }
  if (!r.exhausted()) fail(Errc::malformed_input, "trailing bytes after defense records");
  return records;
}

}  // namespace vidshield
