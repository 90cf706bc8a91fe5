#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vidshield/error.hpp"

namespace vidshield {

// Dense row-major 2-D array. Used for luma planes, residual planes and
// transform blocks alike.
template <typename T>
class Plane {
 public:
  using value_type = T;

  Plane() = default;
  Plane(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) {
      fail(Errc::invalid_argument, "plane dimensions must be nonnegative");
    }
    data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
  }
  Plane(int rows, int cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 0 || cols < 0 ||
        data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
      fail(Errc::invalid_argument, "plane data length does not match dimensions");
    }
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int r, int c) noexcept {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const T& operator()(int r, int c) const noexcept {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(const Plane& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using LumaPlane = Plane<std::uint8_t>;

// One 8-bit raster, 1 (gray) or 3 (RGB) interleaved channels.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, int channels, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    validate_geometry();
    data_.assign(sample_count(), fill);
  }
  Frame(int width, int height, int channels, std::vector<std::uint8_t> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    validate_geometry();
    if (data_.size() != sample_count()) {
      fail(Errc::invalid_argument, "frame data length " + std::to_string(data_.size()) +
                                       " does not match " + std::to_string(width) + "x" +
                                       std::to_string(height) + "x" + std::to_string(channels));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }

  std::uint8_t& at(int row, int col, int ch = 0) noexcept {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }
  std::uint8_t at(int row, int col, int ch = 0) const noexcept {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }

  std::span<std::uint8_t> samples() noexcept { return data_; }
  std::span<const std::uint8_t> samples() const noexcept { return data_; }

  bool same_geometry(const Frame& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  Plane<std::uint8_t> channel(int ch) const {
    Plane<std::uint8_t> out(height_, width_);
    for (int r = 0; r < height_; ++r) {
      for (int c = 0; c < width_; ++c) out(r, c) = at(r, c, ch);
    }
    return out;
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t sample_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_ * channels_;
  }
  void validate_geometry() const {
    if (width_ < 1 || height_ < 1) fail(Errc::invalid_argument, "frame dimensions must be positive");
    if (channels_ != 1 && channels_ != 3) fail(Errc::invalid_argument, "frame must have 1 or 3 channels");
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

// Ordered frame sequence with shared geometry.
class VideoClip {
 public:
  VideoClip() = default;
  explicit VideoClip(std::vector<Frame> frames) : frames_(std::move(frames)) {
    if (frames_.empty()) fail(Errc::empty_input, "clip must contain at least one frame");
    for (std::size_t k = 1; k < frames_.size(); ++k) {
      if (!frames_[k].same_geometry(frames_.front())) {
        fail(Errc::dimension_mismatch, "frame " + std::to_string(k) + " geometry differs from frame 0");
      }
    }
  }

  int frame_count() const noexcept { return static_cast<int>(frames_.size()); }
  int width() const noexcept { return frames_.empty() ? 0 : frames_.front().width(); }
  int height() const noexcept { return frames_.empty() ? 0 : frames_.front().height(); }
  int channels() const noexcept { return frames_.empty() ? 0 : frames_.front().channels(); }

  const Frame& operator[](int k) const { return frames_.at(static_cast<std::size_t>(k)); }
  const std::vector<Frame>& frames() const noexcept { return frames_; }

  bool same_geometry(const VideoClip& other) const noexcept {
    return frame_count() == other.frame_count() &&
           (frames_.empty() || frames_.front().same_geometry(other.frames_.front()));
  }

  friend bool operator==(const VideoClip&, const VideoClip&) = default;

 private:
  std::vector<Frame> frames_;
};

// true marks an exception (adversarial) frame.
using FrameMask = std::vector<bool>;

inline int count_flagged(const FrameMask& mask) {
  return static_cast<int>(std::count(mask.begin(), mask.end(), true));
}

inline void require_same_geometry(const Frame& a, const Frame& b) {
  if (!a.same_geometry(b)) {
    fail(Errc::dimension_mismatch,
         "frame geometry mismatch: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + "x" +
             std::to_string(a.channels()) + " vs " + std::to_string(b.width()) + "x" +
             std::to_string(b.height()) + "x" + std::to_string(b.channels()));
  }
}

inline double frame_mse(const Frame& a, const Frame& b) {
  require_same_geometry(a, b);
  const auto sa = a.samples();
  const auto sb = b.samples();
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < sa.size(); ++k) {
    const int d = static_cast<int>(sa[k]) - static_cast<int>(sb[k]);
    sum += static_cast<std::uint64_t>(d * d);
  }
  return static_cast<double>(sum) / static_cast<double>(sa.size());
}

// +infinity when the frames are identical.
inline double frame_psnr(const Frame& a, const Frame& b) {
  const double mse = frame_mse(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

inline std::uint8_t clamp_to_u8(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

// round(0.299 R + 0.587 G + 0.114 B); gray frames are returned as-is.
inline LumaPlane luma(const Frame& frame) {
  if (frame.channels() == 1) return frame.channel(0);
  LumaPlane out(frame.height(), frame.width());
  for (int r = 0; r < frame.height(); ++r) {
    for (int c = 0; c < frame.width(); ++c) {
      out(r, c) = clamp_to_u8(0.299 * frame.at(r, c, 0) + 0.587 * frame.at(r, c, 1) +
                              0.114 * frame.at(r, c, 2));
    }
  }
  return out;
}

}  // namespace vidshield
