#pragma once

#include <png.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vidshield/error.hpp"
#include "vidshield/frame.hpp"

namespace vidshield {

namespace fs = std::filesystem;

inline std::vector<std::uint8_t> encode_png(const Frame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = frame.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  const png_int_32 stride = frame.width() * frame.channels();
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, frame.samples().data(), stride, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    fail(Errc::io_failure, "png encode failed: " + msg);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, frame.samples().data(), stride, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    fail(Errc::io_failure, "png encode failed: " + msg);
  }
  out.resize(size);
  return out;
}

// Accepts 8-bit gray or RGB images (palette and low-bit-depth gray are
// expanded losslessly). Images with alpha or 16-bit samples are rejected
// since they cannot be represented bit-exactly.
inline Frame decode_png(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>") {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    fail(Errc::decode_failure, name + ": " + image.message);
  }
  if (image.format & (PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_LINEAR)) {
    png_image_free(&image);
    fail(Errc::decode_failure, name + ": alpha or 16-bit PNGs are not supported");
  }
  const int channels = (image.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int width = static_cast<int>(image.width);
  const int height = static_cast<int>(image.height);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height * channels);
  if (!png_image_finish_read(&image, nullptr, data.data(), width * channels, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    fail(Errc::decode_failure, name + ": " + msg);
  }
  return Frame(width, height, channels, std::move(data));
}

inline std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_failure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io_failure, "write failed for " + path.string());
}

// frame_%06d.png, 0-based.
inline std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.png", index);
  return buf;
}

// Returns the numeric index when the filename follows the naming convention.
inline std::optional<int> parse_frame_filename(const std::string& name) {
  constexpr std::string_view prefix = "frame_";
  constexpr std::string_view suffix = ".png";
  if (name.size() != prefix.size() + 6 + suffix.size()) return std::nullopt;
  if (!name.starts_with(prefix) || !name.ends_with(suffix)) return std::nullopt;
  int value = 0;
  for (std::size_t k = prefix.size(); k < prefix.size() + 6; ++k) {
    if (name[k] < '0' || name[k] > '9') return std::nullopt;
    value = value * 10 + (name[k] - '0');
  }
  return value;
}

inline std::vector<std::pair<int, fs::path>> list_frame_files(const fs::path& dir) {
  std::vector<std::pair<int, fs::path>> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    if (auto index = parse_frame_filename(entry.path().filename().string())) {
      files.emplace_back(*index, entry.path());
    }
  }
  if (ec) fail(Errc::io_failure, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());
  return files;
}

inline VideoClip load_clip(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(Errc::io_failure, "clip directory not found: " + dir.string());
  const auto files = list_frame_files(dir);
  if (files.empty()) fail(Errc::empty_input, "no frame_NNNNNN.png files in " + dir.string());

  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& [index, path] : files) {
    const auto bytes = read_file_bytes(path);
    Frame frame = decode_png(bytes, path.filename().string());
    if (!frames.empty() && !frame.same_geometry(frames.front())) {
      fail(Errc::dimension_mismatch,
           path.filename().string() + ": " + std::to_string(frame.width()) + "x" +
               std::to_string(frame.height()) + "x" + std::to_string(frame.channels()) +
               " differs from " + files.front().second.filename().string() + " (" +
               std::to_string(frames.front().width()) + "x" + std::to_string(frames.front().height()) +
               "x" + std::to_string(frames.front().channels()) + ")");
    }
    frames.push_back(std::move(frame));
  }
  return VideoClip(std::move(frames));
}

// Existing frame files in the destination are removed first so a later
// load_clip sees exactly this clip.
inline void save_clip(const VideoClip& clip, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    fail(Errc::io_failure, "cannot create " + dir.string() + (ec ? ": " + ec.message() : ""));
  }
  for (const auto& [index, path] : list_frame_files(dir)) {
    fs::remove(path, ec);
    if (ec) fail(Errc::io_failure, "cannot remove stale " + path.string());
  }
  for (int k = 0; k < clip.frame_count(); ++k) {
    write_file_bytes(dir / frame_filename(k), encode_png(clip[k]));
  }
}

}  // namespace vidshield
