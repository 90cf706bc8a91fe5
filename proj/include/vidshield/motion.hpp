#pragma once

#include <cstdint>
#include <cstdlib>
#include <string>
#include <tuple>
#include <vector>

#include "vidshield/error.hpp"
#include "vidshield/frame.hpp"

namespace vidshield {

// Rectangular patch of a frame. row/height run vertically, col/width
// horizontally; the patch always lies inside the frame it was cut from.
struct BlockSpec {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  int area() const noexcept { return height * width; }
  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

// Displacement into the reference frame: dy is the row offset (i),
// dx the column offset (j).
struct MotionVector {
  int dy = 0;
  int dx = 0;

  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

struct SearchResult {
  MotionVector vector;
  double mad = 0.0;
};

// Non-overlapping tiling, left-to-right then top-to-bottom. Blocks on the
// right/bottom edge are truncated to fit.
inline std::vector<BlockSpec> partition_blocks(int width, int height, int block_width, int block_height) {
  if (width < 1 || height < 1) fail(Errc::invalid_argument, "partition_blocks: frame dimensions must be positive");
  if (block_width < 1 || block_height < 1) fail(Errc::invalid_argument, "partition_blocks: block dimensions must be positive");
  std::vector<BlockSpec> blocks;
  for (int r = 0; r < height; r += block_height) {
    for (int c = 0; c < width; c += block_width) {
      blocks.push_back({r, c, std::min(block_height, height - r), std::min(block_width, width - c)});
    }
  }
  return blocks;
}

namespace detail {

inline bool displaced_in_bounds(const LumaPlane& reference, const BlockSpec& block, MotionVector d) noexcept {
  const int r0 = block.row + d.dy;
  const int c0 = block.col + d.dx;
  return r0 >= 0 && c0 >= 0 && r0 + block.height <= reference.rows() && c0 + block.width <= reference.cols();
}

inline std::int64_t block_sad(const LumaPlane& current, const LumaPlane& reference, const BlockSpec& block,
                              MotionVector d) noexcept {
  std::int64_t sad = 0;
  for (int m = 0; m < block.height; ++m) {
    for (int n = 0; n < block.width; ++n) {
      sad += std::abs(static_cast<int>(current(block.row + m, block.col + n)) -
                      static_cast<int>(reference(block.row + m + d.dy, block.col + n + d.dx)));
    }
  }
  return sad;
}

inline void require_block_inside(const LumaPlane& plane, const BlockSpec& block) {
  if (block.height < 1 || block.width < 1 || block.row < 0 || block.col < 0 ||
      block.row + block.height > plane.rows() || block.col + block.width > plane.cols()) {
    fail(Errc::out_of_range, "block lies outside the current frame");
  }
}

}  // namespace detail

// Mean absolute difference between the block in `current` and the block
// displaced by `disp` in `reference`, over m in [0,height), n in [0,width).
inline double block_mad(const LumaPlane& current, const LumaPlane& reference, const BlockSpec& block,
                        MotionVector disp) {
  detail::require_block_inside(current, block);
  if (!detail::displaced_in_bounds(reference, block, disp)) {
    fail(Errc::out_of_range, "displaced patch (" + std::to_string(disp.dy) + "," + std::to_string(disp.dx) +
                                 ") falls outside the reference frame");
  }
  return static_cast<double>(detail::block_sad(current, reference, block, disp)) / block.area();
}

// Exhaustive search over |dy|,|dx| <= range. Out-of-bounds candidates are
// skipped. Ties resolve to the smallest dy^2+dx^2, then lexicographic (dy,dx).
inline SearchResult full_search(const LumaPlane& current, const LumaPlane& reference, const BlockSpec& block,
                                int search_range) {
  if (search_range < 0) fail(Errc::invalid_argument, "search range must be nonnegative");
  detail::require_block_inside(current, block);

  bool found = false;
  std::tuple<std::int64_t, int, int, int> best{};
  for (int dy = -search_range; dy <= search_range; ++dy) {
    for (int dx = -search_range; dx <= search_range; ++dx) {
      const MotionVector d{dy, dx};
      if (!detail::displaced_in_bounds(reference, block, d)) continue;
      const std::tuple candidate{detail::block_sad(current, reference, block, d), dy * dy + dx * dx, dy, dx};
      if (!found || candidate < best) {
        best = candidate;
        found = true;
      }
    }
  }
  if (!found) fail(Errc::out_of_range, "full_search: no in-bounds candidate displacement");
  const auto [sad, norm, dy, dx] = best;
  return {{dy, dx}, static_cast<double>(sad) / block.area()};
}

struct MotionField {
  int frame_width = 0;
  int frame_height = 0;
  int block_width = 0;
  int block_height = 0;
  std::vector<MotionVector> vectors;  // one per partition block, in partition order
  std::vector<double> mad;

  std::vector<BlockSpec> blocks() const {
    return partition_blocks(frame_width, frame_height, block_width, block_height);
  }
  friend bool operator==(const MotionField&, const MotionField&) = default;
};

inline MotionField estimate_motion_field(const LumaPlane& current, const LumaPlane& reference, int block_size,
                                         int search_range) {
  if (!current.same_shape(reference)) {
    fail(Errc::dimension_mismatch, "estimate_motion_field: current and reference planes differ in size");
  }
  MotionField field{current.cols(), current.rows(), block_size, block_size, {}, {}};
  for (const auto& block : partition_blocks(current.cols(), current.rows(), block_size, block_size)) {
    const auto result = full_search(current, reference, block, search_range);
    field.vectors.push_back(result.vector);
    field.mad.push_back(result.mad);
  }
  return field;
}

// Search runs on the luma plane of both frames.
inline MotionField estimate_motion_field(const Frame& current, const Frame& reference, int block_size,
                                         int search_range) {
  require_same_geometry(current, reference);
  return estimate_motion_field(luma(current), luma(reference), block_size, search_range);
}

// Copies every block from the reference at its motion vector, all channels.
inline Frame motion_compensate(const Frame& reference, const MotionField& field) {
  if (field.frame_width != reference.width() || field.frame_height != reference.height()) {
    fail(Errc::dimension_mismatch, "motion field geometry does not match the reference frame");
  }
  const auto blocks = field.blocks();
  if (blocks.size() != field.vectors.size()) {
    fail(Errc::dimension_mismatch, "motion field has " + std::to_string(field.vectors.size()) +
                                       " vectors for " + std::to_string(blocks.size()) + " blocks");
  }
  Frame out(reference.width(), reference.height(), reference.channels());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    const auto d = field.vectors[b];
    if (blk.row + d.dy < 0 || blk.col + d.dx < 0 || blk.row + d.dy + blk.height > reference.height() ||
        blk.col + d.dx + blk.width > reference.width()) {
      fail(Errc::out_of_range, "motion vector of block " + std::to_string(b) + " points outside the reference");
    }
    for (int m = 0; m < blk.height; ++m) {
      for (int n = 0; n < blk.width; ++n) {
        for (int ch = 0; ch < reference.channels(); ++ch) {
          out.at(blk.row + m, blk.col + n, ch) = reference.at(blk.row + m + d.dy, blk.col + n + d.dx, ch);
        }
      }
    }
  }
  return out;
}

}  // namespace vidshield
