#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vidshield/binary_io.hpp"
#include "vidshield/error.hpp"
#include "vidshield/frame.hpp"

namespace vidshield {

using DctBlock = Plane<double>;
using QuantizedBlock = Plane<std::int64_t>;

// Orthonormal DCT-II basis: basis(k, n) = s(k) cos(pi (2n+1) k / 2B).
inline Plane<double> dct_basis(int size) {
  if (size < 1) fail(Errc::invalid_argument, "DCT size must be positive");
  Plane<double> basis(size, size);
  const double dc_scale = std::sqrt(1.0 / size);
  const double ac_scale = std::sqrt(2.0 / size);
  for (int k = 0; k < size; ++k) {
    for (int n = 0; n < size; ++n) {
      basis(k, n) = (k == 0 ? dc_scale : ac_scale) *
                    std::cos(std::numbers::pi * (2 * n + 1) * k / (2.0 * size));
    }
  }
  return basis;
}

namespace detail {

inline void require_square(const Plane<double>& block, const char* what) {
  if (block.rows() != block.cols() || block.rows() < 1) {
    fail(Errc::invalid_argument, std::string(what) + ": block must be square and nonempty, got " +
                                     std::to_string(block.rows()) + "x" + std::to_string(block.cols()));
  }
}

// out = A * X * A^T when transpose_basis is false, A^T * X * A otherwise.
inline Plane<double> separable_product(const Plane<double>& basis, const Plane<double>& x, bool transpose_basis) {
  const int n = x.rows();
  auto a = [&](int r, int c) { return transpose_basis ? basis(c, r) : basis(r, c); };
  Plane<double> tmp(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += a(r, k) * x(k, c);
      tmp(r, c) = acc;
    }
  }
  Plane<double> out(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += tmp(r, k) * a(c, k);
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace detail

inline DctBlock forward_dct(const Plane<double>& block) {
  detail::require_square(block, "forward_dct");
  return detail::separable_product(dct_basis(block.rows()), block, false);
}

inline Plane<double> inverse_dct(const DctBlock& coeffs) {
  detail::require_square(coeffs, "inverse_dct");
  return detail::separable_product(dct_basis(coeffs.rows()), coeffs, true);
}

struct QuantSpec {
  double step = 16.0;

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) {
      fail(Errc::invalid_argument, "quantization step must be positive, got " + std::to_string(step));
    }
  }
};

// Round half away from zero of x / step.
inline QuantizedBlock quantize(const DctBlock& coeffs, QuantSpec spec) {
  spec.validate();
  QuantizedBlock out(coeffs.rows(), coeffs.cols());
  for (int r = 0; r < coeffs.rows(); ++r) {
    for (int c = 0; c < coeffs.cols(); ++c) {
      const double q = std::round(coeffs(r, c) / spec.step);
      if (std::abs(q) > static_cast<double>(std::numeric_limits<std::int64_t>::max() / 2)) {
        fail(Errc::out_of_range, "quantized coefficient overflows");
      }
      out(r, c) = static_cast<std::int64_t>(q);
    }
  }
  return out;
}

inline DctBlock dequantize(const QuantizedBlock& ints, QuantSpec spec) {
  spec.validate();
  DctBlock out(ints.rows(), ints.cols());
  for (int r = 0; r < ints.rows(); ++r) {
    for (int c = 0; c < ints.cols(); ++c) out(r, c) = static_cast<double>(ints(r, c)) * spec.step;
  }
  return out;
}

// Quantized block-DCT representation of a residual plane. Blocks are listed
// row-major over the grid; edge blocks are zero-padded to block_size.
struct ResidualPlan {
  int block_size = 8;
  int width = 0;
  int height = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  QuantSpec quant;
  std::vector<QuantizedBlock> blocks;

  friend bool operator==(const ResidualPlan& a, const ResidualPlan& b) {
    return a.block_size == b.block_size && a.width == b.width && a.height == b.height &&
           a.grid_rows == b.grid_rows && a.grid_cols == b.grid_cols && a.quant.step == b.quant.step &&
           a.blocks == b.blocks;
  }
};

inline ResidualPlan encode_residual(const Plane<double>& residual, int block_size, QuantSpec spec) {
  spec.validate();
  if (block_size < 1) fail(Errc::invalid_argument, "transform block size must be positive");
  if (residual.rows() < 1 || residual.cols() < 1) fail(Errc::empty_input, "encode_residual: empty plane");

  const auto basis = dct_basis(block_size);
  ResidualPlan plan;
  plan.block_size = block_size;
  plan.width = residual.cols();
  plan.height = residual.rows();
  plan.grid_rows = (plan.height + block_size - 1) / block_size;
  plan.grid_cols = (plan.width + block_size - 1) / block_size;
  plan.quant = spec;
  plan.blocks.reserve(static_cast<std::size_t>(plan.grid_rows) * plan.grid_cols);

  for (int gr = 0; gr < plan.grid_rows; ++gr) {
    for (int gc = 0; gc < plan.grid_cols; ++gc) {
      Plane<double> block(block_size, block_size, 0.0);
      for (int m = 0; m < block_size; ++m) {
        for (int n = 0; n < block_size; ++n) {
          const int r = gr * block_size + m;
          const int c = gc * block_size + n;
          if (r < plan.height && c < plan.width) block(m, n) = residual(r, c);
        }
      }
      plan.blocks.push_back(quantize(detail::separable_product(basis, block, false), spec));
    }
  }
  return plan;
}

inline Plane<double> decode_residual(const ResidualPlan& plan) {
  plan.quant.validate();
  const int b = plan.block_size;
  if (b < 1 || plan.width < 1 || plan.height < 1 || plan.grid_rows != (plan.height + b - 1) / b ||
      plan.grid_cols != (plan.width + b - 1) / b ||
      plan.blocks.size() != static_cast<std::size_t>(plan.grid_rows) * plan.grid_cols) {
    fail(Errc::dimension_mismatch, "residual plan geometry is inconsistent");
  }
  const auto basis = dct_basis(b);
  Plane<double> out(plan.height, plan.width);
  for (int gr = 0; gr < plan.grid_rows; ++gr) {
    for (int gc = 0; gc < plan.grid_cols; ++gc) {
      const auto& ints = plan.blocks[static_cast<std::size_t>(gr) * plan.grid_cols + gc];
      if (ints.rows() != b || ints.cols() != b) fail(Errc::dimension_mismatch, "residual block has wrong size");
      const auto pixels = detail::separable_product(basis, dequantize(ints, plan.quant), true);
      for (int m = 0; m < b; ++m) {
        for (int n = 0; n < b; ++n) {
          const int r = gr * b + m;
          const int c = gc * b + n;
          if (r < plan.height && c < plan.width) out(r, c) = pixels(m, n);
        }
      }
    }
  }
  return out;
}

// Little-endian layout:
//   u32 block_size, u32 grid_rows, u32 grid_cols, u32 height, u32 width, f64 step,
//   then every block row-major over the grid, coefficients row-major as i16.
inline std::vector<std::uint8_t> serialize_residual_plan(const ResidualPlan& plan) {
  ByteWriter w;
  w.put(static_cast<std::uint32_t>(plan.block_size));
  w.put(static_cast<std::uint32_t>(plan.grid_rows));
  w.put(static_cast<std::uint32_t>(plan.grid_cols));
  w.put(static_cast<std::uint32_t>(plan.height));
  w.put(static_cast<std::uint32_t>(plan.width));
  w.put(plan.quant.step);
  for (const auto& block : plan.blocks) {
    for (const auto v : block.values()) {
      if (v < std::numeric_limits<std::int16_t>::min() || v > std::numeric_limits<std::int16_t>::max()) {
        fail(Errc::out_of_range, "coefficient " + std::to_string(v) + " does not fit the 16-bit wire format");
      }
      w.put(static_cast<std::int16_t>(v));
    }
  }
  return std::move(w).take();
}

inline ResidualPlan deserialize_residual_plan(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  ResidualPlan plan;
  plan.block_size = static_cast<int>(r.get<std::uint32_t>());
  plan.grid_rows = static_cast<int>(r.get<std::uint32_t>());
  plan.grid_cols = static_cast<int>(r.get<std::uint32_t>());
  plan.height = static_cast<int>(r.get<std::uint32_t>());
  plan.width = static_cast<int>(r.get<std::uint32_t>());
  plan.quant.step = r.get<double>();
  const int b = plan.block_size;
  if (b < 1 || b > 1024 || plan.grid_rows < 1 || plan.grid_cols < 1 || plan.grid_rows > (1 << 16) ||
      plan.grid_cols > (1 << 16)) {
    fail(Errc::malformed_input, "residual plan header is implausible");
  }
  const std::size_t count = static_cast<std::size_t>(plan.grid_rows) * plan.grid_cols;
  plan.blocks.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    QuantizedBlock block(b, b);
    for (auto& v : block.values()) v = r.get<std::int16_t>();
    plan.blocks.push_back(std::move(block));
  }
  if (!r.exhausted()) fail(Errc::malformed_input, "trailing bytes after residual plan");
  return plan;
}

}  // namespace vidshield
