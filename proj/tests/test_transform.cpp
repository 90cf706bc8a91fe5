#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vidshield/transform.hpp"

using namespace vidshield;

namespace {

Plane<double> random_block(int rows, int cols, std::mt19937_64& rng, double lo = -128.0, double hi = 128.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Plane<double> p(rows, cols);
  for (auto& v : p.values()) v = dist(rng);
  return p;
}

double energy(const Plane<double>& p) {
  double e = 0.0;
  for (const double v : p.values()) e += v * v;
  return e;
}

double max_abs_diff(const Plane<double>& a, const Plane<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::fabs(a.values()[k] - b.values()[k]));
  return m;
}

}  // namespace

TEST(Dct, ConstantBlockIsPureDc) {
  for (const double c : {0.0, 1.0, 37.5, -200.0}) {
    const auto coeffs = forward_dct(Plane<double>(8, 8, c));
    EXPECT_NEAR(coeffs(0, 0), 8.0 * c, 1e-9);
    for (int u = 0; u < 8; ++u) {
      for (int v = 0; v < 8; ++v) {
        if (u != 0 || v != 0) {
          EXPECT_NEAR(coeffs(u, v), 0.0, 1e-9);
        }
      }
    }
  }
}

TEST(Dct, BasisIsOrthonormal) {
  for (const int n : {1, 2, 4, 8, 16}) {
    const auto a = dct_basis(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double dot = 0.0;
        for (int k = 0; k < n; ++k) dot += a(i, k) * a(j, k);
        EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-12);
      }
    }
  }
}

TEST(Dct, RoundTripAndParseval) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = random_block(8, 8, rng);
    const auto coeffs = forward_dct(x);
    EXPECT_LE(max_abs_diff(inverse_dct(coeffs), x), 1e-6);
    EXPECT_NEAR(energy(coeffs), energy(x), 1e-6 * energy(x));
  }
}

TEST(Dct, MatchesNaiveDirectSum) {
  std::mt19937_64 rng(9);
  for (const int n : {4, 8}) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto x = random_block(n, n, rng);
      std::vector<std::vector<double>> nested(n, std::vector<double>(n));
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) nested[r][c] = x(r, c);
      }
      const auto want = oracle::naive_dct(nested);
      const auto got = forward_dct(x);
      for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) EXPECT_NEAR(got(u, v), want[u][v], 1e-9);
      }
    }
  }
}

TEST(Dct, Linearity) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_block(8, 8, rng);
    const auto y = random_block(8, 8, rng);
    const double a = 0.5 + trial * 0.1;
    const double b = -1.25;
    Plane<double> mix(8, 8);
    for (std::size_t k = 0; k < mix.values().size(); ++k) mix.values()[k] = a * x.values()[k] + b * y.values()[k];
    const auto fx = forward_dct(x);
    const auto fy = forward_dct(y);
    const auto fm = forward_dct(mix);
    for (std::size_t k = 0; k < fm.values().size(); ++k) {
      EXPECT_NEAR(fm.values()[k], a * fx.values()[k] + b * fy.values()[k], 1e-9);
    }
  }
}

TEST(Dct, RejectsNonSquare) {
  EXPECT_ERRC(forward_dct(Plane<double>(4, 8)), Errc::invalid_argument);
  EXPECT_ERRC(inverse_dct(Plane<double>(0, 0)), Errc::invalid_argument);
}

TEST(Quantize, RoundsHalfAwayFromZero) {
  Plane<double> c(1, 6);
  const double in[] = {10.6, -10.6, 2.0, -2.0, 6.0, 0.0};
  for (int k = 0; k < 6; ++k) c(0, k) = in[k];
  const auto q = quantize(c, {4.0});
  const std::int64_t want[] = {3, -3, 1, -1, 2, 0};  // 2/4 = 0.5 -> 1, 6/4 = 1.5 -> 2
  for (int k = 0; k < 6; ++k) EXPECT_EQ(q(0, k), want[k]) << in[k];
  EXPECT_DOUBLE_EQ(dequantize(q, {4.0})(0, 0), 12.0);
  EXPECT_ERRC(quantize(c, {0.0}), Errc::invalid_argument);
  EXPECT_ERRC(quantize(c, {-1.0}), Errc::invalid_argument);
  EXPECT_ERRC(quantize(c, {std::nan("")}), Errc::invalid_argument);
}

TEST(Quantize, ErrorBoundedByHalfStep) {
  std::mt19937_64 rng(11);
  for (const double q : {0.5, 1.0, 16.0, 33.3}) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto c = random_block(8, 8, rng, -1000.0, 1000.0);
      const auto back = dequantize(quantize(c, {q}), {q});
      EXPECT_LE(max_abs_diff(back, c), q / 2 + 1e-9);
    }
  }
}

TEST(Residual, EncodeDecodeDeviationBound) {
  std::mt19937_64 rng(12);
  for (const auto& [rows, cols] : {std::pair{8, 8}, std::pair{16, 24}, std::pair{13, 7}, std::pair{1, 1}}) {
    for (const double q : {1.0, 16.0}) {
      const auto x = random_block(rows, cols, rng, -255.0, 255.0);
      const auto plan = encode_residual(x, 8, {q});
      EXPECT_EQ(plan.grid_rows, (rows + 7) / 8);
      EXPECT_EQ(plan.grid_cols, (cols + 7) / 8);
      const auto y = decode_residual(plan);
      ASSERT_EQ(y.rows(), rows);
      ASSERT_EQ(y.cols(), cols);
      EXPECT_LE(max_abs_diff(x, y), 8 * q / 2 + 1e-6);
    }
  }
}

TEST(Residual, TinyStepIsNearLossless) {
  std::mt19937_64 rng(13);
  const auto x = random_block(20, 12, rng);
  EXPECT_LE(max_abs_diff(decode_residual(encode_residual(x, 8, {1e-6})), x), 1e-3);
}

TEST(Residual, UnitStepRecoversIntegerPlanesAfterRounding) {
  std::mt19937_64 rng(14);
  Plane<double> x(16, 16);
  for (auto& v : x.values()) v = static_cast<double>(static_cast<int>(rng() % 511) - 255);
  const auto y = decode_residual(encode_residual(x, 4, {0.1}));
  for (std::size_t k = 0; k < x.values().size(); ++k) EXPECT_EQ(std::round(y.values()[k]), x.values()[k]);
}

TEST(Residual, ZeroPlaneEncodesToZeros) {
  const auto plan = encode_residual(Plane<double>(9, 17, 0.0), 8, {16.0});
  for (const auto& b : plan.blocks) {
    for (const auto v : b.values()) EXPECT_EQ(v, 0);
  }
  EXPECT_ERRC(encode_residual(Plane<double>(0, 4), 8, {16.0}), Errc::empty_input);
  EXPECT_ERRC(encode_residual(Plane<double>(4, 4), 0, {16.0}), Errc::invalid_argument);
}

TEST(Residual, InconsistentPlanIsRejected) {
  auto plan = encode_residual(Plane<double>(16, 16, 3.0), 8, {16.0});
  plan.blocks.pop_back();
  EXPECT_ERRC(decode_residual(plan), Errc::dimension_mismatch);
}

TEST(ResidualSerialization, RoundTrip) {
  std::mt19937_64 rng(15);
  for (const auto& [rows, cols] : {std::pair{8, 8}, std::pair{33, 17}, std::pair{3, 40}}) {
    const auto plan = encode_residual(random_block(rows, cols, rng), 8, {4.0});
    const auto bytes = serialize_residual_plan(plan);
    EXPECT_EQ(bytes.size(), 5 * 4 + 8 + plan.blocks.size() * 64 * 2);
    const auto back = deserialize_residual_plan(bytes);
    EXPECT_EQ(back, plan);
    EXPECT_EQ(decode_residual(back).values().size(), decode_residual(plan).values().size());
  }
}

TEST(ResidualSerialization, Errors) {
  const auto plan = encode_residual(Plane<double>(8, 8, 1.0), 8, {16.0});
  auto bytes = serialize_residual_plan(plan);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_ERRC(deserialize_residual_plan(truncated), Errc::malformed_input);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_ERRC(deserialize_residual_plan(trailing), Errc::malformed_input);
  auto bad_header = bytes;
  bad_header[0] = 0;  // block size 0
  EXPECT_ERRC(deserialize_residual_plan(bad_header), Errc::malformed_input);

  // a coefficient that cannot be represented in 16 bits
  const auto huge = encode_residual(Plane<double>(8, 8, 1e6), 8, {1.0});
  EXPECT_ERRC(serialize_residual_plan(huge), Errc::out_of_range);
}
