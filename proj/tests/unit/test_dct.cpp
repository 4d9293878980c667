#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "actalign/dct.hpp"
#include "actalign/rng.hpp"

using namespace actalign;
using boost::multiprecision::cpp_dec_float_50;

namespace {

ActionChunk random_chunk(Rng& rng, std::size_t h, std::size_t d) {
  ActionChunk c(h, d);
  for (auto& v : c.values()) v = rng.uniform(-2.0, 2.0);
  return c;
}

// Direct evaluation of the defining sum in 50-digit arithmetic.
cpp_dec_float_50 reference_coefficient(const ActionChunk& chunk, std::size_t k, std::size_t d) {
  const cpp_dec_float_50 pi = boost::math::constants::pi<cpp_dec_float_50>();
  const cpp_dec_float_50 h = static_cast<double>(chunk.rows());
  cpp_dec_float_50 acc = 0;
  for (std::size_t n = 0; n < chunk.rows(); ++n) {
    acc += cpp_dec_float_50(chunk(n, d)) * cos(pi * (cpp_dec_float_50(n) + cpp_dec_float_50(0.5)) * k / h);
  }
  const cpp_dec_float_50 s = k == 0 ? sqrt(1 / h) : sqrt(2 / h);
  return s * acc;
}

}  // namespace

TEST(Dct, ConstantChunkIsDcOnly) {
  const double c = 0.37;
  ActionChunk chunk(8, 3);
  for (auto& v : chunk.values()) v = c;
  const auto g = dct2(chunk);
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_NEAR(g(0, d), c * std::sqrt(8.0), 1e-12);
    for (std::size_t k = 1; k < 8; ++k) EXPECT_NEAR(g(k, d), 0.0, 1e-12);
  }
}

TEST(Dct, TwoPointAlternatingColumn) {
  const auto g = dct2(ActionChunk(2, 1, {1.0, -1.0}));
  const cpp_dec_float_50 expected = sqrt(cpp_dec_float_50(2));
  EXPECT_NEAR(g(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(g(1, 0), expected.convert_to<double>(), 1e-15);
}

TEST(Dct, MatchesHighPrecisionDefinition) {
  Rng rng(17);
  for (std::size_t h : {1u, 2u, 3u, 5u, 8u, 16u}) {
    const auto chunk = random_chunk(rng, h, 4);
    const auto g = dct2(chunk);
    for (std::size_t k = 0; k < h; ++k) {
      for (std::size_t d = 0; d < 4; ++d) {
        EXPECT_NEAR(g(k, d), reference_coefficient(chunk, k, d).convert_to<double>(), 1e-13);
      }
    }
  }
}

TEST(Dct, InverseRecoversChunk) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = 1 + rng.below(32);
    const auto chunk = random_chunk(rng, h, 1 + rng.below(8));
    const auto back = idct2(dct2(chunk));
    ASSERT_EQ(back.rows(), chunk.rows());
    ASSERT_EQ(back.cols(), chunk.cols());
    for (std::size_t i = 0; i < chunk.size(); ++i) EXPECT_LE(std::abs(back.values()[i] - chunk.values()[i]), 1e-10);
  }
}

TEST(Dct, Linear) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = 1 + rng.below(16);
    const std::size_t d = 1 + rng.below(7);
    const auto x = random_chunk(rng, h, d);
    const auto y = random_chunk(rng, h, d);
    const double a = rng.uniform(-3, 3);
    const double b = rng.uniform(-3, 3);
    ActionChunk mix(h, d);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.values()[i] = a * x.values()[i] + b * y.values()[i];
    const auto gm = dct2(mix);
    const auto gx = dct2(x);
    const auto gy = dct2(y);
    for (std::size_t i = 0; i < gm.size(); ++i) {
      EXPECT_LE(std::abs(gm.values()[i] - (a * gx.values()[i] + b * gy.values()[i])), 1e-10);
    }
  }
}

TEST(Dct, PreservesEnergy) {
  Rng rng(4);
  const auto chunk = random_chunk(rng, 8, 7);
  const auto g = dct2(chunk);
  double e1 = 0.0;
  double e2 = 0.0;
  for (double v : chunk.values()) e1 += v * v;
  for (double v : g.values()) e2 += v * v;
  EXPECT_NEAR(e1, e2, 1e-10);
}

TEST(Dct, InverseMirrorsExamples) {
  CoefficientGrid dc(8, 2);
  dc(0, 0) = 2.0 * std::sqrt(8.0);
  dc(0, 1) = -std::sqrt(8.0);
  const auto chunk = idct2(dc);
  for (std::size_t t = 0; t < 8; ++t) {
    EXPECT_NEAR(chunk(t, 0), 2.0, 1e-12);
    EXPECT_NEAR(chunk(t, 1), -1.0, 1e-12);
  }
  const auto two = idct2(CoefficientGrid(2, 1, {0.0, std::sqrt(2.0)}));
  EXPECT_NEAR(two(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(two(1, 0), -1.0, 1e-15);
}
