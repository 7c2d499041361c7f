#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "tailx/error.hpp"
#include "tailx/prefix_scheme.hpp"

using namespace tailx;

namespace {

double norm2(const std::vector<double>& w) {
  return std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
}

// Residuals of sum w = 1 and sum w (m / n_j)^l = 0.
std::vector<double> constraint_residuals(std::size_t m, const std::vector<std::size_t>& sizes,
                                         const std::vector<double>& w, std::size_t k) {
  std::vector<double> out;
  for (std::size_t l = 0; l < k; ++l) {
    double s = 0.0;
    for (std::size_t j = 0; j < sizes.size(); ++j)
      s += w[j] * std::pow(static_cast<double>(m) / static_cast<double>(sizes[j]), static_cast<double>(l));
    out.push_back(l == 0 ? s - 1.0 : s);
  }
  return out;
}

}  // namespace

TEST(PracticalPrefixes, Examples) {
  EXPECT_EQ(practical_prefixes(64, 4), (std::vector<std::size_t>{40, 48, 56, 64}));
  EXPECT_EQ(practical_prefixes(8, 1), (std::vector<std::size_t>{8}));
  EXPECT_EQ(practical_prefixes(32, 4), (std::vector<std::size_t>{20, 24, 28, 32}));
}

TEST(PracticalPrefixes, CollisionAndSize) {
  EXPECT_THROW(practical_prefixes(4, 4), Error);
  EXPECT_THROW(practical_prefixes(64, 0), Error);
}

TEST(TheoryPrefixes, Examples) {
  const auto s = theory_prefixes(64, 4, {1, 4});
  EXPECT_EQ(s, (std::vector<std::size_t>{36, 44, 48, 56}));
  for (std::size_t n : s) EXPECT_EQ(n % 4, 0u);
  try {
    theory_prefixes(40, 8, {1, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Collision);
  }
}

TEST(TheoryPrefixes, TailCountsAreExact) {
  for (std::size_t n : {128u, 256u, 1000u, 2048u}) {
    for (std::size_t nj : theory_prefixes(n, 4, {1, 4})) {
      const double q = 0.25 * static_cast<double>(nj);
      EXPECT_EQ(std::ceil(q) - q, 0.0);
    }
  }
}

TEST(Rationalize, RecoversSmallFractions) {
  const auto a = rationalize(0.25);
  EXPECT_EQ(a.p, 1u);
  EXPECT_EQ(a.q, 4u);
  const auto b = rationalize(0.1);
  EXPECT_EQ(b.p, 1u);
  EXPECT_EQ(b.q, 10u);
  EXPECT_THROW(rationalize(1.0 / std::sqrt(2.0) - 0.5, 50), Error);
}

TEST(CancellationWeights, ReferenceInstance) {
  const std::vector<std::size_t> sizes{40, 48, 56, 64};
  const auto t0 = std::chrono::steady_clock::now();
  const auto w = cancellation_weights(64, sizes, 2);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const std::vector<double> expect{-1.82946, -0.15392, 1.04289, 1.94050};
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(w[j], expect[j], 5e-5);
  EXPECT_LT(ms, 1.0);
}

TEST(CancellationWeights, SingleFullPrefix) {
  const std::vector<std::size_t> sizes{77};
  const auto w = cancellation_weights(77, sizes, 1);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
}

TEST(CancellationWeights, ConstraintsHold) {
  const std::vector<std::size_t> sizes{20, 24, 28, 32};
  const auto w = cancellation_weights(32, sizes, 2);
  for (double r : constraint_residuals(32, sizes, w, 2)) EXPECT_NEAR(r, 0.0, 1e-10);
  const std::vector<std::size_t> six{30, 35, 40, 45, 50, 60};
  for (std::size_t k = 1; k <= 4; ++k) {
    const auto wk = cancellation_weights(60, six, k);
    for (double r : constraint_residuals(60, six, wk, k)) EXPECT_NEAR(r, 0.0, 1e-8);
  }
}

TEST(CancellationWeights, MinimumNorm) {
  std::mt19937_64 gen(2);
  const std::vector<std::size_t> sizes{40, 48, 56, 64};
  const auto w = cancellation_weights(64, sizes, 2);
  // Null space of the 2x4 constraint matrix: random vectors projected onto it.
  std::vector<double> row1(4);
  for (std::size_t j = 0; j < 4; ++j) row1[j] = 64.0 / static_cast<double>(sizes[j]);
  std::normal_distribution<double> n;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(4);
    for (double& x : v) x = n(gen);
    // Gram-Schmidt against (1,1,1,1) and row1
    std::vector<std::vector<double>> basis{{1, 1, 1, 1}, row1};
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t c = 0; c < b; ++c) {
        const double d = std::inner_product(basis[b].begin(), basis[b].end(), basis[c].begin(), 0.0);
        for (std::size_t j = 0; j < 4; ++j) basis[b][j] -= d * basis[c][j];
      }
      const double nb = norm2(basis[b]);
      for (double& x : basis[b]) x /= nb;
    }
    for (const auto& b : basis) {
      const double d = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t j = 0; j < 4; ++j) v[j] -= d * b[j];
    }
    std::vector<double> u(4);
    for (std::size_t j = 0; j < 4; ++j) u[j] = w[j] + 0.1 * v[j];
    for (double r : constraint_residuals(64, sizes, u, 2)) ASSERT_NEAR(r, 0.0, 1e-10);
    EXPECT_GE(norm2(u), norm2(w));
  }
}

TEST(CancellationWeights, NormStaysBounded) {
  double first = 0.0;
  for (std::size_t m = 64; m <= 65536; m *= 4) {
    const auto w = cancellation_weights(m, practical_prefixes(m, 4), 2);
    const double n = norm2(w);
    if (first == 0.0) first = n;
    EXPECT_LT(n, 1.05 * first) << "m=" << m;
  }
}

TEST(CancellationWeights, RejectsBadOrder) {
  const std::vector<std::size_t> sizes{40, 48};
  EXPECT_THROW(cancellation_weights(64, sizes, 3), Error);
  EXPECT_THROW(cancellation_weights(64, sizes, 0), Error);
}

TEST(Schemes, PracticalCarriesEverything) {
  const auto s = practical_scheme(64, 2, 4);
  EXPECT_EQ(s.m, 64u);
  EXPECT_EQ(s.k, 2u);
  EXPECT_EQ(s.j_count(), 4u);
  EXPECT_DOUBLE_EQ(s.ratios[0], 1.6);
  EXPECT_DOUBLE_EQ(s.ratios[3], 1.0);
  EXPECT_NEAR(std::accumulate(s.weights.begin(), s.weights.end(), 0.0), 1.0, 1e-12);
}

TEST(Schemes, TheoryUsesSplitSize) {
  const auto s = theory_scheme(256, 2, 4, {1, 4});
  EXPECT_EQ(s.m, 256u);
  EXPECT_EQ(s.sizes, theory_prefixes(256, 4, {1, 4}));
  for (double r : constraint_residuals(256, s.sizes, s.weights, 2)) EXPECT_NEAR(r, 0.0, 1e-10);
}
