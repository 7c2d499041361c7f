#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <vector>

#include "tailx/error.hpp"
#include "tailx/gauss_tail.hpp"
#include "tailx/rng.hpp"

using namespace tailx;

// Reference values computed with 50-digit mpmath (tests/oracles/compute_oracles.py).
namespace ref {
constexpr double z25 = 0.67448975019608174;
constexpr double lambda25 = 1.2711062907364277;
constexpr double delta25 = 0.24163696216176124;
constexpr double ctilde25_1 = -2.5858312787722488;
constexpr double ctilde25_2 = -1.4380916421050037;
constexpr double ctilde25_128 = 2.6923984652231459;
}  // namespace ref

TEST(TailConstants, QuarterTail) {
  const auto c = tail_constants(0.25, 1);
  EXPECT_NEAR(c.z_alpha, ref::z25, 1e-13);
  EXPECT_NEAR(c.lambda_alpha, ref::lambda25, 1e-13);
  EXPECT_NEAR(c.delta_alpha, ref::delta25, 1e-13);
  EXPECT_EQ(c.c_n, 0.0);
  EXPECT_NEAR(c.c_tilde_n, ref::ctilde25_1, 1e-12);
  EXPECT_NEAR(tail_constants(0.25, 2).c_tilde_n, ref::ctilde25_2, 1e-12);
  EXPECT_NEAR(tail_constants(0.25, 128).c_tilde_n, ref::ctilde25_128, 1e-11);
}

TEST(TailConstants, TenthTailSixteen) {
  const auto c = tail_constants(0.1, 16);
  EXPECT_NEAR(c.z_alpha, 1.2815515655446004, 1e-13);
  EXPECT_NEAR(c.lambda_alpha, 1.754983319324868, 1e-13);
  EXPECT_NEAR(c.delta_alpha, 0.16913516927691232, 1e-13);
  EXPECT_NEAR(c.c_n, 1.765991393054788, 1e-11);
  EXPECT_NEAR(c.c_tilde_n, 0.026766671471312925, 1e-10);
}

TEST(TailConstants, MedianLimit) {
  const auto c = tail_constants(0.5 - 1e-12, 1);
  EXPECT_NEAR(c.z_alpha, 0.0, 1e-9);
  EXPECT_NEAR(c.lambda_alpha, 0.7978845608028654, 1e-9);
}

TEST(TailConstants, BitIdenticalRepeats) {
  const auto a = tail_constants(0.17, 77);
  const auto b = tail_constants(0.17, 77);
  EXPECT_EQ(std::memcmp(&a.c_tilde_n, &b.c_tilde_n, sizeof(double)), 0);
  EXPECT_EQ(a.c_n, b.c_n);
  EXPECT_EQ(a.delta_alpha, b.delta_alpha);
}

TEST(TailConstants, RejectsBadAlpha) {
  EXPECT_THROW(tail_constants(0.0, 4), Error);
  EXPECT_THROW(tail_constants(0.5, 4), Error);
  EXPECT_THROW(tail_constants(0.25, 0), Error);
}

TEST(GaussMax, FrozenValues) {
  EXPECT_EQ(expected_gauss_max(1), 0.0);
  EXPECT_NEAR(expected_gauss_max(2), 1.0 / std::sqrt(std::numbers::pi), 1e-13);
  EXPECT_NEAR(expected_gauss_max(3), 0.84628437532163443, 1e-12);
  EXPECT_NEAR(expected_gauss_max(8), 1.4236003060452778, 1e-12);
  EXPECT_NEAR(expected_gauss_max(128), 2.5945973685994667, 1e-11);
  EXPECT_NEAR(expected_gauss_max(512), 3.0439031612044071, 1e-11);
  EXPECT_NEAR(expected_gauss_max(4096), 3.6260821777691453, 1e-11);
}

TEST(GaussMax, StrictlyIncreasing) {
  double prev = expected_gauss_max(1);
  for (std::size_t n = 2; n <= 4096; n += (n < 256 ? 1 : 37)) {
    const double c = expected_gauss_max(n);
    ASSERT_GT(c, prev) << "n=" << n;
    prev = c;
  }
}

TEST(PredictVn, StandardPopulationAtTwo) {
  const auto c = tail_constants(0.25, 2);
  const TailVector t{ref::z25, ref::lambda25, std::sqrt(ref::delta25), 0};
  EXPECT_NEAR(predict_vn(t, c), 1.0 / std::sqrt(std::numbers::pi), 1e-12);
}

TEST(PredictVn, ShiftedTail) {
  const auto c = tail_constants(0.25, 2);
  EXPECT_NEAR(predict_vn({9.0, 10.0, 2.0, 0}, c), 10.0 + 2.0 * ref::ctilde25_2, 1e-11);
}

TEST(PredictVn, SingleDrawIsPopulationMean) {
  const auto c = tail_constants(0.3, 1);
  EXPECT_NEAR(predict_vn(gaussian_population_tail(-4.5, 3.0, c), c), -4.5, 1e-12);
}

TEST(PredictVn, GaussianIdentity) {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const double mu = 20.0 * rng.uniform() - 10.0;
    const double sd = 0.01 + 5.0 * rng.uniform();
    const double alpha = 0.01 + 0.48 * rng.uniform();
    const std::size_t n = 1 + rng.below(2048);
    const auto c = tail_constants(alpha, n);
    EXPECT_NEAR(predict_vn(gaussian_population_tail(mu, sd, c), c), mu + c.c_n * sd, 1e-10)
        << "alpha=" << alpha << " n=" << n;
  }
}

TEST(PredictVn, RejectsNonPositiveScale) {
  const auto c = tail_constants(0.25, 4);
  try {
    predict_vn({0.0, 1.0, 0.0, 1}, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(NormalFunctions, QuantileRoundTrip) {
  for (double p : {1e-12, 1e-6, 0.01, 0.25, 0.5, 0.9, 0.999999})
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-14 + 1e-12 * p);
  EXPECT_NEAR(normal_sf(8.0), 6.22096057427178e-16, 1e-28);
}

TEST(SortedQuantile, TypeSeven) {
  const std::vector<double> s{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.9), 3.7);
}

TEST(QqFit, RecoversGaussianLine) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> d(3.0, 2.0);
  std::vector<double> x(200000);
  for (double& v : x) v = d(gen);
  const auto f = qq_tail_fit(x, 0.80, 0.99);
  EXPECT_NEAR(f.a, 3.0, 0.1);
  EXPECT_NEAR(f.b, 2.0, 0.1);
  EXPECT_GE(f.r_squared, 0.99);
}

TEST(QqFit, AffineInvariantRSquared) {
  std::mt19937_64 gen(6);
  std::exponential_distribution<double> d(1.0);
  std::vector<double> x(500), y(500);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = d(gen);
    y[i] = 7.0 + 0.3 * x[i];
  }
  const auto fx = qq_tail_fit(x, 0.8, 0.99, 25);
  const auto fy = qq_tail_fit(y, 0.8, 0.99, 25);
  EXPECT_NEAR(fx.r_squared, fy.r_squared, 1e-12);
  EXPECT_NEAR(fy.b, 0.3 * fx.b, 1e-12);
}

TEST(QqFit, ConstantSampleIsDegenerate) {
  const std::vector<double> x(100, 4.0);
  try {
    qq_tail_fit(x, 0.8, 0.99);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
  }
}

TEST(QqFit, Preconditions) {
  const std::vector<double> small(10, 1.0);
  EXPECT_THROW(qq_tail_fit(small, 0.8, 0.99), Error);
  std::vector<double> x(50);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  EXPECT_THROW(qq_tail_fit(x, 0.9, 0.8), Error);
  EXPECT_THROW(qq_tail_fit(x, 0.0, 0.8), Error);
}

TEST(QqFit, LabRewardMedianFit) {
  std::vector<double> r2;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::normal_distribution<double> n;
    std::vector<double> x(512);
    for (double& v : x) v = n(rng);
    r2.push_back(qq_tail_fit(x, 0.8, 0.99).r_squared);
  }
  std::nth_element(r2.begin(), r2.begin() + 50, r2.end());
  EXPECT_GE(r2[50], 0.95);
}
