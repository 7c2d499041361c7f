#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "tailx/bon_eval.hpp"
#include "tailx/error.hpp"

using namespace tailx;

namespace {

// Brute force over every N-tuple of pool indices (uniform pool).
double enum_expected_max(const std::vector<double>& pool, std::size_t n) {
  const std::size_t k = pool.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= k;
  double s = 0.0;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    double best = -INFINITY;
    for (std::size_t i = 0; i < n; ++i, c /= k) best = std::max(best, pool[c % k]);
    s += best;
  }
  return s / static_cast<double>(total);
}

double enum_with_fixed(const std::vector<double>& pool, double fixed, std::size_t rest) {
  if (rest == 0) return fixed;
  const std::size_t k = pool.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < rest; ++i) total *= k;
  double s = 0.0;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    double best = fixed;
    for (std::size_t i = 0; i < rest; ++i, c /= k) best = std::max(best, pool[c % k]);
    s += best;
  }
  return s / static_cast<double>(total);
}

}  // namespace

TEST(Pool, SupportAndCdf) {
  const std::vector<double> v{3, 1, 3, 2};
  EmpiricalPool p(v);
  EXPECT_EQ(std::vector<double>(p.sorted_unique().begin(), p.sorted_unique().end()), (std::vector<double>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(p.cdf()[0], 0.25);
  EXPECT_DOUBLE_EQ(p.cdf()[1], 0.5);
  EXPECT_EQ(p.cdf()[2], 1.0);
  EXPECT_DOUBLE_EQ(p.mean(), 2.25);
  const std::vector<double> w{0.5, 0.5};
  EXPECT_THROW(EmpiricalPool(v, w), Error);
  EXPECT_THROW(EmpiricalPool(std::vector<double>{}), Error);
}

TEST(ExpectedMax, Examples) {
  EXPECT_DOUBLE_EQ(expected_max(EmpiricalPool(std::vector<double>{0, 1}), 2), 0.75);
  EXPECT_NEAR(expected_max(EmpiricalPool(std::vector<double>{1, 2, 3}), 2), 22.0 / 9.0, 1e-15);
  EXPECT_DOUBLE_EQ(expected_max(EmpiricalPool(std::vector<double>{1, 2, 3}), 1), 2.0);
  EXPECT_THROW(expected_max(EmpiricalPool(std::vector<double>{1}), 0), Error);
}

TEST(ExpectedMax, WeightedPool) {
  const std::vector<double> v{0, 1};
  const std::vector<double> w{0.75, 0.25};
  EXPECT_DOUBLE_EQ(expected_max(EmpiricalPool(v, w), 2), 1.0 - 0.5625);
}

TEST(OracleAdvantage, Examples) {
  const auto a = oracle_advantage(EmpiricalPool(std::vector<double>{0, 1}), 2);
  EXPECT_DOUBLE_EQ(a[0], -0.25);
  EXPECT_DOUBLE_EQ(a[1], 0.25);
  const auto b = oracle_advantage(EmpiricalPool(std::vector<double>{1, 2, 3}), 2);
  EXPECT_NEAR(b[2], 5.0 / 9.0, 1e-15);
  const auto c = oracle_advantage(EmpiricalPool(std::vector<double>{1, 2, 3}), 1);
  EXPECT_DOUBLE_EQ(c[0], -1.0);
}

TEST(OracleAdvantage, MatchesEnumeration) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> small(-3, 3);
  for (std::size_t k = 1; k <= 5; ++k) {
    for (int t = 0; t < 20; ++t) {
      std::vector<double> pool(k);
      for (double& v : pool) v = small(gen) * 0.5;
      EmpiricalPool p(pool);
      for (std::size_t n = 1; n <= 4; ++n) {
        const double em = enum_expected_max(pool, n);
        EXPECT_NEAR(expected_max(p, n), em, 1e-12);
        const auto adv = oracle_advantage(p, n);
        for (std::size_t i = 0; i < k; ++i)
          EXPECT_NEAR(adv[i], enum_with_fixed(pool, pool[i], n - 1) - em, 1e-12);
      }
    }
  }
}

TEST(OracleAdvantage, AveragesToZero) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> d;
  std::vector<double> pool(50);
  for (double& v : pool) v = d(gen);
  const auto a = oracle_advantage(EmpiricalPool(pool), 16);
  double s = 0.0;
  for (double v : a) s += v;
  // the mean over the pool of E[max(r, M_{n-1})] is E[M_n]
  EXPECT_NEAR(s / 50.0, 0.0, 1e-12);
}

TEST(GroupedBon, Example) {
  const std::vector<double> s{1, 3, 2, 4};
  EXPECT_DOUBLE_EQ(grouped_bon(s, 1), 2.5);
  EXPECT_DOUBLE_EQ(grouped_bon(s, 2), 3.5);
  EXPECT_DOUBLE_EQ(grouped_bon(s, 4), 4.0);
  EXPECT_THROW(grouped_bon(s, 3), Error);
}

TEST(GroupedBon, MonotoneInBudget) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> d;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(256);
    for (double& v : s) v = d(gen);
    for (std::size_t n = 1; n < 256; n *= 2) EXPECT_GE(grouped_bon(s, 2 * n), grouped_bon(s, n));
  }
}

TEST(GroupedBon, Curve) {
  const std::vector<std::vector<double>> samples{{1, 3, 2, 4}, {0, 0, 0, 8}};
  const std::vector<std::size_t> budgets{1, 2, 4};
  const auto c = grouped_bon_curve(samples, budgets);
  EXPECT_DOUBLE_EQ(c.means[0], 2.25);
  EXPECT_DOUBLE_EQ(c.means[1], 3.75);
  EXPECT_DOUBLE_EQ(c.means[2], 6.0);
  EXPECT_DOUBLE_EQ(c.per_prompt[1][1], 4.0);
}

TEST(Bootstrap, IdenticalAndShifted) {
  std::vector<double> a{1, 5, 2, 8, 3}, b(a);
  auto d = paired_bootstrap_delta(a, b, 200, 1);
  EXPECT_EQ(d.delta_mean, 0.0);
  EXPECT_EQ(d.ci_lo, 0.0);
  EXPECT_EQ(d.ci_hi, 0.0);
  for (double& v : b) v += 1.0;
  d = paired_bootstrap_delta(a, b, 200, 1);
  EXPECT_DOUBLE_EQ(d.delta_mean, 1.0);
  EXPECT_DOUBLE_EQ(d.ci_lo, 1.0);
  EXPECT_DOUBLE_EQ(d.ci_hi, 1.0);
}

TEST(Bootstrap, SeededAndValidated) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n;
  std::vector<double> a(100), b(100);
  for (std::size_t i = 0; i < 100; ++i) {
    a[i] = n(gen);
    b[i] = a[i] + 0.1 + n(gen);
  }
  const auto x = paired_bootstrap_delta(a, b, 500, 9);
  const auto y = paired_bootstrap_delta(a, b, 500, 9);
  EXPECT_EQ(x.ci_lo, y.ci_lo);
  EXPECT_EQ(x.ci_hi, y.ci_hi);
  EXPECT_LE(x.ci_lo, x.delta_mean);
  EXPECT_GE(x.ci_hi, x.delta_mean);
  EXPECT_THROW(paired_bootstrap_delta(a, std::vector<double>(99, 0.0), 10, 1), Error);
}

TEST(WinTieLoss, ExampleAndTolerance) {
  const auto w = win_tie_loss(std::vector<double>{1, 2, 3}, std::vector<double>{1, 1, 4});
  EXPECT_NEAR(w.win, 100.0 / 3, 1e-12);
  EXPECT_NEAR(w.tie, 100.0 / 3, 1e-12);
  EXPECT_NEAR(w.loss, 100.0 / 3, 1e-12);
  const auto t = win_tie_loss(std::vector<double>{1.0 + 5e-10, 1.0 + 2e-9}, std::vector<double>{1.0, 1.0});
  EXPECT_EQ(t.tie, 50.0);
  EXPECT_EQ(t.win, 50.0);
}

TEST(TopK, Example) {
  std::vector<double> s(32);
  for (std::size_t i = 0; i < 32; ++i) s[i] = static_cast<double>(i + 1);
  EXPECT_DOUBLE_EQ(topk_validation_score({s}, 10), 27.5);
  EXPECT_THROW(topk_validation_score({std::vector<double>(5, 0.0)}, 10), Error);
}

TEST(Alignment, ParallelAndScaleFree) {
  ScoreMatrix s(3, 2);
  s(0, 0) = 1;
  s(1, 1) = 1;
  s(2, 0) = 1;
  s(2, 1) = 1;
  const std::vector<double> a{1, 2, 3};
  std::vector<double> neg{-1, -2, -3}, big{10, 20, 30};
  EXPECT_NEAR(gradient_alignment(a, s, a), 1.0, 1e-15);
  EXPECT_NEAR(gradient_alignment(neg, s, a), -1.0, 1e-15);
  EXPECT_NEAR(gradient_alignment(big, s, std::vector<double>{0, 1, 0}), gradient_alignment(a, s, std::vector<double>{0, 1, 0}), 1e-15);
  EXPECT_THROW(gradient_alignment(std::vector<double>{0, 0, 0}, s, a), Error);
  const auto g = induced_direction(a, s);
  EXPECT_EQ(g, (std::vector<double>{4, 5}));
}
