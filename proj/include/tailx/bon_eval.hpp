#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tailx/tail_stats.hpp"

namespace tailx {

/// A finite reward pool viewed as a discrete distribution. Each entry of
/// `values` carries probability `weights[i]` (uniform 1/K by default).
class EmpiricalPool {
 public:
  explicit EmpiricalPool(std::span<const double> values);
  EmpiricalPool(std::span<const double> values, std::span<const double> probabilities);

  std::span<const double> values() const { return values_; }
  std::span<const double> sorted_unique() const { return support_; }
  /// cdf()[i] = P(X <= sorted_unique()[i]); the last entry is exactly 1.
  std::span<const double> cdf() const { return cdf_; }

  double mean() const;

 private:
  void build(std::span<const double> probabilities);

  std::vector<double> values_;
  std::vector<double> support_;
  std::vector<double> cdf_;
};

/// E[max of n iid draws] = sum_v v (F(v)^n - F(v-)^n).
double expected_max(const EmpiricalPool& pool, std::size_t n);

/// A*_n(r_i) = E[max(r_i, M_{n-1})] - E[M_n] for each pool element, in pool order.
std::vector<double> oracle_advantage(const EmpiricalPool& pool, std::size_t n);

struct BonCurve {
  std::vector<std::size_t> n_values;
  std::vector<double> means;                   // prompt average per budget
  std::vector<std::vector<double>> per_prompt;  // [prompt][budget]
};

/// Mean of the maxima of consecutive N-sized groups.
double grouped_bon(std::span<const double> samples, std::size_t budget);

BonCurve grouped_bon_curve(const std::vector<std::vector<double>>& per_prompt_samples,
                           std::span<const std::size_t> budgets);

struct BootstrapDelta {
  double delta_mean = 0.0;  // mean of (b - a)
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

inline constexpr std::size_t kDefaultBootstrapResamples = 1000;

/// Paired prompt bootstrap of mean(b - a) with a percentile 95% interval.
BootstrapDelta paired_bootstrap_delta(std::span<const double> per_prompt_a,
                                      std::span<const double> per_prompt_b,
                                      std::size_t resamples, std::uint64_t seed);

struct WinTieLoss {
  double win = 0.0;  // percent of prompts where a beats b by more than tol
  double tie = 0.0;
  double loss = 0.0;
};

WinTieLoss win_tie_loss(std::span<const double> a, std::span<const double> b, double tol = 1e-9);

/// Prompt average of the mean of each prompt's top-k samples.
double topk_validation_score(const std::vector<std::vector<double>>& per_prompt_samples,
                             std::size_t k = 10);

/// Cosine between sum_i A_i s_i and sum_i A*_i s_i.
double gradient_alignment(std::span<const double> advantages, const ScoreMatrix& scores,
                          std::span<const double> oracle);

/// sum_i weights[i] * scores.row(i)
std::vector<double> induced_direction(std::span<const double> weights, const ScoreMatrix& scores);

}  // namespace tailx
