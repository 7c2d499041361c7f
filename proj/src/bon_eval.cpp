#include "tailx/bon_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tailx/error.hpp"
#include "tailx/gauss_tail.hpp"
#include "tailx/rng.hpp"

namespace tailx {

EmpiricalPool::EmpiricalPool(std::span<const double> values) : values_(values.begin(), values.end()) {
  require(!values_.empty(), ErrorKind::Domain, "empirical pool must be nonempty");
  std::vector<double> probs(values_.size(), 1.0 / static_cast<double>(values_.size()));
  build(probs);
}

EmpiricalPool::EmpiricalPool(std::span<const double> values, std::span<const double> probabilities)
    : values_(values.begin(), values.end()) {
  require(!values_.empty(), ErrorKind::Domain, "empirical pool must be nonempty");
  require(probabilities.size() == values_.size(), ErrorKind::Domain,
          "one probability per pool value required");
  build(probabilities);
}

void EmpiricalPool::build(std::span<const double> probabilities) {
  for (double v : values_) require(std::isfinite(v), ErrorKind::Domain, "non-finite pool value");
  double total = 0.0;
  for (double p : probabilities) {
    require(p >= 0.0 && std::isfinite(p), ErrorKind::Domain, "pool probabilities must be >= 0");
    total += p;
  }
  require(total > 0.0, ErrorKind::Domain, "pool probabilities sum to zero");
  std::vector<std::size_t> order(values_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values_[a] < values_[b]; });
  double acc = 0.0;
  for (std::size_t idx : order) {
    acc += probabilities[idx] / total;
    if (!support_.empty() && support_.back() == values_[idx]) {
      cdf_.back() = acc;
    } else {
      support_.push_back(values_[idx]);
      cdf_.push_back(acc);
    }
  }
  cdf_.back() = 1.0;
}

double EmpiricalPool::mean() const {
  double s = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    s += support_[i] * (cdf_[i] - prev);
    prev = cdf_[i];
  }
  return s;
}

double expected_max(const EmpiricalPool& pool, std::size_t n) {
  require(n >= 1, ErrorKind::Domain, "best-of-N budget must be >= 1");
  const auto support = pool.sorted_unique();
  const auto cdf = pool.cdf();
  const double nd = static_cast<double>(n);
  double s = 0.0;
  double prev_pow = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double cur_pow = std::pow(cdf[i], nd);
    s += support[i] * (cur_pow - prev_pow);
    prev_pow = cur_pow;
  }
  return s;
}

std::vector<double> oracle_advantage(const EmpiricalPool& pool, std::size_t n) {
  require(n >= 1, ErrorKind::Domain, "best-of-N budget must be >= 1");
  const auto support = pool.sorted_unique();
  const auto cdf = pool.cdf();
  const double e_max = expected_max(pool, n);
  const std::size_t u = support.size();
  if (n == 1) {
    std::vector<double> out;
    for (double v : pool.values()) out.push_back(v - e_max);
    return out;
  }
  const double rest = static_cast<double>(n - 1);
  // E[max(support[i], M)] = support[i] F(support[i])^{n-1} + sum_{j>i} support[j] P(M = support[j])
  std::vector<double> tail_sum(u + 1, 0.0);
  for (std::size_t j = u; j-- > 0;) {
    const double mass = std::pow(cdf[j], rest) - (j ? std::pow(cdf[j - 1], rest) : 0.0);
    tail_sum[j] = tail_sum[j + 1] + support[j] * mass;
  }
  std::vector<double> out;
  out.reserve(pool.values().size());
  for (double v : pool.values()) {
    const auto i = static_cast<std::size_t>(std::lower_bound(support.begin(), support.end(), v) -
                                            support.begin());
    out.push_back(v * std::pow(cdf[i], rest) + tail_sum[i + 1] - e_max);
  }
  return out;
}

double grouped_bon(std::span<const double> samples, std::size_t budget) {
  require(budget >= 1, ErrorKind::Domain, "budget must be >= 1");
  require(!samples.empty() && samples.size() % budget == 0, ErrorKind::Domain,
          "budget must divide the per-prompt sample count");
  const std::size_t groups = samples.size() / budget;
  double s = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto chunk = samples.subspan(g * budget, budget);
    s += *std::max_element(chunk.begin(), chunk.end());
  }
  return s / static_cast<double>(groups);
}

BonCurve grouped_bon_curve(const std::vector<std::vector<double>>& per_prompt_samples,
                           std::span<const std::size_t> budgets) {
  require(!per_prompt_samples.empty(), ErrorKind::Domain, "no prompts to evaluate");
  require(!budgets.empty(), ErrorKind::Domain, "no budgets requested");
  BonCurve curve;
  curve.n_values.assign(budgets.begin(), budgets.end());
  curve.means.assign(budgets.size(), 0.0);
  for (const auto& samples : per_prompt_samples) {
    std::vector<double> row;
    row.reserve(budgets.size());
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      row.push_back(grouped_bon(samples, budgets[b]));
      curve.means[b] += row.back();
    }
    curve.per_prompt.push_back(std::move(row));
  }
  for (double& m : curve.means) m /= static_cast<double>(per_prompt_samples.size());
  return curve;
}

BootstrapDelta paired_bootstrap_delta(std::span<const double> a, std::span<const double> b,
                                      std::size_t resamples, std::uint64_t seed) {
  require(a.size() == b.size(), ErrorKind::Domain, "paired bootstrap needs equal-length inputs");
  require(a.size() >= 2, ErrorKind::Domain, "paired bootstrap needs at least 2 prompts");
  require(resamples >= 1, ErrorKind::Domain, "need at least one resample");
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = b[i] - a[i];

  BootstrapDelta out;
  out.delta_mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  std::vector<double> means(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    Rng rng(seed, r);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += diff[rng.below(n)];
    means[r] = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  out.ci_lo = sorted_quantile(means, 0.025);
  out.ci_hi = sorted_quantile(means, 0.975);
  return out;
}

WinTieLoss win_tie_loss(std::span<const double> a, std::span<const double> b, double tol) {
  require(a.size() == b.size(), ErrorKind::Domain, "win/tie/loss needs equal-length inputs");
  require(!a.empty(), ErrorKind::Domain, "win/tie/loss needs at least one prompt");
  std::size_t w = 0, t = 0, l = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (std::abs(d) <= tol)
      ++t;
    else if (d > 0)
      ++w;
    else
      ++l;
  }
  const double n = static_cast<double>(a.size());
  return {100.0 * static_cast<double>(w) / n, 100.0 * static_cast<double>(t) / n,
          100.0 * static_cast<double>(l) / n};
}

double topk_validation_score(const std::vector<std::vector<double>>& per_prompt_samples,
                             std::size_t k) {
  require(!per_prompt_samples.empty(), ErrorKind::Domain, "no prompts to score");
  require(k >= 1, ErrorKind::Domain, "top-k needs k >= 1");
  double total = 0.0;
  for (const auto& samples : per_prompt_samples) {
    require(samples.size() >= k, ErrorKind::Domain, "prompt has fewer samples than k");
    std::vector<double> s(samples);
    std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k - 1), s.end(),
                     std::greater<>());
    total += std::accumulate(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
             static_cast<double>(k);
  }
  return total / static_cast<double>(per_prompt_samples.size());
}

std::vector<double> induced_direction(std::span<const double> weights, const ScoreMatrix& scores) {
  require(weights.size() == scores.rows, ErrorKind::Domain, "one weight per score row required");
  std::vector<double> g(scores.cols, 0.0);
  for (std::size_t i = 0; i < scores.rows; ++i)
    for (std::size_t c = 0; c < scores.cols; ++c) g[c] += weights[i] * scores(i, c);
  return g;
}

double gradient_alignment(std::span<const double> advantages, const ScoreMatrix& scores,
                          std::span<const double> oracle) {
  require(oracle.size() == scores.rows, ErrorKind::Domain, "one oracle weight per score row required");
  const auto g = induced_direction(advantages, scores);
  const auto h = induced_direction(oracle, scores);
  double dot = 0.0, ng = 0.0, nh = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    dot += g[c] * h[c];
    ng += g[c] * g[c];
    nh += h[c] * h[c];
  }
  if (!(ng > 0.0) || !(nh > 0.0)) fail(ErrorKind::Degenerate, "induced gradient is the zero vector");
  return dot / (std::sqrt(ng) * std::sqrt(nh));
}

}  // namespace tailx
