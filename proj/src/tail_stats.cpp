#include "tailx/tail_stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "tailx/error.hpp"

namespace tailx {

namespace {

void check_group(std::span<const double> rewards, double alpha, double eps_sigma) {
  require(rewards.size() >= 2, ErrorKind::Domain, "tail vector needs at least 2 rewards");
  require(alpha > 0.0 && alpha < 0.5, ErrorKind::Domain, "alpha must lie in (0, 1/2)");
  require(eps_sigma > 0.0, ErrorKind::Domain, "eps_sigma must be positive");
  for (double r : rewards) require(std::isfinite(r), ErrorKind::Domain, "non-finite reward");
}

}  // namespace

std::size_t tail_count(double alpha, std::size_t m) {
  const double x = alpha * static_cast<double>(m);
  auto q = static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
  return std::clamp<std::size_t>(q, 1, m);
}

TailVector empirical_tail_vector(std::span<const double> rewards, double alpha, double eps_sigma,
                                 std::vector<double>& scratch) {
  check_group(rewards, alpha, eps_sigma);
  const std::size_t q = tail_count(alpha, rewards.size());
  scratch.assign(rewards.begin(), rewards.end());
  // After the partition the first q slots hold the top-q values. Tie identity
  // does not affect any statistic, only which index is called a member.
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(q - 1),
                   scratch.end(), std::greater<>());
  const double r = scratch[q - 1];
  const double mu =
      std::accumulate(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(q), 0.0) /
      static_cast<double>(q);
  double ss = 0.0;
  for (std::size_t i = 0; i < q; ++i) ss += (scratch[i] - mu) * (scratch[i] - mu);
  const double sigma = std::max(std::sqrt(ss / static_cast<double>(q)), eps_sigma);
  return {r, std::max(mu, r), sigma, q};
}

TailVector empirical_tail_vector(std::span<const double> rewards, double alpha, double eps_sigma) {
  std::vector<double> scratch;
  return empirical_tail_vector(rewards, alpha, eps_sigma, scratch);
}

std::vector<std::size_t> tail_members(std::span<const double> rewards, double alpha) {
  check_group(rewards, alpha, kDefaultEpsSigma);
  const std::size_t q = tail_count(alpha, rewards.size());
  std::vector<std::size_t> order(rewards.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rewards[a] > rewards[b]; });
  order.resize(q);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<TailVector> prefix_tail_vectors(std::span<const double> rewards,
                                            std::span<const std::size_t> prefixes, double alpha,
                                            double eps_sigma) {
  std::vector<TailVector> out;
  out.reserve(prefixes.size());
  std::vector<double> scratch;
  std::size_t prev = 0;
  for (std::size_t size : prefixes) {
    require(size <= rewards.size(), ErrorKind::Domain, "prefix exceeds group size");
    require(size >= 2, ErrorKind::Domain, "prefix must contain at least 2 rewards");
    require(size > prev, ErrorKind::Domain, "prefixes must be strictly increasing");
    out.push_back(empirical_tail_vector(rewards.first(size), alpha, eps_sigma, scratch));
    prev = size;
  }
  return out;
}

std::pair<RewardGroup, RewardGroup> split_halves(const RewardGroup& group) {
  const std::size_t m = group.size();
  require(m >= 4 && m % 2 == 0, ErrorKind::Domain, "split_halves needs an even group of size >= 4");
  const std::size_t half = m / 2;
  RewardGroup a{group.prompt_id, {group.rewards.begin(), group.rewards.begin() + half}, {}};
  RewardGroup b{group.prompt_id, {group.rewards.begin() + half, group.rewards.end()}, {}};
  if (group.scores) {
    const auto& s = *group.scores;
    a.scores = ScoreMatrix(half, s.cols);
    b.scores = ScoreMatrix(m - half, s.cols);
    std::copy(s.data.begin(), s.data.begin() + half * s.cols, a.scores->data.begin());
    std::copy(s.data.begin() + half * s.cols, s.data.end(), b.scores->data.begin());
  }
  return {std::move(a), std::move(b)};
}

}  // namespace tailx
