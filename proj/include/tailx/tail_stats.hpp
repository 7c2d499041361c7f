#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tailx {

inline constexpr double kDefaultEpsSigma = 1e-6;

/// Row-major m x d matrix of per-sample score vectors.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  ScoreMatrix() = default;
  ScoreMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// One prompt's rollout group. Arrival order of `rewards` is meaningful:
/// prefix estimators read the first m_j entries.
struct RewardGroup {
  std::string prompt_id;
  std::vector<double> rewards;
  std::optional<ScoreMatrix> scores;

  std::size_t size() const { return rewards.size(); }
};

/// Empirical upper-tail summary (threshold, tail mean, clipped tail scale).
struct TailVector {
  double r = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t q = 0;
};

/// Tail count ceil(alpha * m), robust to the rounding noise of alpha * m.
std::size_t tail_count(double alpha, std::size_t m);

/// Threshold r = q-th largest reward, mu/sigma = mean and population std of the
/// top q rewards, sigma floored at eps_sigma.
TailVector empirical_tail_vector(std::span<const double> rewards, double alpha,
                                 double eps_sigma = kDefaultEpsSigma);

/// Same, reusing `scratch` to avoid allocating in hot loops. On return the
/// first q entries of `scratch` are the top-q values in unspecified order.
TailVector empirical_tail_vector(std::span<const double> rewards, double alpha, double eps_sigma,
                                 std::vector<double>& scratch);

/// Indices of the q tail members in ascending index order. Ties at the threshold
/// go to the smallest arrival index.
std::vector<std::size_t> tail_members(std::span<const double> rewards, double alpha);

/// Tail vectors of the leading `prefixes[j]` rewards, one per prefix.
std::vector<TailVector> prefix_tail_vectors(std::span<const double> rewards,
                                            std::span<const std::size_t> prefixes, double alpha,
                                            double eps_sigma = kDefaultEpsSigma);

/// First half / second half, order preserved. Needs an even group of at least 4.
std::pair<RewardGroup, RewardGroup> split_halves(const RewardGroup& group);

}  // namespace tailx
