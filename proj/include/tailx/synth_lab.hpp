#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tailx/advantage_rules.hpp"
#include "tailx/tail_stats.hpp"

namespace tailx {

/// One-prompt Gaussian-tail model: reward Z ~ N(0, 1) with bounded score
/// S_c(Z) = 1{Z >= t_c} - P(Z >= t_c), one component per threshold.
struct SyntheticSpec {
  double alpha = 0.25;
  std::size_t n_target = 128;
  std::vector<double> score_thresholds{1.0, 1.5};

  std::size_t dim() const { return score_thresholds.size(); }
};

void validate(const SyntheticSpec& spec);

/// Score vector S(z).
std::vector<double> synthetic_score(const SyntheticSpec& spec, double z);

/// Population tail vector of N(0, 1) at spec.alpha.
TailVector population_tail(const SyntheticSpec& spec);

/// (1/alpha) E[1{Z >= r} R~_eta(Z) S(Z)] at the population tail vector, by
/// adaptive quadrature.
std::vector<double> true_gradient(const SyntheticSpec& spec);
/// Same target from truncated-Gaussian moments up to order 2.
std::vector<double> true_gradient_closed_form(const SyntheticSpec& spec);

/// Conditional mean H(eta) = (1/alpha) int_{eta.r}^inf R~_eta(z) S(z) phi(z) dz
/// of the cross-fitted estimator given the fitted tail vector.
std::vector<double> h_population(const TailVector& eta, const SyntheticSpec& spec);
std::vector<double> h_population_closed_form(const TailVector& eta, const SyntheticSpec& spec);

/// (1/(alpha n)) sum_i 1{z_i >= eta.r} R~_eta(z_i) S(z_i) over `evaluation`.
std::vector<double> plugin_gradient(std::span<const double> evaluation, const TailVector& eta,
                                    const SyntheticSpec& spec);

/// Tail vector fitted on group A, shaped score averaged over group B.
std::vector<double> cross_fit_gradient(const RewardGroup& group_a, const RewardGroup& group_b,
                                       const SyntheticSpec& spec, double eps_sigma = kDefaultEpsSigma);

/// Exact expectations for the top q of n iid N(0, 1) draws: the q-th largest
/// value, the mean of the top q, and the mean of their squares.
struct TopOrderMoments {
  double threshold = 0.0;
  double tail_mean = 0.0;
  double tail_second = 0.0;
};

TopOrderMoments gaussian_top_order_moments(std::size_t n, std::size_t q);

enum class LabEstimatorKind {
  TeaRaw,              // same-batch plug-in
  PrefixTeaCrossFit,   // split halves, theory prefixes, Rao-Blackwellized bias
  PrefixTeaSameGroup,  // practical prefixes of one group, raw weights
  OracleTea,           // plug-in at the population tail vector
  AdvantageRule,       // any advantage rule: gradient (1/m) sum A_i S(Z_i)
};

struct LabEstimator {
  LabEstimatorKind kind = LabEstimatorKind::TeaRaw;
  Rule rule = Rule::TeaRaw;  // used by AdvantageRule
  RuleParams params;         // k and j_count configure the prefix estimators

  std::string tag() const;
};

LabEstimator lab_tea();
LabEstimator lab_prefix_tea(std::size_t k, std::size_t j_count);

/// Parses "tea", "prefix-tea:K:J", "prefix-tea-same:K:J", "oracle", or
/// "rule:<advantage rule name>".
LabEstimator parse_lab_estimator(const std::string& text, const RuleParams& base);

struct BiasVarianceRow {
  std::string estimator_tag;
  std::size_t m = 0;
  // Bias is the mean of the estimator (or, for the cross-fitted estimator,
  // of its conditional mean given the fitted tail vectors) minus the target,
  // with Monte Carlo noise reduced by control variates of known mean.
  std::vector<double> bias_vec;
  double bias_norm = 0.0;
  std::vector<double> bias_se;     // standard error per component
  double variance = 0.0;           // trace of the estimator covariance
  double direct_bias_norm = 0.0;   // plain estimator mean minus target
  std::vector<std::pair<std::size_t, double>> mse_at_p;
  std::size_t replications = 0;
  std::uint64_t seed = 0;

  double mse(std::size_t p) const;  // bias_norm^2 + variance / p
};

inline constexpr std::size_t kDefaultPGrid[] = {1, 2048, 65536};

/// Replications used when the caller passes 0: 2e5 for m <= 1024, 5e4 above.
std::size_t default_replications(std::size_t m);

BiasVarianceRow estimator_bias_variance(const LabEstimator& estimator, const SyntheticSpec& spec,
                                        std::size_t m, std::size_t replications, std::uint64_t seed,
                                        std::span<const std::size_t> p_grid = kDefaultPGrid);

struct MseFrontier {
  std::vector<BiasVarianceRow> rows;
  std::vector<std::size_t> m_grid;
  std::vector<std::size_t> p_grid;
  /// log10(MSE_P(first prefix estimator) / MSE_P(TEA)), [m][P]; empty when
  /// either estimator is absent from the request.
  std::vector<std::vector<double>> log10_ratio;
};

MseFrontier mse_frontier(std::span<const LabEstimator> estimators, std::span<const std::size_t> m_grid,
                         std::span<const std::size_t> p_grid, const SyntheticSpec& spec,
                         std::size_t replications, std::uint64_t seed);

}  // namespace tailx
