#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailx/prefix_scheme.hpp"
#include "tailx/tail_stats.hpp"

namespace tailx {

enum class Rule {
  TeaRaw,  // uncentered plug-in weights; what the gradient estimator uses
  Tea,
  PrefixTea,
  Grpo,
  GrpoZ,
  BonMaxMean,
  BonMaxSecond,
  BonMean,
  Chow,
  CatBon,
};

std::string_view rule_name(Rule rule);
std::optional<Rule> parse_rule(std::string_view name);
std::span<const Rule> all_rules();

/// Knobs shared by every rule. Zero-valued sizes mean "derive from the group":
/// bon_k and n_sel default to m/2, m_corr to m - n_sel, and an unset
/// lambda_nsel to n_sel - 1.
struct RuleParams {
  double alpha = 0.25;
  std::size_t n_target = 128;
  double eps_sigma = kDefaultEpsSigma;
  double eps_norm = 1e-8;
  std::size_t k = 2;
  std::size_t j_count = 4;
  std::size_t bon_k = 0;
  std::size_t n_sel = 0;
  std::size_t m_corr = 0;
  std::optional<double> lambda_nsel;
  std::size_t cat_n_target = 128;
  std::uint64_t seed = 0;
};

/// Canonical text encoding of every parameter, used to tag outputs.
std::string params_digest(const RuleParams& params);

struct AdvantageVector {
  std::vector<double> values;
  std::string rule_tag;
  std::string params_digest;
};

/// (u - r) + c_tilde / (2 sigma) * ((u - mu)^2 - (r - mu)^2)
double tail_shaped_reward(const TailVector& eta, double u, double c_tilde);

AdvantageVector tea_raw(std::span<const double> rewards, const RuleParams& params);
AdvantageVector tea(std::span<const double> rewards, const RuleParams& params);
AdvantageVector prefix_tea(std::span<const double> rewards, const RuleParams& params);
/// Prefix-TEA with an explicit scheme (sizes, ratios, weights) for the group.
AdvantageVector prefix_tea(std::span<const double> rewards, const RuleParams& params,
                           const PrefixScheme& scheme);
AdvantageVector grpo(std::span<const double> rewards);
AdvantageVector grpo_z(std::span<const double> rewards, double eps_norm);

enum class BonMaxVariant { Mean, Second };
AdvantageVector bon_max(std::span<const double> rewards, BonMaxVariant variant);

/// Max@K transformed rewards in arrival order, before normalization.
std::vector<double> bon_mean_transform(std::span<const double> rewards, std::size_t bon_k);
AdvantageVector bon_mean(std::span<const double> rewards, std::size_t bon_k, double eps_norm);

/// Chow BoN-RL with an explicit selection set; every other index is a
/// correction sample.
AdvantageVector chow_bon_rl(std::span<const double> rewards, std::span<const std::size_t> selection,
                            double lambda_nsel);
/// Chow BoN-RL with the selection set drawn by a seeded permutation.
AdvantageVector chow_bon_rl(std::span<const double> rewards, const RuleParams& params);

AdvantageVector cat_bon(std::span<const double> rewards, std::size_t cat_n_target, double eps_norm);

/// Dispatch on the rule tag.
AdvantageVector compute_advantages(Rule rule, std::span<const double> rewards,
                                   const RuleParams& params);

}  // namespace tailx
