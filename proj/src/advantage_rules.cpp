#include "tailx/advantage_rules.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "tailx/error.hpp"
#include "tailx/gauss_tail.hpp"
#include "tailx/rng.hpp"

namespace tailx {

namespace {

constexpr std::array<std::pair<Rule, std::string_view>, 10> kRuleNames{{
    {Rule::TeaRaw, "tea-raw"},
    {Rule::Tea, "tea"},
    {Rule::PrefixTea, "prefix-tea"},
    {Rule::Grpo, "grpo"},
    {Rule::GrpoZ, "grpo-z"},
    {Rule::BonMaxMean, "bonmax-mean"},
    {Rule::BonMaxSecond, "bonmax-second"},
    {Rule::BonMean, "bon-mean"},
    {Rule::Chow, "chow"},
    {Rule::CatBon, "cat-bon"},
}};

constexpr std::array<Rule, 10> kAllRules{Rule::TeaRaw,       Rule::Tea,        Rule::PrefixTea,
                                         Rule::Grpo,         Rule::GrpoZ,      Rule::BonMaxMean,
                                         Rule::BonMaxSecond, Rule::BonMean,    Rule::Chow,
                                         Rule::CatBon};

// c_tilde only depends on (alpha, N); the quadrature behind it is worth caching.
double cached_c_tilde(double alpha, std::size_t n) {
  static std::mutex mu;
  static std::map<std::pair<double, std::size_t>, double> cache;
  std::lock_guard lock(mu);
  auto [it, inserted] = cache.try_emplace({alpha, n}, 0.0);
  if (inserted) it->second = tail_constants(alpha, n).c_tilde_n;
  return it->second;
}

void check_rewards(std::span<const double> rewards) {
  require(rewards.size() >= 2, ErrorKind::Domain, "advantage rules need at least 2 rewards");
  for (double r : rewards) require(std::isfinite(r), ErrorKind::Domain, "non-finite reward");
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_std(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

void center(std::vector<double>& v) {
  const double m = mean_of(v);
  for (double& x : v) x -= m;
}

std::vector<double> z_normalize(std::span<const double> v, double eps) {
  const double m = mean_of(v);
  const double denom = pop_std(v, m) + eps;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - m) / denom;
  return out;
}

// argmax with ties to the smallest index
std::size_t first_argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Raw plug-in weights (1/alpha) 1{R_i >= r} R~(R_i) over the first `len`
// rewards, scaled by `scale` and written into `out` after taking the positive
// part when requested.
void accumulate_raw(std::span<const double> rewards, std::size_t len, const RuleParams& params,
                    double c_tilde, double scale, bool positive_part, std::vector<double>& out,
                    std::vector<double>& scratch) {
  const auto prefix = rewards.first(len);
  const TailVector eta = empirical_tail_vector(prefix, params.alpha, params.eps_sigma, scratch);
  for (std::size_t i = 0; i < len; ++i) {
    if (prefix[i] < eta.r) continue;
    double a = tail_shaped_reward(eta, prefix[i], c_tilde) / params.alpha;
    if (positive_part) a = std::max(a, 0.0);
    out[i] += scale * a;
  }
}

// C(a, b) as a double; zero when the arguments are impossible.
double choose(long a, long b) {
  if (b < 0 || a < 0 || b > a) return 0.0;
  b = std::min(b, a - b);
  long double r = 1.0L;
  for (long i = 1; i <= b; ++i) r = r * static_cast<long double>(a - b + i) / static_cast<long double>(i);
  return static_cast<double>(r);
}

double log_choose(long a, long b) {
  return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}

// C(a, b) / C(m, k), switching to log space when C(m, k) would overflow.
double choose_ratio(long a, long b, long m, long k) {
  if (b < 0 || a < 0 || b > a) return 0.0;
  if (m <= 1000) return choose(a, b) / choose(m, k);
  return std::exp(log_choose(a, b) - log_choose(m, k));
}

AdvantageVector tagged(std::vector<double> values, Rule rule, const RuleParams& params) {
  return {std::move(values), std::string(rule_name(rule)), params_digest(params)};
}

}  // namespace

std::string_view rule_name(Rule rule) {
  for (const auto& [r, name] : kRuleNames)
    if (r == rule) return name;
  return "unknown";
}

std::optional<Rule> parse_rule(std::string_view name) {
  for (const auto& [r, n] : kRuleNames)
    if (n == name) return r;
  return std::nullopt;
}

std::span<const Rule> all_rules() { return kAllRules; }

std::string params_digest(const RuleParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "alpha=" << p.alpha << ";n_target=" << p.n_target << ";eps_sigma=" << p.eps_sigma
     << ";eps_norm=" << p.eps_norm << ";k=" << p.k << ";j_count=" << p.j_count
     << ";bon_k=" << p.bon_k << ";n_sel=" << p.n_sel << ";m_corr=" << p.m_corr
     << ";lambda_nsel=";
  if (p.lambda_nsel)
    os << *p.lambda_nsel;
  else
    os << "auto";
  os << ";cat_n_target=" << p.cat_n_target << ";seed=" << p.seed;
  return os.str();
}

double tail_shaped_reward(const TailVector& eta, double u, double c_tilde) {
  require(eta.sigma > 0.0, ErrorKind::Domain, "tail scale must be positive");
  const double du = u - eta.mu;
  const double dr = eta.r - eta.mu;
  return (u - eta.r) + c_tilde / (2.0 * eta.sigma) * (du * du - dr * dr);
}

AdvantageVector tea_raw(std::span<const double> rewards, const RuleParams& params) {
  check_rewards(rewards);
  std::vector<double> out(rewards.size(), 0.0);
  std::vector<double> scratch;
  accumulate_raw(rewards, rewards.size(), params, cached_c_tilde(params.alpha, params.n_target), 1.0,
                 false, out, scratch);
  return tagged(std::move(out), Rule::TeaRaw, params);
}

AdvantageVector tea(std::span<const double> rewards, const RuleParams& params) {
  check_rewards(rewards);
  std::vector<double> out(rewards.size(), 0.0);
  std::vector<double> scratch;
  accumulate_raw(rewards, rewards.size(), params, cached_c_tilde(params.alpha, params.n_target), 1.0,
                 true, out, scratch);
  center(out);
  return tagged(std::move(out), Rule::Tea, params);
}

AdvantageVector prefix_tea(std::span<const double> rewards, const RuleParams& params,
                           const PrefixScheme& scheme) {
  check_rewards(rewards);
  require(scheme.m == rewards.size(), ErrorKind::Domain, "prefix scheme built for another group size");
  require(scheme.sizes.size() == scheme.weights.size() && scheme.sizes.size() == scheme.ratios.size(),
          ErrorKind::Domain, "malformed prefix scheme");
  const double c_tilde = cached_c_tilde(params.alpha, params.n_target);
  std::vector<double> out(rewards.size(), 0.0);
  std::vector<double> scratch;
  for (std::size_t j = 0; j < scheme.sizes.size(); ++j) {
    accumulate_raw(rewards, scheme.sizes[j], params, c_tilde, scheme.weights[j] * scheme.ratios[j],
                   true, out, scratch);
  }
  center(out);
  return tagged(std::move(out), Rule::PrefixTea, params);
}

AdvantageVector prefix_tea(std::span<const double> rewards, const RuleParams& params) {
  check_rewards(rewards);
  return prefix_tea(rewards, params, practical_scheme(rewards.size(), params.k, params.j_count));
}

AdvantageVector grpo(std::span<const double> rewards) {
  check_rewards(rewards);
  std::vector<double> out(rewards.begin(), rewards.end());
  center(out);
  return {std::move(out), std::string(rule_name(Rule::Grpo)), {}};
}

AdvantageVector grpo_z(std::span<const double> rewards, double eps_norm) {
  check_rewards(rewards);
  require(eps_norm > 0.0, ErrorKind::Domain, "eps_norm must be positive");
  return {z_normalize(rewards, eps_norm), std::string(rule_name(Rule::GrpoZ)), {}};
}

AdvantageVector bon_max(std::span<const double> rewards, BonMaxVariant variant) {
  check_rewards(rewards);
  const std::size_t best = first_argmax(rewards);
  double baseline = 0.0;
  if (variant == BonMaxVariant::Mean) {
    baseline = mean_of(rewards);
  } else {
    std::vector<double> sorted(rewards.begin(), rewards.end());
    std::nth_element(sorted.begin(), sorted.begin() + 1, sorted.end(), std::greater<>());
    baseline = sorted[1];
  }
  std::vector<double> out(rewards.size(), 0.0);
  out[best] = rewards[best] - baseline;
  const Rule tag = variant == BonMaxVariant::Mean ? Rule::BonMaxMean : Rule::BonMaxSecond;
  return {std::move(out), std::string(rule_name(tag)), {}};
}

std::vector<double> bon_mean_transform(std::span<const double> rewards, std::size_t bon_k) {
  check_rewards(rewards);
  const std::size_t m = rewards.size();
  require(bon_k >= 1 && bon_k < m, ErrorKind::Domain, "bon-mean needs 1 <= k < m");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rewards[a] < rewards[b]; });
  const auto lm = static_cast<long>(m);
  const auto lk = static_cast<long>(bon_k);
  // Sorted positions are 1-based in the transform; suffix[i] accumulates
  // r_(j) C(j-2, k-2) / C(m, k) over j > i.
  std::vector<double> transformed(m, 0.0);
  double suffix = 0.0;
  for (long i = lm; i >= 1; --i) {
    const double r_i = rewards[order[static_cast<std::size_t>(i - 1)]];
    transformed[order[static_cast<std::size_t>(i - 1)]] =
        r_i * choose_ratio(i - 1, lk - 1, lm, lk) + suffix;
    suffix += r_i * choose_ratio(i - 2, lk - 2, lm, lk);
  }
  return transformed;
}

AdvantageVector bon_mean(std::span<const double> rewards, std::size_t bon_k, double eps_norm) {
  require(eps_norm > 0.0, ErrorKind::Domain, "eps_norm must be positive");
  return {z_normalize(bon_mean_transform(rewards, bon_k), eps_norm),
          std::string(rule_name(Rule::BonMean)), {}};
}

AdvantageVector chow_bon_rl(std::span<const double> rewards, std::span<const std::size_t> selection,
                            double lambda_nsel) {
  check_rewards(rewards);
  const std::size_t m = rewards.size();
  require(!selection.empty() && selection.size() < m, ErrorKind::Domain,
          "Chow split needs nonempty selection and correction sets");
  std::vector<char> selected(m, 0);
  for (std::size_t i : selection) {
    require(i < m, ErrorKind::Index, "selection index out of range");
    require(!selected[i], ErrorKind::Domain, "duplicate selection index");
    selected[i] = 1;
  }
  std::size_t best = m;
  for (std::size_t i = 0; i < m; ++i)
    if (selected[i] && (best == m || rewards[i] > rewards[best])) best = i;
  const double r_star = rewards[best];
  const double m_corr = static_cast<double>(m - selection.size());
  const double md = static_cast<double>(m);
  std::vector<double> out(m, 0.0);
  out[best] = md * r_star;
  for (std::size_t i = 0; i < m; ++i) {
    if (!selected[i] && rewards[i] > r_star) out[i] = -md * (lambda_nsel / m_corr) * r_star;
  }
  return {std::move(out), std::string(rule_name(Rule::Chow)), {}};
}

AdvantageVector chow_bon_rl(std::span<const double> rewards, const RuleParams& params) {
  check_rewards(rewards);
  const std::size_t m = rewards.size();
  const std::size_t n_sel = params.n_sel ? params.n_sel : m / 2;
  const std::size_t m_corr = params.m_corr ? params.m_corr : m - n_sel;
  require(n_sel >= 1 && m_corr >= 1 && n_sel + m_corr == m, ErrorKind::Domain,
          "Chow split sizes must be positive and sum to the group size");
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(params.seed);
  for (std::size_t i = m - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  perm.resize(n_sel);
  const double lambda = params.lambda_nsel.value_or(static_cast<double>(n_sel) - 1.0);
  auto out = chow_bon_rl(rewards, perm, lambda);
  out.params_digest = params_digest(params);
  return out;
}

AdvantageVector cat_bon(std::span<const double> rewards, std::size_t cat_n_target, double eps_norm) {
  check_rewards(rewards);
  require(cat_n_target >= 1, ErrorKind::Domain, "CAT-BoN target must be >= 1");
  require(eps_norm > 0.0, ErrorKind::Domain, "eps_norm must be positive");
  const std::size_t m = rewards.size();
  std::vector<double> sorted(rewards.begin(), rewards.end());
  std::sort(sorted.begin(), sorted.end());
  const double nt = static_cast<double>(cat_n_target);
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), rewards[i]) - sorted.begin();
    const double frac = static_cast<double>(below) / static_cast<double>(m);
    w[i] = nt * std::pow(frac, nt - 1.0);
  }
  const double w_mean = mean_of(w);
  std::vector<double> out = z_normalize(rewards, eps_norm);
  for (std::size_t i = 0; i < m; ++i) out[i] *= w[i] / (w_mean + eps_norm);
  return {std::move(out), std::string(rule_name(Rule::CatBon)), {}};
}

AdvantageVector compute_advantages(Rule rule, std::span<const double> rewards,
                                   const RuleParams& params) {
  AdvantageVector out;
  switch (rule) {
    case Rule::TeaRaw: return tea_raw(rewards, params);
    case Rule::Tea: return tea(rewards, params);
    case Rule::PrefixTea: return prefix_tea(rewards, params);
    case Rule::Grpo: out = grpo(rewards); break;
    case Rule::GrpoZ: out = grpo_z(rewards, params.eps_norm); break;
    case Rule::BonMaxMean: out = bon_max(rewards, BonMaxVariant::Mean); break;
    case Rule::BonMaxSecond: out = bon_max(rewards, BonMaxVariant::Second); break;
    case Rule::BonMean:
      out = bon_mean(rewards, params.bon_k ? params.bon_k : rewards.size() / 2, params.eps_norm);
      break;
    case Rule::Chow: return chow_bon_rl(rewards, params);
    case Rule::CatBon: out = cat_bon(rewards, params.cat_n_target, params.eps_norm); break;
  }
  out.params_digest = params_digest(params);
  return out;
}

}  // namespace tailx
