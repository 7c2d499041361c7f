#include "tailx/synth_lab.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <map>
#include <numbers>
#include <mutex>
#include <cmath>
#include <random>
#include <sstream>

#include "linalg.hpp"
#include "parallel.hpp"
#include "tailx/error.hpp"
#include "tailx/gauss_tail.hpp"
#include "tailx/prefix_scheme.hpp"
#include "tailx/rng.hpp"

namespace tailx {

namespace {

using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;

// Beyond this distance above the lower limit phi is below 1e-49.
constexpr double kUpperReach = 15.0;

double quad(const auto& f, double a, double b) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  return Quad::integrate(f, a, b, 20, 1e-13, &err);
}

// Integral of z^k phi(z) over [a, inf) for k = 0, 1, 2.
double upper_moment(double a, int k) {
  switch (k) {
    case 0: return normal_sf(a);
    case 1: return normal_pdf(a);
    default: return a * normal_pdf(a) + normal_sf(a);
  }
}

// R~_eta(z) = c2 z^2 + c1 z + c0
struct ShapedQuadratic {
  double c2, c1, c0;

  ShapedQuadratic(const TailVector& eta, double c_tilde) {
    const double a = c_tilde / (2.0 * eta.sigma);
    const double dr = eta.r - eta.mu;
    c2 = a;
    c1 = 1.0 - 2.0 * a * eta.mu;
    c0 = -eta.r + a * eta.mu * eta.mu - a * dr * dr;
  }

  double upper_integral(double lower) const {
    return c2 * upper_moment(lower, 2) + c1 * upper_moment(lower, 1) + c0 * upper_moment(lower, 0);
  }
};

double c_tilde_of(const SyntheticSpec& spec) {
  return tail_constants(spec.alpha, spec.n_target).c_tilde_n;
}

std::vector<double> h_quadrature(const TailVector& eta, const SyntheticSpec& spec, double c_tilde) {
  std::vector<double> out;
  out.reserve(spec.dim());
  for (double t : spec.score_thresholds) {
    const double centering = normal_sf(t);
    auto shaped = [&](double z) { return tail_shaped_reward(eta, z, c_tilde) * normal_pdf(z); };
    const double hi = std::max(eta.r, t) + kUpperReach;
    // Split at the score discontinuity so the integrand is smooth on each piece.
    double below_t = 0.0;
    double above_t = 0.0;
    if (t > eta.r) {
      below_t = quad(shaped, eta.r, t);
      above_t = quad(shaped, t, hi);
    } else {
      above_t = quad(shaped, eta.r, hi);
    }
    out.push_back(((1.0 - centering) * above_t - centering * below_t) / spec.alpha);
  }
  return out;
}

std::vector<double> h_closed(const TailVector& eta, const SyntheticSpec& spec, double c_tilde) {
  const ShapedQuadratic shaped(eta, c_tilde);
  const double whole = shaped.upper_integral(eta.r);
  std::vector<double> out;
  out.reserve(spec.dim());
  for (double t : spec.score_thresholds) {
    out.push_back((shaped.upper_integral(std::max(eta.r, t)) - normal_sf(t) * whole) / spec.alpha);
  }
  return out;
}

// Accumulates (1/(alpha n)) sum 1{z >= r} R~(z) S(z) into `acc` with weight `scale`.
void add_plugin(std::span<const double> z, const TailVector& eta, const SyntheticSpec& spec,
                std::span<const double> centering, double c_tilde, double scale,
                std::vector<double>& acc) {
  const double norm = scale / (spec.alpha * static_cast<double>(z.size()));
  for (double x : z) {
    if (x < eta.r) continue;
    const double w = tail_shaped_reward(eta, x, c_tilde) * norm;
    for (std::size_t c = 0; c < spec.dim(); ++c)
      acc[c] += w * ((x >= spec.score_thresholds[c] ? 1.0 : 0.0) - centering[c]);
  }
}

// Running first and second moments per component, mergeable in a fixed order.
struct Moments {
  std::size_t n = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  explicit Moments(std::size_t d = 0) : mean(d, 0.0), m2(d, 0.0) {}

  void add(std::span<const double> x) {
    ++n;
    const double nd = static_cast<double>(n);
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double delta = x[c] - mean[c];
      mean[c] += delta / nd;
      m2[c] += delta * (x[c] - mean[c]);
    }
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const double nt = na + nb;
    for (std::size_t c = 0; c < mean.size(); ++c) {
      const double delta = o.mean[c] - mean[c];
      mean[c] += delta * nb / nt;
      m2[c] += o.m2[c] + delta * delta * na * nb / nt;
    }
    n += o.n;
  }
};

// Raw cross-product sums of (Y - target, C - E[C]) for the control-variate
// regression. Both blocks are centered at known means, so plain sums stay
// well conditioned.
struct ControlSums {
  std::size_t d = 0, k = 0, n = 0;
  std::vector<double> y, c, cc, cy, yy;

  ControlSums(std::size_t dims, std::size_t controls)
      : d(dims), k(controls), y(dims, 0.0), c(controls, 0.0), cc(controls * controls, 0.0),
        cy(controls * dims, 0.0), yy(dims, 0.0) {}

  void add(std::span<const double> yv, std::span<const double> cv) {
    ++n;
    for (std::size_t i = 0; i < d; ++i) {
      y[i] += yv[i];
      yy[i] += yv[i] * yv[i];
    }
    for (std::size_t a = 0; a < k; ++a) {
      c[a] += cv[a];
      for (std::size_t b = 0; b < k; ++b) cc[a * k + b] += cv[a] * cv[b];
      for (std::size_t i = 0; i < d; ++i) cy[a * d + i] += cv[a] * yv[i];
    }
  }

  void merge(const ControlSums& o) {
    n += o.n;
    auto add_to = [](std::vector<double>& dst, const std::vector<double>& src) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    add_to(y, o.y);
    add_to(c, o.c);
    add_to(cc, o.cc);
    add_to(cy, o.cy);
    add_to(yy, o.yy);
  }
};

template <class T>
T pairwise_merge(std::vector<T>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  T left = pairwise_merge(parts, lo, mid);
  left.merge(pairwise_merge(parts, mid, hi));
  return left;
}

struct ChunkResult {
  Moments estimate;
  ControlSums controlled;
  std::size_t all_zero = 0;
};

struct ControlledMean {
  std::vector<double> mean;  // control-adjusted mean of Y - target
  std::vector<double> se;
};

ControlledMean controlled_mean(const ControlSums& s) {
  const double n = static_cast<double>(s.n);
  ControlledMean out;
  std::vector<double> ybar(s.d), cbar(s.k);
  for (std::size_t i = 0; i < s.d; ++i) ybar[i] = s.y[i] / n;
  for (std::size_t a = 0; a < s.k; ++a) cbar[a] = s.c[a] / n;
  std::vector<double> scc(s.k * s.k);
  for (std::size_t a = 0; a < s.k; ++a)
    for (std::size_t b = 0; b < s.k; ++b) scc[a * s.k + b] = s.cc[a * s.k + b] / n - cbar[a] * cbar[b];
  for (std::size_t i = 0; i < s.d; ++i) {
    const double syy = s.yy[i] / n - ybar[i] * ybar[i];
    double adjusted = ybar[i];
    double resid = syy;
    if (s.k > 0) {
      std::vector<double> scy(s.k);
      for (std::size_t a = 0; a < s.k; ++a) scy[a] = s.cy[a * s.d + i] / n - cbar[a] * ybar[i];
      try {
        const auto beta = detail::solve_dense(scc, scy, s.k, 1e-12);
        for (std::size_t a = 0; a < s.k; ++a) {
          adjusted -= beta[a] * cbar[a];
          resid -= beta[a] * scy[a];
        }
      } catch (const Error&) {
        // collinear controls: fall back to the plain mean
        adjusted = ybar[i];
        resid = syy;
      }
    }
    out.mean.push_back(adjusted);
    out.se.push_back(std::sqrt(std::max(resid, 0.0) / n));
  }
  return out;
}

// One replication's outputs. `estimate` is the estimator itself; `target_stat`
// is the statistic whose mean measures its bias (the estimator, or its
// Rao-Blackwellized conditional mean); `controls` have known expectations.
struct Replication {
  std::vector<double> estimate;
  std::vector<double> target_stat;
  std::vector<double> controls;
};

// Per-replication worker for one estimator configuration.
class Replicator {
 public:
  Replicator(const LabEstimator& est, const SyntheticSpec& spec, std::size_t m)
      : est_(est), spec_(spec), m_(m), c_tilde_(c_tilde_of(spec)), pop_(population_tail(spec)) {
    for (double t : spec.score_thresholds) centering_.push_back(normal_sf(t));
    const std::size_t d = spec.dim();
    auto add_order_controls = [&](std::size_t n) {
      const auto mo = gaussian_top_order_moments(n, tail_count(spec.alpha, n));
      control_means_.insert(control_means_.end(), {mo.threshold, mo.tail_mean, mo.tail_second});
    };
    auto add_oracle_controls = [&] {
      const auto g = true_gradient_closed_form(spec);
      control_means_.insert(control_means_.end(), g.begin(), g.end());
    };
    switch (est.kind) {
      case LabEstimatorKind::TeaRaw:
        add_oracle_controls();
        add_order_controls(m);
        break;
      case LabEstimatorKind::PrefixTeaCrossFit:
        require(m % 2 == 0 && m >= 4, ErrorKind::Domain, "cross-fitted estimator needs an even m >= 4");
        scheme_ = theory_scheme(m / 2, est.params.k, est.params.j_count, rationalize(spec.alpha));
        for (std::size_t nj : scheme_.sizes) add_order_controls(nj);
        break;
      case LabEstimatorKind::PrefixTeaSameGroup:
        scheme_ = practical_scheme(m, est.params.k, est.params.j_count);
        for (std::size_t nj : scheme_.sizes) {
          add_oracle_controls();
          add_order_controls(nj);
        }
        break;
      default: break;
    }
    rep_.estimate.resize(d);
    rep_.target_stat.resize(d);
    rep_.controls.resize(control_means_.size());
  }

  std::span<const double> control_means() const { return control_means_; }

  // Runs replication `rep`; returns false when the estimator put zero weight
  // on every sample.
  bool run(std::uint64_t seed, std::size_t rep) {
    Rng rng(seed, rep);
    std::normal_distribution<double> normal;
    draws_.resize(m_);
    for (double& x : draws_) x = normal(rng);
    std::fill(rep_.estimate.begin(), rep_.estimate.end(), 0.0);
    std::fill(rep_.target_stat.begin(), rep_.target_stat.end(), 0.0);
    const double eps = est_.params.eps_sigma;
    std::size_t ctl = 0;
    auto push_order_controls = [&](const TailVector& eta) {
      // scratch_ holds the top-q values after empirical_tail_vector
      double second = 0.0;
      for (std::size_t i = 0; i < eta.q; ++i) second += scratch_[i] * scratch_[i];
      rep_.controls[ctl++] = eta.r;
      rep_.controls[ctl++] = sum_top() / static_cast<double>(eta.q);
      rep_.controls[ctl++] = second / static_cast<double>(eta.q);
    };
    auto push_oracle_controls = [&](std::span<const double> z) {
      std::vector<double> acc(spec_.dim(), 0.0);
      add_plugin(z, pop_, spec_, centering_, c_tilde_, 1.0, acc);
      for (double v : acc) rep_.controls[ctl++] = v;
    };
    switch (est_.kind) {
      case LabEstimatorKind::TeaRaw: {
        const TailVector eta = empirical_tail_vector(draws_, spec_.alpha, eps, scratch_);
        last_q_ = eta.q;
        add_plugin(draws_, eta, spec_, centering_, c_tilde_, 1.0, rep_.estimate);
        rep_.target_stat = rep_.estimate;
        push_oracle_controls(draws_);
        push_order_controls(eta);
        return eta.sigma > eps;
      }
      case LabEstimatorKind::OracleTea: {
        add_plugin(draws_, pop_, spec_, centering_, c_tilde_, 1.0, rep_.estimate);
        rep_.target_stat = rep_.estimate;
        return true;
      }
      case LabEstimatorKind::PrefixTeaCrossFit: {
        const std::size_t n = m_ / 2;
        const auto fit = std::span<const double>(draws_).first(n);
        const auto eval = std::span<const double>(draws_).subspan(n, n);
        bool any = false;
        for (std::size_t j = 0; j < scheme_.sizes.size(); ++j) {
          const std::size_t nj = scheme_.sizes[j];
          const TailVector eta = empirical_tail_vector(fit.first(nj), spec_.alpha, eps, scratch_);
          last_q_ = eta.q;
          add_plugin(eval.first(nj), eta, spec_, centering_, c_tilde_, scheme_.weights[j], rep_.estimate);
          const auto h = h_closed(eta, spec_, c_tilde_);
          for (std::size_t c = 0; c < h.size(); ++c) rep_.target_stat[c] += scheme_.weights[j] * h[c];
          push_order_controls(eta);
          any = any || eta.sigma > eps;
        }
        return any;
      }
      case LabEstimatorKind::PrefixTeaSameGroup: {
        bool any = false;
        for (std::size_t j = 0; j < scheme_.sizes.size(); ++j) {
          const auto prefix = std::span<const double>(draws_).first(scheme_.sizes[j]);
          const TailVector eta = empirical_tail_vector(prefix, spec_.alpha, eps, scratch_);
          last_q_ = eta.q;
          add_plugin(prefix, eta, spec_, centering_, c_tilde_, scheme_.weights[j], rep_.estimate);
          push_oracle_controls(prefix);
          push_order_controls(eta);
          any = any || eta.sigma > eps;
        }
        rep_.target_stat = rep_.estimate;
        return any;
      }
      case LabEstimatorKind::AdvantageRule: {
        RuleParams p = est_.params;
        p.seed = derive_seed(est_.params.seed, rep);
        const auto adv = compute_advantages(est_.rule, draws_, p);
        bool any = false;
        const double inv_m = 1.0 / static_cast<double>(m_);
        for (std::size_t i = 0; i < m_; ++i) {
          if (adv.values[i] == 0.0) continue;
          any = true;
          for (std::size_t c = 0; c < spec_.dim(); ++c)
            rep_.estimate[c] += inv_m * adv.values[i] *
                                ((draws_[i] >= spec_.score_thresholds[c] ? 1.0 : 0.0) - centering_[c]);
        }
        rep_.target_stat = rep_.estimate;
        return any;
      }
    }
    return false;
  }

  const Replication& last() const { return rep_; }

 private:
  double sum_top() const {
    double s = 0.0;
    for (std::size_t i = 0; i < last_q_; ++i) s += scratch_[i];
    return s;
  }

  const LabEstimator& est_;
  const SyntheticSpec& spec_;
  std::size_t m_;
  double c_tilde_;
  TailVector pop_;
  std::vector<double> centering_;
  std::vector<double> control_means_;
  PrefixScheme scheme_;
  std::vector<double> draws_;
  std::vector<double> scratch_;
  std::size_t last_q_ = 0;
  Replication rep_;
};

constexpr std::size_t kChunk = 512;

}  // namespace

void validate(const SyntheticSpec& spec) {
  require(spec.alpha > 0.0 && spec.alpha < 0.5, ErrorKind::Domain, "alpha must lie in (0, 1/2)");
  require(spec.n_target >= 1, ErrorKind::Domain, "n_target must be >= 1");
  require(!spec.score_thresholds.empty(), ErrorKind::Domain, "need at least one score threshold");
  for (double t : spec.score_thresholds)
    require(!std::isnan(t), ErrorKind::Domain, "score thresholds must not be NaN");
}

std::vector<double> synthetic_score(const SyntheticSpec& spec, double z) {
  std::vector<double> s;
  s.reserve(spec.dim());
  for (double t : spec.score_thresholds) s.push_back((z >= t ? 1.0 : 0.0) - normal_sf(t));
  return s;
}

TailVector population_tail(const SyntheticSpec& spec) {
  const TailConstants c = tail_constants(spec.alpha, spec.n_target);
  return gaussian_population_tail(0.0, 1.0, c);
}

std::vector<double> true_gradient(const SyntheticSpec& spec) {
  validate(spec);
  return h_quadrature(population_tail(spec), spec, c_tilde_of(spec));
}

std::vector<double> true_gradient_closed_form(const SyntheticSpec& spec) {
  validate(spec);
  return h_closed(population_tail(spec), spec, c_tilde_of(spec));
}

std::vector<double> h_population(const TailVector& eta, const SyntheticSpec& spec) {
  validate(spec);
  require(eta.sigma > 0.0, ErrorKind::Domain, "tail scale must be positive");
  return h_quadrature(eta, spec, c_tilde_of(spec));
}

std::vector<double> h_population_closed_form(const TailVector& eta, const SyntheticSpec& spec) {
  validate(spec);
  require(eta.sigma > 0.0, ErrorKind::Domain, "tail scale must be positive");
  return h_closed(eta, spec, c_tilde_of(spec));
}

std::vector<double> plugin_gradient(std::span<const double> evaluation, const TailVector& eta,
                                    const SyntheticSpec& spec) {
  validate(spec);
  require(!evaluation.empty(), ErrorKind::Domain, "evaluation batch is empty");
  require(eta.sigma > 0.0, ErrorKind::Domain, "tail scale must be positive");
  std::vector<double> centering;
  for (double t : spec.score_thresholds) centering.push_back(normal_sf(t));
  std::vector<double> acc(spec.dim(), 0.0);
  add_plugin(evaluation, eta, spec, centering, c_tilde_of(spec), 1.0, acc);
  return acc;
}

std::vector<double> cross_fit_gradient(const RewardGroup& group_a, const RewardGroup& group_b,
                                       const SyntheticSpec& spec, double eps_sigma) {
  require(group_a.size() == group_b.size(), ErrorKind::Domain, "cross-fit groups must have equal size");
  const TailVector eta = empirical_tail_vector(group_a.rewards, spec.alpha, eps_sigma);
  return plugin_gradient(group_b.rewards, eta, spec);
}

std::string LabEstimator::tag() const {
  std::ostringstream os;
  switch (kind) {
    case LabEstimatorKind::TeaRaw: return "tea";
    case LabEstimatorKind::OracleTea: return "oracle";
    case LabEstimatorKind::PrefixTeaCrossFit:
      os << "prefix-tea:" << params.k << ":" << params.j_count;
      return os.str();
    case LabEstimatorKind::PrefixTeaSameGroup:
      os << "prefix-tea-same:" << params.k << ":" << params.j_count;
      return os.str();
    case LabEstimatorKind::AdvantageRule: return "rule:" + std::string(rule_name(rule));
  }
  return "unknown";
}

LabEstimator lab_tea() { return {}; }

LabEstimator lab_prefix_tea(std::size_t k, std::size_t j_count) {
  LabEstimator e;
  e.kind = LabEstimatorKind::PrefixTeaCrossFit;
  e.params.k = k;
  e.params.j_count = j_count;
  return e;
}

LabEstimator parse_lab_estimator(const std::string& text, const RuleParams& base) {
  LabEstimator e;
  e.params = base;
  auto orders = [&](std::string_view rest) {
    const auto colon = rest.find(':');
    require(colon != std::string_view::npos, ErrorKind::Domain, "expected <name>:K:J");
    e.params.k = std::stoul(std::string(rest.substr(0, colon)));
    e.params.j_count = std::stoul(std::string(rest.substr(colon + 1)));
  };
  const std::string_view t = text;
  if (t == "tea") {
    e.kind = LabEstimatorKind::TeaRaw;
  } else if (t == "oracle") {
    e.kind = LabEstimatorKind::OracleTea;
  } else if (t.starts_with("prefix-tea-same:")) {
    e.kind = LabEstimatorKind::PrefixTeaSameGroup;
    orders(t.substr(16));
  } else if (t.starts_with("prefix-tea:")) {
    e.kind = LabEstimatorKind::PrefixTeaCrossFit;
    orders(t.substr(11));
  } else if (t.starts_with("rule:")) {
    e.kind = LabEstimatorKind::AdvantageRule;
    const auto rule = parse_rule(t.substr(5));
    require(rule.has_value(), ErrorKind::Domain, "unknown advantage rule in estimator spec");
    e.rule = *rule;
  } else {
    fail(ErrorKind::Domain, "unknown estimator '" + text + "'");
  }
  return e;
}

double BiasVarianceRow::mse(std::size_t p) const {
  require(p >= 1, ErrorKind::Domain, "prompt batch size must be >= 1");
  return bias_norm * bias_norm + variance / static_cast<double>(p);
}

std::size_t default_replications(std::size_t m) { return m <= 1024 ? 200000 : 50000; }

BiasVarianceRow estimator_bias_variance(const LabEstimator& estimator, const SyntheticSpec& spec,
                                        std::size_t m, std::size_t replications, std::uint64_t seed,
                                        std::span<const std::size_t> p_grid) {
  validate(spec);
  require(m >= 2, ErrorKind::Domain, "rollout budget must be >= 2");
  if (replications == 0) replications = default_replications(m);
  require(replications >= 1000, ErrorKind::Domain, "need at least 1000 replications");
  const std::size_t d = spec.dim();
  const auto target = true_gradient_closed_form(spec);

  // Built once up front so configuration errors surface before any work.
  const Replicator probe(estimator, spec, m);
  const std::vector<double> control_means(probe.control_means().begin(), probe.control_means().end());
  const std::size_t k = control_means.size();

  const std::size_t chunks = (replications + kChunk - 1) / kChunk;
  std::vector<ChunkResult> results(chunks, ChunkResult{Moments(d), ControlSums(d, k), 0});
  detail::parallel_for(chunks, [&](std::size_t chunk) {
    Replicator worker(estimator, spec, m);
    ChunkResult& out = results[chunk];
    std::vector<double> y(d), c(k);
    const std::size_t end = std::min(replications, (chunk + 1) * kChunk);
    for (std::size_t rep = chunk * kChunk; rep < end; ++rep) {
      if (!worker.run(seed, rep)) ++out.all_zero;
      const Replication& r = worker.last();
      out.estimate.add(r.estimate);
      for (std::size_t i = 0; i < d; ++i) y[i] = r.target_stat[i] - target[i];
      for (std::size_t a = 0; a < k; ++a) c[a] = r.controls[a] - control_means[a];
      out.controlled.add(y, c);
    }
  });

  std::vector<Moments> est_parts;
  std::vector<ControlSums> ctl_parts;
  std::size_t all_zero = 0;
  for (auto& r : results) {
    est_parts.push_back(std::move(r.estimate));
    ctl_parts.push_back(std::move(r.controlled));
    all_zero += r.all_zero;
  }
  if (static_cast<double>(all_zero) > 0.99 * static_cast<double>(replications))
    fail(ErrorKind::Degenerate, "estimator produced all-zero weights on >99% of replications");
  const Moments est = pairwise_merge(est_parts, 0, est_parts.size());
  const ControlledMean bias = controlled_mean(pairwise_merge(ctl_parts, 0, ctl_parts.size()));

  BiasVarianceRow row;
  row.estimator_tag = estimator.tag();
  row.m = m;
  row.replications = replications;
  row.seed = seed;
  const double n = static_cast<double>(replications);
  double bias_sq = 0.0, direct_sq = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    row.bias_vec.push_back(bias.mean[c]);
    bias_sq += bias.mean[c] * bias.mean[c];
    row.bias_se.push_back(bias.se[c]);
    row.variance += est.m2[c] / n;
    direct_sq += (est.mean[c] - target[c]) * (est.mean[c] - target[c]);
  }
  row.bias_norm = std::sqrt(bias_sq);
  row.direct_bias_norm = std::sqrt(direct_sq);
  for (std::size_t p : p_grid) row.mse_at_p.emplace_back(p, row.mse(p));
  return row;
}

MseFrontier mse_frontier(std::span<const LabEstimator> estimators, std::span<const std::size_t> m_grid,
                         std::span<const std::size_t> p_grid, const SyntheticSpec& spec,
                         std::size_t replications, std::uint64_t seed) {
  require(!estimators.empty() && !m_grid.empty() && !p_grid.empty(), ErrorKind::Domain,
          "frontier grids must be nonempty");
  MseFrontier out;
  out.m_grid.assign(m_grid.begin(), m_grid.end());
  out.p_grid.assign(p_grid.begin(), p_grid.end());
  std::ptrdiff_t tea_idx = -1, prefix_idx = -1;
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    if (estimators[e].kind == LabEstimatorKind::TeaRaw && tea_idx < 0) tea_idx = static_cast<std::ptrdiff_t>(e);
    if (estimators[e].kind == LabEstimatorKind::PrefixTeaCrossFit && prefix_idx < 0)
      prefix_idx = static_cast<std::ptrdiff_t>(e);
  }
  for (const auto& est : estimators)
    for (std::size_t m : m_grid)
      out.rows.push_back(estimator_bias_variance(est, spec, m, replications, seed, p_grid));
  if (tea_idx >= 0 && prefix_idx >= 0) {
    const std::size_t nm = m_grid.size();
    for (std::size_t i = 0; i < nm; ++i) {
      const auto& tea_row = out.rows[static_cast<std::size_t>(tea_idx) * nm + i];
      const auto& pre_row = out.rows[static_cast<std::size_t>(prefix_idx) * nm + i];
      std::vector<double> line;
      for (std::size_t p : p_grid) line.push_back(std::log10(pre_row.mse(p) / tea_row.mse(p)));
      out.log10_ratio.push_back(std::move(line));
    }
  }
  return out;
}

TopOrderMoments gaussian_top_order_moments(std::size_t n, std::size_t q) {
  require(n >= 1 && q >= 1 && q <= n, ErrorKind::Domain, "need 1 <= q <= n");
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, TopOrderMoments> cache;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find({n, q}); it != cache.end()) return it->second;
  }
  const double nd = static_cast<double>(n);
  const double qd = static_cast<double>(q);
  // Breakpoints scaled to the spread of the q-th largest draw.
  const double c = normal_quantile(1.0 - qd / (nd + 1.0));
  const double spread =
      std::sqrt(qd * (nd - qd + 1.0) / ((nd + 1.0) * (nd + 1.0) * (nd + 2.0))) / normal_pdf(c);
  // Fixed panels one spread wide cover +-40 spreads; the density is
  // negligible beyond that and smooth on the panel scale.
  const double lo_end = std::max(-12.0, c - 40.0 * spread);
  const double hi_end = std::min(12.0, c + 40.0 * spread);
  const std::size_t panels = 80;
  const double width = (hi_end - lo_end) / static_cast<double>(panels);
  // log of n!/((n-q)!(q-1)!) / sqrt(2 pi)
  const double log_norm = std::lgamma(nd + 1.0) - std::lgamma(nd - qd + 1.0) - std::lgamma(qd) -
                          0.5 * std::log(2.0 * std::numbers::pi);
  // Given the q-th largest value t, the other q - 1 top draws are iid
  // normals truncated to [t, inf), so only the density of t is needed.
  auto integrate = [&](const auto& g) {
    auto f = [&](double t) {
      const double lo = normal_cdf(t), hi = normal_sf(t);
      if (!(lo > 0.0) || !(hi > 0.0)) return 0.0;
      return g(t) * std::exp(log_norm + (nd - qd) * std::log(lo) + (qd - 1.0) * std::log(hi) -
                             0.5 * t * t);
    };
    double total = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
      const double a = lo_end + width * static_cast<double>(i);
      total += boost::math::quadrature::gauss<double, 30>::integrate(f, a, a + width);
    }
    return total;
  };
  auto truncated = [](double t, int k) {
    const double sf = normal_sf(t);
    return sf > 0.0 ? upper_moment(t, k) / sf : std::pow(t, k);
  };
  TopOrderMoments out;
  out.threshold = integrate([](double t) { return t; });
  out.tail_mean = integrate([&](double t) { return (t + (qd - 1.0) * truncated(t, 1)) / qd; });
  out.tail_second = integrate([&](double t) { return (t * t + (qd - 1.0) * truncated(t, 2)) / qd; });
  std::lock_guard lock(mu);
  cache.emplace(std::pair{n, q}, out);
  return out;
}

}  // namespace tailx
