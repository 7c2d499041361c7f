#include "tailx/tailx.h"

#include <charconv>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <system_error>
#include <vector>

#include "tailx/advantage_rules.hpp"
#include "tailx/bon_eval.hpp"
#include "tailx/error.hpp"
#include "tailx/gauss_tail.hpp"
#include "tailx/prefix_scheme.hpp"
#include "tailx/synth_lab.hpp"
#include "tailx/tail_stats.hpp"
#include "tailx/toy_trainer.hpp"

struct tailx_scheme {
  tailx::PrefixScheme scheme;
};

struct tailx_params {
  tailx::RuleParams params;
};

struct tailx_task {
  tailx::ToyTask task;
};

struct tailx_trajectory {
  tailx::TrainResult result;
  std::size_t budgets = 0;
};

namespace {

thread_local std::string last_error;

class ArgumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

tailx_status to_status(tailx::ErrorKind kind) {
  switch (kind) {
    case tailx::ErrorKind::Domain: return TAILX_E_DOMAIN;
    case tailx::ErrorKind::Degenerate: return TAILX_E_DEGENERATE;
    case tailx::ErrorKind::Rank: return TAILX_E_RANK;
    case tailx::ErrorKind::Collision: return TAILX_E_COLLISION;
    case tailx::ErrorKind::Index: return TAILX_E_INDEX;
    case tailx::ErrorKind::Diverged: return TAILX_E_DIVERGED;
  }
  return TAILX_E_INTERNAL;
}

// Runs `f`, translating exceptions into status codes.
template <class F>
tailx_status guarded(F&& f) noexcept {
  try {
    f();
    last_error.clear();
    return TAILX_OK;
  } catch (const tailx::Error& e) {
    last_error = e.what();
    return to_status(e.kind());
  } catch (const ArgumentError& e) {
    last_error = e.what();
    return TAILX_E_ARGUMENT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return TAILX_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return TAILX_E_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return TAILX_E_INTERNAL;
  }
}

template <class T>
T* need(T* p, const char* what) {
  if (p == nullptr) throw ArgumentError(std::string(what) + " is null");
  return p;
}

template <class T>
std::span<const T> view(const T* p, std::size_t n, const char* what) {
  if (n == 0) return {};
  return {need(p, what), n};
}

tailx::Rule to_rule(tailx_rule r) {
  const auto rules = tailx::all_rules();
  const auto i = static_cast<std::size_t>(r);
  if (i >= rules.size()) throw ArgumentError("unknown rule id");
  return rules[i];
}

tailx_rule from_rule(tailx::Rule r) {
  const auto rules = tailx::all_rules();
  for (std::size_t i = 0; i < rules.size(); ++i)
    if (rules[i] == r) return static_cast<tailx_rule>(i);
  throw ArgumentError("unmapped rule");
}

tailx::TailVector to_cpp(const tailx_tail_vector& t) { return {t.r, t.mu, t.sigma, t.q}; }
tailx_tail_vector to_c(const tailx::TailVector& t) { return {t.r, t.mu, t.sigma, t.q}; }

tailx::TailConstants to_cpp(const tailx_tail_constants& c) {
  return {c.alpha, c.n, c.z_alpha, c.lambda_alpha, c.delta_alpha, c.c_n, c.c_tilde_n};
}

tailx::SyntheticSpec to_cpp(const tailx_synth_spec& s) {
  tailx::SyntheticSpec spec;
  spec.alpha = s.alpha;
  spec.n_target = s.n_target;
  const auto t = view(s.score_thresholds, s.dim, "score_thresholds");
  spec.score_thresholds.assign(t.begin(), t.end());
  return spec;
}

double parse_double(const char* key, const char* text) {
  double v = 0.0;
  const char* end = text + std::strlen(text);
  const auto [ptr, ec] = std::from_chars(text, end, v);
  if (ec != std::errc() || ptr != end) throw ArgumentError(std::string("bad number for ") + key + ": " + text);
  return v;
}

template <class U>
U parse_unsigned(const char* key, const char* text) {
  U v = 0;
  const char* end = text + std::strlen(text);
  const auto [ptr, ec] = std::from_chars(text, end, v);
  if (ec != std::errc() || ptr != end)
    throw ArgumentError(std::string("bad non-negative integer for ") + key + ": " + text);
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const std::string& s, char* buf, std::size_t cap, std::size_t* needed) {
  if (needed != nullptr) *needed = s.size() + 1;
  if (buf == nullptr) return;
  if (cap < s.size() + 1) throw ArgumentError("buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
}

}  // namespace

extern "C" {

const char* tailx_version(void) { return TAILX_VERSION_STRING; }

const char* tailx_last_error(void) { return last_error.c_str(); }

const char* tailx_status_name(tailx_status status) {
  switch (status) {
    case TAILX_OK: return "ok";
    case TAILX_E_DOMAIN: return "domain";
    case TAILX_E_DEGENERATE: return "degenerate";
    case TAILX_E_RANK: return "rank";
    case TAILX_E_COLLISION: return "collision";
    case TAILX_E_INDEX: return "index";
    case TAILX_E_DIVERGED: return "diverged";
    case TAILX_E_ARGUMENT: return "argument";
    case TAILX_E_INTERNAL: return "internal";
  }
  return "unknown";
}

tailx_status tailx_tail_constants_compute(double alpha, size_t n, tailx_tail_constants* out) {
  return guarded([&] {
    need(out, "out");
    const auto c = tailx::tail_constants(alpha, n);
    *out = {c.alpha, c.n, c.z_alpha, c.lambda_alpha, c.delta_alpha, c.c_n, c.c_tilde_n};
  });
}

tailx_status tailx_expected_gauss_max(size_t n, double* out) {
  return guarded([&] { *need(out, "out") = tailx::expected_gauss_max(n); });
}

tailx_status tailx_predict_vn(const tailx_tail_vector* tail, const tailx_tail_constants* constants,
                              double* out) {
  return guarded([&] {
    *need(out, "out") = tailx::predict_vn(to_cpp(*need(tail, "tail")), to_cpp(*need(constants, "constants")));
  });
}

tailx_status tailx_gaussian_population_tail(double mean, double sd, const tailx_tail_constants* constants,
                                            tailx_tail_vector* out) {
  return guarded([&] {
    *need(out, "out") = to_c(tailx::gaussian_population_tail(mean, sd, to_cpp(*need(constants, "constants"))));
  });
}

tailx_status tailx_qq_tail_fit(const double* samples, size_t count, double q_lo, double q_hi,
                               size_t grid_points, tailx_qq_fit* out) {
  return guarded([&] {
    need(out, "out");
    const auto f = tailx::qq_tail_fit(view(samples, count, "samples"), q_lo, q_hi,
                                      grid_points == 0 ? tailx::kDefaultQqGridPoints : grid_points);
    *out = {f.a, f.b, f.r_squared, f.q_lo, f.q_hi};
  });
}

tailx_status tailx_tail_count(double alpha, size_t m, size_t* out) {
  return guarded([&] { *need(out, "out") = tailx::tail_count(alpha, m); });
}

tailx_status tailx_empirical_tail_vector(const double* rewards, size_t m, double alpha, double eps_sigma,
                                         tailx_tail_vector* out) {
  return guarded([&] {
    *need(out, "out") = to_c(tailx::empirical_tail_vector(view(rewards, m, "rewards"), alpha, eps_sigma));
  });
}

tailx_status tailx_cancellation_weights(size_t m, const size_t* sizes, size_t j_count, size_t k,
                                        double* weights_out) {
  return guarded([&] {
    need(weights_out, "weights_out");
    const auto w = tailx::cancellation_weights(m, view(sizes, j_count, "sizes"), k);
    std::copy(w.begin(), w.end(), weights_out);
  });
}

tailx_status tailx_scheme_practical(size_t m, size_t k, size_t j_count, tailx_scheme** out) {
  return guarded([&] {
    need(out, "out");
    *out = new tailx_scheme{tailx::practical_scheme(m, k, j_count)};
  });
}

tailx_status tailx_scheme_theory(size_t n, size_t k, size_t j_count, double alpha, tailx_scheme** out) {
  return guarded([&] {
    need(out, "out");
    *out = new tailx_scheme{tailx::theory_scheme(n, k, j_count, tailx::rationalize(alpha))};
  });
}

tailx_status tailx_scheme_custom(size_t m, const size_t* sizes, size_t j_count, size_t k, tailx_scheme** out) {
  return guarded([&] {
    need(out, "out");
    const auto s = view(sizes, j_count, "sizes");
    *out = new tailx_scheme{tailx::make_scheme(m, {s.begin(), s.end()}, k)};
  });
}

tailx_status tailx_scheme_info(const tailx_scheme* scheme, size_t* m, size_t* k, size_t* j_count) {
  return guarded([&] {
    const auto& s = need(scheme, "scheme")->scheme;
    if (m != nullptr) *m = s.m;
    if (k != nullptr) *k = s.k;
    if (j_count != nullptr) *j_count = s.j_count();
  });
}

tailx_status tailx_scheme_get(const tailx_scheme* scheme, size_t* sizes, double* ratios, double* weights) {
  return guarded([&] {
    const auto& s = need(scheme, "scheme")->scheme;
    if (sizes != nullptr) std::copy(s.sizes.begin(), s.sizes.end(), sizes);
    if (ratios != nullptr) std::copy(s.ratios.begin(), s.ratios.end(), ratios);
    if (weights != nullptr) std::copy(s.weights.begin(), s.weights.end(), weights);
  });
}

void tailx_scheme_destroy(tailx_scheme* scheme) { delete scheme; }

tailx_status tailx_params_create(tailx_params** out) {
  return guarded([&] { *need(out, "out") = new tailx_params{}; });
}

tailx_status tailx_params_clone(const tailx_params* params, tailx_params** out) {
  return guarded([&] { *need(out, "out") = new tailx_params{need(params, "params")->params}; });
}

tailx_status tailx_params_set(tailx_params* params, const char* key, const char* value) {
  return guarded([&] {
    auto& p = need(params, "params")->params;
    const std::string k = need(key, "key");
    need(value, "value");
    if (k == "alpha") p.alpha = parse_double(key, value);
    else if (k == "n_target") p.n_target = parse_unsigned<std::size_t>(key, value);
    else if (k == "eps_sigma") p.eps_sigma = parse_double(key, value);
    else if (k == "eps_norm") p.eps_norm = parse_double(key, value);
    else if (k == "k") p.k = parse_unsigned<std::size_t>(key, value);
    else if (k == "j_count") p.j_count = parse_unsigned<std::size_t>(key, value);
    else if (k == "bon_k") p.bon_k = parse_unsigned<std::size_t>(key, value);
    else if (k == "n_sel") p.n_sel = parse_unsigned<std::size_t>(key, value);
    else if (k == "m_corr") p.m_corr = parse_unsigned<std::size_t>(key, value);
    else if (k == "lambda_nsel") {
      if (*value == '\0' || std::strcmp(value, "auto") == 0) p.lambda_nsel.reset();
      else p.lambda_nsel = parse_double(key, value);
    } else if (k == "cat_n_target") p.cat_n_target = parse_unsigned<std::size_t>(key, value);
    else if (k == "seed") p.seed = parse_unsigned<std::uint64_t>(key, value);
    else throw ArgumentError("unknown parameter: " + k);
  });
}

tailx_status tailx_params_get(const tailx_params* params, const char* key, char* buf, size_t cap,
                              size_t* needed) {
  return guarded([&] {
    const auto& p = need(params, "params")->params;
    const std::string k = need(key, "key");
    std::string v;
    if (k == "alpha") v = format_double(p.alpha);
    else if (k == "n_target") v = std::to_string(p.n_target);
    else if (k == "eps_sigma") v = format_double(p.eps_sigma);
    else if (k == "eps_norm") v = format_double(p.eps_norm);
    else if (k == "k") v = std::to_string(p.k);
    else if (k == "j_count") v = std::to_string(p.j_count);
    else if (k == "bon_k") v = std::to_string(p.bon_k);
    else if (k == "n_sel") v = std::to_string(p.n_sel);
    else if (k == "m_corr") v = std::to_string(p.m_corr);
    else if (k == "lambda_nsel") v = p.lambda_nsel ? format_double(*p.lambda_nsel) : "";
    else if (k == "cat_n_target") v = std::to_string(p.cat_n_target);
    else if (k == "seed") v = std::to_string(p.seed);
    else throw ArgumentError("unknown parameter: " + k);
    write_text(v, buf, cap, needed);
  });
}

tailx_status tailx_params_digest(const tailx_params* params, char* buf, size_t cap, size_t* needed) {
  return guarded([&] { write_text(tailx::params_digest(need(params, "params")->params), buf, cap, needed); });
}

void tailx_params_destroy(tailx_params* params) { delete params; }

tailx_status tailx_rule_from_name(const char* name, tailx_rule* out) {
  return guarded([&] {
    need(out, "out");
    const auto r = tailx::parse_rule(need(name, "name"));
    if (!r) throw ArgumentError(std::string("unknown rule: ") + name);
    *out = from_rule(*r);
  });
}

const char* tailx_rule_name(tailx_rule rule) {
  const auto rules = tailx::all_rules();
  const auto i = static_cast<std::size_t>(rule);
  if (i >= rules.size()) return "unknown";
  return tailx::rule_name(rules[i]).data();
}

tailx_status tailx_advantages(tailx_rule rule, const double* rewards, size_t m, const tailx_params* params,
                              double* out) {
  return guarded([&] {
    need(out, "out");
    const tailx::RuleParams defaults;
    const auto adv = tailx::compute_advantages(to_rule(rule), view(rewards, m, "rewards"),
                                               params != nullptr ? params->params : defaults);
    std::copy(adv.values.begin(), adv.values.end(), out);
  });
}

tailx_status tailx_tail_shaped_reward(const tailx_tail_vector* eta, double u, double c_tilde, double* out) {
  return guarded([&] { *need(out, "out") = tailx::tail_shaped_reward(to_cpp(*need(eta, "eta")), u, c_tilde); });
}

tailx_status tailx_expected_max(const double* values, const double* probs, size_t count, size_t n,
                                double* out) {
  return guarded([&] {
    need(out, "out");
    const auto v = view(values, count, "values");
    if (probs == nullptr) {
      *out = tailx::expected_max(tailx::EmpiricalPool(v), n);
    } else {
      *out = tailx::expected_max(tailx::EmpiricalPool(v, {probs, count}), n);
    }
  });
}

tailx_status tailx_oracle_advantage(const double* values, size_t count, size_t n, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto a = tailx::oracle_advantage(tailx::EmpiricalPool(view(values, count, "values")), n);
    std::copy(a.begin(), a.end(), out);
  });
}

tailx_status tailx_grouped_bon(const double* samples, size_t count, size_t budget, double* out) {
  return guarded([&] { *need(out, "out") = tailx::grouped_bon(view(samples, count, "samples"), budget); });
}

tailx_status tailx_paired_bootstrap(const double* a, const double* b, size_t prompts, size_t resamples,
                                    uint64_t seed, tailx_bootstrap* out) {
  return guarded([&] {
    need(out, "out");
    const auto d = tailx::paired_bootstrap_delta(view(a, prompts, "a"), view(b, prompts, "b"),
                                                 resamples == 0 ? tailx::kDefaultBootstrapResamples : resamples,
                                                 seed);
    *out = {d.delta_mean, d.ci_lo, d.ci_hi};
  });
}

tailx_status tailx_win_tie_loss_compute(const double* a, const double* b, size_t prompts, double tol,
                                        tailx_win_tie_loss* out) {
  return guarded([&] {
    need(out, "out");
    const auto w = tailx::win_tie_loss(view(a, prompts, "a"), view(b, prompts, "b"), tol);
    *out = {w.win, w.tie, w.loss};
  });
}

tailx_status tailx_topk_validation_score(const double* samples, size_t prompts, size_t per_prompt, size_t k,
                                         double* out) {
  return guarded([&] {
    need(out, "out");
    const auto flat = view(samples, prompts * per_prompt, "samples");
    std::vector<std::vector<double>> rows(prompts);
    for (std::size_t i = 0; i < prompts; ++i)
      rows[i].assign(flat.begin() + static_cast<std::ptrdiff_t>(i * per_prompt),
                     flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * per_prompt));
    *out = tailx::topk_validation_score(rows, k);
  });
}

tailx_status tailx_gradient_alignment(const double* advantages, const double* scores, size_t m, size_t d,
                                      const double* oracle, double* out) {
  return guarded([&] {
    need(out, "out");
    tailx::ScoreMatrix s(m, d);
    const auto flat = view(scores, m * d, "scores");
    std::copy(flat.begin(), flat.end(), s.data.begin());
    *out = tailx::gradient_alignment(view(advantages, m, "advantages"), s, view(oracle, m, "oracle"));
  });
}

tailx_status tailx_true_gradient(const tailx_synth_spec* spec, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto g = tailx::true_gradient_closed_form(to_cpp(*need(spec, "spec")));
    std::copy(g.begin(), g.end(), out);
  });
}

tailx_status tailx_top_order_moments_compute(size_t n, size_t q, tailx_top_order_moments* out) {
  return guarded([&] {
    need(out, "out");
    const auto m = tailx::gaussian_top_order_moments(n, q);
    *out = {m.threshold, m.tail_mean, m.tail_second};
  });
}

tailx_status tailx_bias_variance_run(const tailx_synth_spec* spec, const char* estimator,
                                     const tailx_params* params, size_t m, size_t replications, uint64_t seed,
                                     tailx_bias_variance* out, double* bias_vec, double* bias_se) {
  return guarded([&] {
    need(out, "out");
    const auto s = to_cpp(*need(spec, "spec"));
    const tailx::RuleParams base = params != nullptr ? params->params : tailx::RuleParams{};
    const auto est = tailx::parse_lab_estimator(need(estimator, "estimator"), base);
    const auto row = tailx::estimator_bias_variance(est, s, m, replications, seed);
    *out = {row.m,        row.bias_norm, row.variance,        row.direct_bias_norm, row.mse(1),
            row.mse(2048), row.mse(65536), row.replications, row.seed};
    if (bias_vec != nullptr) std::copy(row.bias_vec.begin(), row.bias_vec.end(), bias_vec);
    if (bias_se != nullptr) std::copy(row.bias_se.begin(), row.bias_se.end(), bias_se);
  });
}

void tailx_train_config_default(tailx_train_config* config) {
  if (config == nullptr) return;
  static const tailx::TrainConfig defaults;
  config->rule = from_rule(defaults.rule);
  config->m = defaults.m;
  config->p_batch = defaults.p_batch;
  config->beta = defaults.beta;
  config->gamma = defaults.gamma;
  config->steps = defaults.steps;
  config->seed = defaults.seed;
  config->eval_n = defaults.eval_n.data();
  config->eval_n_count = defaults.eval_n.size();
  config->eval_every = defaults.eval_every;
  config->eval_samples = defaults.eval_samples;
}

tailx_status tailx_task_synthetic(size_t prompts, size_t actions, double spread, uint64_t seed,
                                  tailx_task** out) {
  return guarded([&] {
    need(out, "out");
    *out = new tailx_task{tailx::make_synthetic_task(prompts, actions, spread, seed)};
  });
}

tailx_status tailx_task_create(size_t prompts, size_t actions, const double* reward_mean,
                               const double* reward_std, const double* reference_logits, tailx_task** out) {
  return guarded([&] {
    need(out, "out");
    const std::size_t total = prompts * actions;
    const auto mean = view(reward_mean, total, "reward_mean");
    const auto ref = view(reference_logits, total, "reference_logits");
    tailx::ToyTask task;
    for (std::size_t p = 0; p < prompts; ++p) {
      tailx::ToyPrompt prompt;
      const auto lo = static_cast<std::ptrdiff_t>(p * actions);
      const auto hi = static_cast<std::ptrdiff_t>((p + 1) * actions);
      prompt.reward_mean.assign(mean.begin() + lo, mean.begin() + hi);
      prompt.reference_logits.assign(ref.begin() + lo, ref.begin() + hi);
      if (reward_std != nullptr)
        prompt.reward_std.assign(reward_std + lo, reward_std + hi);
      else
        prompt.reward_std.assign(actions, 0.0);
      task.prompts.push_back(std::move(prompt));
    }
    tailx::validate(task);
    *out = new tailx_task{std::move(task)};
  });
}

tailx_status tailx_task_shape(const tailx_task* task, size_t* prompts, size_t* actions) {
  return guarded([&] {
    const auto& t = need(task, "task")->task;
    if (prompts != nullptr) *prompts = t.prompts.size();
    if (actions != nullptr) *actions = t.prompts.empty() ? 0 : t.prompts.front().actions();
  });
}

void tailx_task_destroy(tailx_task* task) { delete task; }

tailx_status tailx_train(const tailx_task* task, const tailx_train_config* config, const tailx_params* params,
                         tailx_trajectory** out) {
  return guarded([&] {
    need(out, "out");
    const auto& c = *need(config, "config");
    tailx::TrainConfig cfg;
    cfg.rule = to_rule(c.rule);
    if (params != nullptr) cfg.params = params->params;
    cfg.m = c.m;
    cfg.p_batch = c.p_batch;
    cfg.beta = c.beta;
    cfg.gamma = c.gamma;
    cfg.steps = c.steps;
    cfg.seed = c.seed;
    const auto n = view(c.eval_n, c.eval_n_count, "eval_n");
    cfg.eval_n.assign(n.begin(), n.end());
    cfg.eval_every = c.eval_every;
    cfg.eval_samples = c.eval_samples;
    auto result = tailx::train(need(task, "task")->task, cfg);
    *out = new tailx_trajectory{std::move(result), cfg.eval_n.size()};
  });
}

tailx_status tailx_trajectory_rows(const tailx_trajectory* traj, size_t* rows, size_t* budgets) {
  return guarded([&] {
    need(traj, "trajectory");
    if (rows != nullptr) *rows = traj->result.trajectory.size();
    if (budgets != nullptr) *budgets = traj->budgets;
  });
}

tailx_status tailx_trajectory_row(const tailx_trajectory* traj, size_t index, size_t* step, double* bon,
                                  double* kl) {
  return guarded([&] {
    const auto& rows = need(traj, "trajectory")->result.trajectory;
    tailx::require(index < rows.size(), tailx::ErrorKind::Index, "trajectory row out of range");
    const auto& row = rows[index];
    if (step != nullptr) *step = row.step;
    if (bon != nullptr) std::copy(row.bon.begin(), row.bon.end(), bon);
    if (kl != nullptr) *kl = row.kl;
  });
}

tailx_status tailx_trajectory_theta(const tailx_trajectory* traj, size_t prompt, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto& theta = need(traj, "trajectory")->result.theta;
    tailx::require(prompt < theta.size(), tailx::ErrorKind::Index, "prompt out of range");
    std::copy(theta[prompt].begin(), theta[prompt].end(), out);
  });
}

void tailx_trajectory_destroy(tailx_trajectory* traj) { delete traj; }

tailx_status tailx_policy_logprob_grad(const double* theta, size_t actions, size_t action, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto g = tailx::policy_logprob_grad(view(theta, actions, "theta"), action);
    std::copy(g.begin(), g.end(), out);
  });
}

tailx_status tailx_kl_divergence(const double* theta, const double* theta_ref, size_t actions, double* out) {
  return guarded([&] {
    *need(out, "out") = tailx::kl_divergence(view(theta, actions, "theta"), view(theta_ref, actions, "theta_ref"));
  });
}

tailx_status tailx_kl_grad(const double* theta, const double* theta_ref, size_t actions, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto g = tailx::kl_grad(view(theta, actions, "theta"), view(theta_ref, actions, "theta_ref"));
    std::copy(g.begin(), g.end(), out);
  });
}

tailx_status tailx_exact_policy_bon(const double* probs, const double* rewards, size_t actions, size_t n,
                                    double* out) {
  return guarded([&] {
    *need(out, "out") =
        tailx::exact_policy_bon(view(probs, actions, "probs"), view(rewards, actions, "rewards"), n);
  });
}

}  // extern "C"
