#include "tailx/toy_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tailx/error.hpp"
#include "tailx/rng.hpp"

namespace tailx {

namespace {

constexpr double kLogitLimit = 1e4;

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return a;
  }
  return probs.size() - 1;
}

double draw_reward(const ToyPrompt& p, std::size_t action, Rng& rng) {
  const double sd = p.reward_std.empty() ? 0.0 : p.reward_std[action];
  if (sd == 0.0) return p.reward_mean[action];
  std::normal_distribution<double> noise(0.0, sd);
  return p.reward_mean[action] + noise(rng);
}

double mean_kl(const ToyTask& task, const std::vector<Logits>& theta) {
  double s = 0.0;
  for (std::size_t p = 0; p < task.prompts.size(); ++p)
    s += kl_divergence(theta[p], task.prompts[p].reference_logits);
  return s / static_cast<double>(task.prompts.size());
}

}  // namespace

void validate(const ToyTask& task) {
  require(!task.prompts.empty(), ErrorKind::Domain, "toy task needs at least one prompt");
  for (const auto& p : task.prompts) {
    require(p.actions() >= 4, ErrorKind::Domain, "toy prompts need at least 4 actions");
    require(p.reference_logits.size() == p.actions(), ErrorKind::Domain,
            "reference logits must match the action count");
    require(p.reward_std.empty() || p.reward_std.size() == p.actions(), ErrorKind::Domain,
            "reward noise must match the action count");
    for (double r : p.reward_mean) require(std::isfinite(r), ErrorKind::Domain, "non-finite reward");
    for (double s : p.reward_std) require(s >= 0.0 && std::isfinite(s), ErrorKind::Domain, "bad reward noise");
  }
}

void validate(const TrainConfig& c) {
  require(c.m >= 2, ErrorKind::Domain, "need at least 2 rollouts per prompt");
  require(c.p_batch >= 1, ErrorKind::Domain, "prompt batch must be >= 1");
  require(c.beta >= 0.0, ErrorKind::Domain, "beta must be >= 0");
  require(c.gamma >= 0.0, ErrorKind::Domain, "gamma must be >= 0");
  require(!c.eval_n.empty(), ErrorKind::Domain, "need at least one evaluation budget");
  for (std::size_t n : c.eval_n)
    require(n >= 1 && c.eval_samples % n == 0, ErrorKind::Domain,
            "evaluation budgets must divide eval_samples");
}

ToyTask make_synthetic_task(std::size_t prompts, std::size_t actions, double spread, std::uint64_t seed) {
  require(prompts >= 1 && actions >= 4, ErrorKind::Domain, "need >= 1 prompt and >= 4 actions");
  ToyTask task;
  Rng rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t p = 0; p < prompts; ++p) {
    ToyPrompt prompt;
    for (std::size_t a = 0; a < actions; ++a) {
      prompt.reward_mean.push_back(normal(rng));
      prompt.reward_std.push_back(spread * static_cast<double>(a) / static_cast<double>(actions - 1));
    }
    prompt.reference_logits.assign(actions, 0.0);
    task.prompts.push_back(std::move(prompt));
  }
  return task;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) s += p[i] = std::exp(logits[i] - mx);
  for (double& v : p) v /= s;
  return p;
}

std::vector<double> policy_logprob_grad(std::span<const double> theta, std::size_t action) {
  require(action < theta.size(), ErrorKind::Index, "action index out of range");
  auto g = softmax(theta);
  for (double& v : g) v = -v;
  g[action] += 1.0;
  return g;
}

double kl_divergence(std::span<const double> theta, std::span<const double> theta_ref) {
  require(theta.size() == theta_ref.size(), ErrorKind::Domain, "logit vectors differ in length");
  const auto p = softmax(theta);
  const auto q = softmax(theta_ref);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  return std::max(kl, 0.0);
}

std::vector<double> kl_grad(std::span<const double> theta, std::span<const double> theta_ref) {
  require(theta.size() == theta_ref.size(), ErrorKind::Domain, "logit vectors differ in length");
  const auto p = softmax(theta);
  const auto q = softmax(theta_ref);
  // d/dtheta_k sum_i p_i (log p_i - log q_i) = p_k (log p_k - log q_k - KL)
  std::vector<double> log_ratio(p.size(), 0.0);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) log_ratio[i] = std::log(p[i]) - std::log(q[i]);
    kl += p[i] * log_ratio[i];
  }
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) g[k] = p[k] * (log_ratio[k] - kl);
  return g;
}

std::vector<double> advantage_gradient(std::span<const double> theta, std::span<const std::size_t> actions,
                                       std::span<const double> advantages) {
  require(actions.size() == advantages.size() && !actions.empty(), ErrorKind::Domain,
          "need one advantage per sampled action");
  const auto probs = softmax(theta);
  std::vector<double> g(theta.size(), 0.0);
  const double inv_m = 1.0 / static_cast<double>(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    require(actions[i] < theta.size(), ErrorKind::Index, "action index out of range");
    if (advantages[i] == 0.0) continue;
    // score of action a is one_hot(a) - probs
    for (std::size_t k = 0; k < g.size(); ++k) g[k] -= inv_m * advantages[i] * probs[k];
    g[actions[i]] += inv_m * advantages[i];
  }
  return g;
}

double exact_policy_bon(std::span<const double> probs, std::span<const double> rewards, std::size_t n) {
  return expected_max(EmpiricalPool(rewards, probs), n);
}

BonCurve evaluate_policy_bon(const ToyTask& task, const std::vector<Logits>& theta,
                             std::span<const std::size_t> n_budgets, std::size_t samples_per_prompt,
                             std::uint64_t seed) {
  validate(task);
  require(theta.size() == task.prompts.size(), ErrorKind::Domain, "one logit vector per prompt required");
  for (std::size_t n : n_budgets)
    require(n >= 1 && samples_per_prompt % n == 0, ErrorKind::Domain,
            "budgets must divide samples_per_prompt");
  std::vector<std::vector<double>> samples(task.prompts.size());
  for (std::size_t p = 0; p < task.prompts.size(); ++p) {
    Rng rng(seed, p);
    const auto probs = softmax(theta[p]);
    samples[p].reserve(samples_per_prompt);
    for (std::size_t s = 0; s < samples_per_prompt; ++s)
      samples[p].push_back(draw_reward(task.prompts[p], sample_categorical(probs, rng), rng));
  }
  return grouped_bon_curve(samples, n_budgets);
}

TrainResult train(const ToyTask& task, const TrainConfig& config) {
  validate(task);
  validate(config);
  TrainResult result;
  for (const auto& p : task.prompts) result.theta.push_back(p.reference_logits);

  auto evaluate = [&](std::size_t step) {
    // Evaluation draws come from their own stream so that changing
    // eval_every does not perturb training.
    const auto curve = evaluate_policy_bon(task, result.theta, config.eval_n, config.eval_samples,
                                           derive_seed(config.seed ^ 0x5eedULL, step));
    result.trajectory.push_back({step, curve.means, mean_kl(task, result.theta)});
  };

  evaluate(0);
  const std::size_t prompts = task.prompts.size();
  const std::size_t batch = std::min(config.p_batch, prompts);
  std::vector<std::size_t> order(prompts);
  std::vector<double> rewards(config.m);
  std::vector<std::size_t> actions(config.m);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    Rng rng(config.seed, step);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < batch; ++i) std::swap(order[i], order[i + rng.below(prompts - i)]);

    std::vector<std::pair<std::size_t, std::vector<double>>> updates;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t p = order[b];
      const ToyPrompt& prompt = task.prompts[p];
      const Logits& theta = result.theta[p];
      const auto probs = softmax(theta);
      for (std::size_t i = 0; i < config.m; ++i) {
        actions[i] = sample_categorical(probs, rng);
        rewards[i] = draw_reward(prompt, actions[i], rng);
      }
      RuleParams params = config.params;
      params.seed = derive_seed(config.params.seed, step * prompts + p);
      const auto adv = compute_advantages(config.rule, rewards, params);

      auto g = advantage_gradient(theta, actions, adv.values);
      if (config.beta > 0.0) {
        const auto kg = kl_grad(theta, prompt.reference_logits);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] -= config.beta * kg[k];
      }
      updates.emplace_back(p, std::move(g));
    }
    if (config.gamma != 0.0) {
      const double scale = config.gamma / static_cast<double>(batch);
      for (const auto& [p, g] : updates) {
        for (std::size_t k = 0; k < g.size(); ++k) {
          result.theta[p][k] += scale * g[k];
          if (!(std::abs(result.theta[p][k]) <= kLogitLimit))
            fail(ErrorKind::Diverged, "logit magnitude exceeded 1e4; training diverged");
        }
      }
    }
    if ((config.eval_every && step % config.eval_every == 0) || step == config.steps) {
      if (result.trajectory.back().step != step) evaluate(step);
    }
  }
  return result;
}

}  // namespace tailx
