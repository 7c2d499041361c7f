#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tailx/advantage_rules.hpp"
#include "tailx/bon_eval.hpp"

namespace tailx {

/// A context with a finite action set. Action a pays reward_mean[a] plus
/// N(0, reward_std[a]^2) noise; an all-zero std gives a fixed reward table.
struct ToyPrompt {
  std::vector<double> reward_mean;
  std::vector<double> reward_std;
  std::vector<double> reference_logits;

  std::size_t actions() const { return reward_mean.size(); }
};

struct ToyTask {
  std::vector<ToyPrompt> prompts;
};

void validate(const ToyTask& task);

/// Random task: `prompts` contexts with `actions` arms. Means are drawn from
/// N(0, 1); arm a gets noise std spread * a / (actions - 1), so high-variance
/// arms are the ones a best-of-N objective should favour. Reference logits
/// are zero (uniform reference policy).
ToyTask make_synthetic_task(std::size_t prompts, std::size_t actions, double spread, std::uint64_t seed);

struct TrainConfig {
  Rule rule = Rule::Tea;
  RuleParams params;
  std::size_t m = 16;        // rollouts per prompt
  std::size_t p_batch = 4;   // prompts per step
  double beta = 0.0;         // KL coefficient
  double gamma = 0.1;        // step size
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  std::vector<std::size_t> eval_n{1, 4, 16, 128};
  std::size_t eval_every = 0;  // 0: evaluate only before the first and after the last step
  std::size_t eval_samples = 1024;
};

void validate(const TrainConfig& config);

using Logits = std::vector<double>;

std::vector<double> softmax(std::span<const double> logits);

/// Gradient of log softmax(theta)[action]: one_hot(action) - softmax(theta).
std::vector<double> policy_logprob_grad(std::span<const double> theta, std::size_t action);

/// KL(softmax(theta) || softmax(theta_ref)).
double kl_divergence(std::span<const double> theta, std::span<const double> theta_ref);
/// Its gradient with respect to theta.
std::vector<double> kl_grad(std::span<const double> theta, std::span<const double> theta_ref);

/// (1/m) sum_i A_i grad log pi(a_i): the per-prompt ascent direction before
/// the KL term.
std::vector<double> advantage_gradient(std::span<const double> theta, std::span<const std::size_t> actions,
                                       std::span<const double> advantages);

/// Exact best-of-N value of a categorical policy over deterministic rewards.
double exact_policy_bon(std::span<const double> probs, std::span<const double> rewards, std::size_t n);

/// Grouped best-of-N curve from `samples_per_prompt` Monte Carlo draws.
BonCurve evaluate_policy_bon(const ToyTask& task, const std::vector<Logits>& theta,
                             std::span<const std::size_t> n_budgets, std::size_t samples_per_prompt,
                             std::uint64_t seed);

struct TrajectoryRow {
  std::size_t step = 0;
  std::vector<double> bon;  // one value per config.eval_n entry
  double kl = 0.0;          // mean KL to the reference over all prompts
};

struct TrainResult {
  std::vector<TrajectoryRow> trajectory;
  std::vector<Logits> theta;
};

/// Prompt-batch ascent theta <- theta + gamma * G_t with
/// G_t = (1/P) sum_p [(1/m) sum_i A_i S_i - beta grad KL].
TrainResult train(const ToyTask& task, const TrainConfig& config);

}  // namespace tailx
