/* C interface to the tailx library.
 *
 * Every function returns a tailx_status. On failure, tailx_last_error()
 * returns a message for the calling thread that stays valid until that
 * thread's next call. Output buffers are caller-owned and must hold the
 * documented number of elements. Handles are opaque and released with
 * their matching _destroy function, which accepts NULL.
 */
#ifndef TAILX_TAILX_H
#define TAILX_TAILX_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(TAILX_BUILDING_LIBRARY)
#define TAILX_API __declspec(dllexport)
#else
#define TAILX_API __declspec(dllimport)
#endif
#else
#define TAILX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tailx_status {
  TAILX_OK = 0,
  TAILX_E_DOMAIN = 1,     /* argument outside the operation's domain */
  TAILX_E_DEGENERATE = 2, /* input makes the quantity undefined */
  TAILX_E_RANK = 3,
  TAILX_E_COLLISION = 4, /* prefix sizes coincide */
  TAILX_E_INDEX = 5,
  TAILX_E_DIVERGED = 6,
  TAILX_E_ARGUMENT = 7, /* null pointer, unknown key or name, bad buffer */
  TAILX_E_INTERNAL = 8
} tailx_status;

typedef enum tailx_rule {
  TAILX_RULE_TEA_RAW = 0,
  TAILX_RULE_TEA,
  TAILX_RULE_PREFIX_TEA,
  TAILX_RULE_GRPO,
  TAILX_RULE_GRPO_Z,
  TAILX_RULE_BONMAX_MEAN,
  TAILX_RULE_BONMAX_SECOND,
  TAILX_RULE_BON_MEAN,
  TAILX_RULE_CHOW,
  TAILX_RULE_CAT_BON
} tailx_rule;

TAILX_API const char* tailx_version(void);
TAILX_API const char* tailx_last_error(void);
TAILX_API const char* tailx_status_name(tailx_status status);

/* ---- Gaussian tail math ---- */

typedef struct tailx_tail_constants {
  double alpha;
  size_t n;
  double z_alpha;
  double lambda_alpha;
  double delta_alpha;
  double c_n;
  double c_tilde_n;
} tailx_tail_constants;

typedef struct tailx_tail_vector {
  double r;
  double mu;
  double sigma;
  size_t q;
} tailx_tail_vector;

typedef struct tailx_qq_fit {
  double a;
  double b;
  double r_squared;
  double q_lo;
  double q_hi;
} tailx_qq_fit;

TAILX_API tailx_status tailx_tail_constants_compute(double alpha, size_t n, tailx_tail_constants* out);
TAILX_API tailx_status tailx_expected_gauss_max(size_t n, double* out);
TAILX_API tailx_status tailx_predict_vn(const tailx_tail_vector* tail, const tailx_tail_constants* constants,
                                        double* out);
TAILX_API tailx_status tailx_gaussian_population_tail(double mean, double sd,
                                                      const tailx_tail_constants* constants,
                                                      tailx_tail_vector* out);
/* grid_points 0 selects the default of 20. */
TAILX_API tailx_status tailx_qq_tail_fit(const double* samples, size_t count, double q_lo, double q_hi,
                                         size_t grid_points, tailx_qq_fit* out);

/* ---- Tail statistics ---- */

TAILX_API tailx_status tailx_tail_count(double alpha, size_t m, size_t* out);
TAILX_API tailx_status tailx_empirical_tail_vector(const double* rewards, size_t m, double alpha,
                                                   double eps_sigma, tailx_tail_vector* out);

/* ---- Prefix schemes ---- */

typedef struct tailx_scheme tailx_scheme;

TAILX_API tailx_status tailx_cancellation_weights(size_t m, const size_t* sizes, size_t j_count, size_t k,
                                                  double* weights_out);
TAILX_API tailx_status tailx_scheme_practical(size_t m, size_t k, size_t j_count, tailx_scheme** out);
TAILX_API tailx_status tailx_scheme_theory(size_t n, size_t k, size_t j_count, double alpha,
                                           tailx_scheme** out);
TAILX_API tailx_status tailx_scheme_custom(size_t m, const size_t* sizes, size_t j_count, size_t k,
                                           tailx_scheme** out);
TAILX_API tailx_status tailx_scheme_info(const tailx_scheme* scheme, size_t* m, size_t* k, size_t* j_count);
/* Each non-null buffer receives j_count entries. */
TAILX_API tailx_status tailx_scheme_get(const tailx_scheme* scheme, size_t* sizes, double* ratios,
                                        double* weights);
TAILX_API void tailx_scheme_destroy(tailx_scheme* scheme);

/* ---- Advantage rules ---- */

typedef struct tailx_params tailx_params;

TAILX_API tailx_status tailx_params_create(tailx_params** out);
TAILX_API tailx_status tailx_params_clone(const tailx_params* params, tailx_params** out);
/* Keys: alpha, n_target, eps_sigma, eps_norm, k, j_count, bon_k, n_sel,
 * m_corr, lambda_nsel, cat_n_target, seed. Values are decimal text. */
TAILX_API tailx_status tailx_params_set(tailx_params* params, const char* key, const char* value);
/* Writes the value of `key` as text; `needed` receives the length including
 * the terminator. An unset optional yields an empty string. */
TAILX_API tailx_status tailx_params_get(const tailx_params* params, const char* key, char* buf, size_t cap,
                                        size_t* needed);
TAILX_API tailx_status tailx_params_digest(const tailx_params* params, char* buf, size_t cap, size_t* needed);
TAILX_API void tailx_params_destroy(tailx_params* params);

TAILX_API tailx_status tailx_rule_from_name(const char* name, tailx_rule* out);
TAILX_API const char* tailx_rule_name(tailx_rule rule);

/* `out` receives m advantages. `params` may be NULL for defaults. */
TAILX_API tailx_status tailx_advantages(tailx_rule rule, const double* rewards, size_t m,
                                        const tailx_params* params, double* out);
TAILX_API tailx_status tailx_tail_shaped_reward(const tailx_tail_vector* eta, double u, double c_tilde,
                                                double* out);

/* ---- Best-of-N oracle and evaluation ---- */

typedef struct tailx_bootstrap {
  double delta_mean;
  double ci_lo;
  double ci_hi;
} tailx_bootstrap;

typedef struct tailx_win_tie_loss {
  double win;
  double tie;
  double loss;
} tailx_win_tie_loss;

/* `probs` may be NULL for a uniform pool over `values`. */
TAILX_API tailx_status tailx_expected_max(const double* values, const double* probs, size_t count, size_t n,
                                          double* out);
/* `out` receives one advantage per entry of `values` (uniform pool). */
TAILX_API tailx_status tailx_oracle_advantage(const double* values, size_t count, size_t n, double* out);
TAILX_API tailx_status tailx_grouped_bon(const double* samples, size_t count, size_t budget, double* out);
TAILX_API tailx_status tailx_paired_bootstrap(const double* a, const double* b, size_t prompts,
                                              size_t resamples, uint64_t seed, tailx_bootstrap* out);
TAILX_API tailx_status tailx_win_tie_loss_compute(const double* a, const double* b, size_t prompts,
                                                  double tol, tailx_win_tie_loss* out);
/* `samples` is prompts x per_prompt, row-major. */
TAILX_API tailx_status tailx_topk_validation_score(const double* samples, size_t prompts, size_t per_prompt,
                                                   size_t k, double* out);
/* `scores` is m x d, row-major. */
TAILX_API tailx_status tailx_gradient_alignment(const double* advantages, const double* scores, size_t m,
                                                size_t d, const double* oracle, double* out);

/* ---- Synthetic laboratory ---- */

typedef struct tailx_synth_spec {
  double alpha;
  size_t n_target;
  const double* score_thresholds;
  size_t dim;
} tailx_synth_spec;

typedef struct tailx_bias_variance {
  size_t m;
  double bias_norm;
  double variance;
  double direct_bias_norm;
  double mse_p1;
  double mse_p2048;
  double mse_p65536;
  size_t replications;
  uint64_t seed;
} tailx_bias_variance;

typedef struct tailx_top_order_moments {
  double threshold;
  double tail_mean;
  double tail_second;
} tailx_top_order_moments;

/* `out` receives spec->dim entries. */
TAILX_API tailx_status tailx_true_gradient(const tailx_synth_spec* spec, double* out);
TAILX_API tailx_status tailx_top_order_moments_compute(size_t n, size_t q, tailx_top_order_moments* out);
/* estimator: "tea", "oracle", "prefix-tea:K:J", "prefix-tea-same:K:J" or
 * "rule:<name>". replications 0 selects the default for m. bias_vec and
 * bias_se may be NULL, otherwise they receive spec->dim entries. */
TAILX_API tailx_status tailx_bias_variance_run(const tailx_synth_spec* spec, const char* estimator,
                                               const tailx_params* params, size_t m, size_t replications,
                                               uint64_t seed, tailx_bias_variance* out, double* bias_vec,
                                               double* bias_se);

/* ---- Toy trainer ---- */

typedef struct tailx_task tailx_task;
typedef struct tailx_trajectory tailx_trajectory;

typedef struct tailx_train_config {
  tailx_rule rule;
  size_t m;
  size_t p_batch;
  double beta;
  double gamma;
  size_t steps;
  uint64_t seed;
  const size_t* eval_n;
  size_t eval_n_count;
  size_t eval_every;
  size_t eval_samples;
} tailx_train_config;

/* Fills the defaults used by the library. */
TAILX_API void tailx_train_config_default(tailx_train_config* config);

TAILX_API tailx_status tailx_task_synthetic(size_t prompts, size_t actions, double spread, uint64_t seed,
                                            tailx_task** out);
/* Arrays are prompts x actions, row-major. `reward_std` may be NULL. */
TAILX_API tailx_status tailx_task_create(size_t prompts, size_t actions, const double* reward_mean,
                                         const double* reward_std, const double* reference_logits,
                                         tailx_task** out);
TAILX_API tailx_status tailx_task_shape(const tailx_task* task, size_t* prompts, size_t* actions);
TAILX_API void tailx_task_destroy(tailx_task* task);

TAILX_API tailx_status tailx_train(const tailx_task* task, const tailx_train_config* config,
                                   const tailx_params* params, tailx_trajectory** out);
TAILX_API tailx_status tailx_trajectory_rows(const tailx_trajectory* traj, size_t* rows, size_t* budgets);
/* `bon` receives `budgets` entries; any output may be NULL. */
TAILX_API tailx_status tailx_trajectory_row(const tailx_trajectory* traj, size_t index, size_t* step,
                                            double* bon, double* kl);
/* `out` receives the final logits of one prompt. */
TAILX_API tailx_status tailx_trajectory_theta(const tailx_trajectory* traj, size_t prompt, double* out);
TAILX_API void tailx_trajectory_destroy(tailx_trajectory* traj);

TAILX_API tailx_status tailx_policy_logprob_grad(const double* theta, size_t actions, size_t action,
                                                 double* out);
TAILX_API tailx_status tailx_kl_divergence(const double* theta, const double* theta_ref, size_t actions,
                                           double* out);
TAILX_API tailx_status tailx_kl_grad(const double* theta, const double* theta_ref, size_t actions,
                                     double* out);
TAILX_API tailx_status tailx_exact_policy_bon(const double* probs, const double* rewards, size_t actions,
                                              size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif
