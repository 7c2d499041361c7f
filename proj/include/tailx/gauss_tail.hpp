#pragma once

#include <cstddef>
#include <span>

#include "tailx/tail_stats.hpp"

namespace tailx {

// Standard normal helpers.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_sf(double x);        // 1 - cdf, accurate in the upper tail
double normal_quantile(double p);  // inverse cdf on (0, 1)

/// Gaussian-tail constants for tail mass `alpha` and best-of-`n` budget.
///
/// z_alpha is the upper-alpha quantile, lambda_alpha = phi(z_alpha)/alpha the
/// hazard, delta_alpha the variance of a standard normal truncated to
/// [z_alpha, inf). c_n is E[max of n standard normals] and c_tilde_n expresses
/// it in units of the tail scale: (c_n - lambda_alpha) / sqrt(delta_alpha).
struct TailConstants {
  double alpha = 0.0;
  std::size_t n = 0;
  double z_alpha = 0.0;
  double lambda_alpha = 0.0;
  double delta_alpha = 0.0;
  double c_n = 0.0;
  double c_tilde_n = 0.0;
};

TailConstants tail_constants(double alpha, std::size_t n);

/// E[max of n iid N(0,1)] by adaptive Gauss-Kronrod on [-12, 12].
double expected_gauss_max(std::size_t n);

/// Best-of-N value predicted from tail statistics: mu + c_tilde_n * sigma.
double predict_vn(const TailVector& tail, const TailConstants& constants);

/// Population tail vector of Normal(mean, sd^2) at the constants' alpha.
TailVector gaussian_population_tail(double mean, double sd, const TailConstants& constants);

struct QqFit {
  double a = 0.0;  // intercept
  double b = 0.0;  // slope
  double r_squared = 0.0;
  double q_lo = 0.0;
  double q_hi = 0.0;
};

inline constexpr std::size_t kDefaultQqGridPoints = 20;

/// Least-squares fit of empirical quantiles (type-7 interpolation) on an even
/// grid of levels in [q_lo, q_hi] against the matching normal quantiles.
QqFit qq_tail_fit(std::span<const double> samples, double q_lo, double q_hi,
                  std::size_t grid_points = kDefaultQqGridPoints);

/// Type-7 sample quantile of already-sorted data.
double sorted_quantile(std::span<const double> sorted, double p);

}  // namespace tailx
