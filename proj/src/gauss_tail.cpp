#include "tailx/gauss_tail.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "tailx/error.hpp"

namespace tailx {

namespace {

constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

// log Phi(x) without cancellation on either side of zero.
double log_normal_cdf(double x) {
  if (x < 0.0) return std::log(normal_cdf(x));
  return std::log1p(-normal_sf(x));
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorKind::Domain, "normal_quantile needs p in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double expected_gauss_max(std::size_t n) {
  require(n >= 1, ErrorKind::Domain, "expected_gauss_max needs n >= 1");
  if (n == 1) return 0.0;
  const double nn = static_cast<double>(n);
  auto integrand = [nn](double z) {
    return z * nn * normal_pdf(z) * std::exp((nn - 1.0) * log_normal_cdf(z));
  };
  // The mass sits near sqrt(2 ln n); breaking the range at 0 keeps the
  // negative lobe from dominating the error estimate for small n.
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double err_lo = 0.0;
  double err_hi = 0.0;
  const double lo = Quad::integrate(integrand, -12.0, 0.0, 20, 1e-13, &err_lo);
  const double hi = Quad::integrate(integrand, 0.0, 12.0, 20, 1e-13, &err_hi);
  return lo + hi;
}

TailConstants tail_constants(double alpha, std::size_t n) {
  require(alpha > 0.0 && alpha < 0.5, ErrorKind::Domain, "alpha must lie in (0, 1/2)");
  require(n >= 1, ErrorKind::Domain, "best-of-N budget must be >= 1");
  TailConstants c;
  c.alpha = alpha;
  c.n = n;
  c.z_alpha = -normal_quantile(alpha);
  c.lambda_alpha = normal_pdf(c.z_alpha) / alpha;
  c.delta_alpha = 1.0 + c.z_alpha * c.lambda_alpha - c.lambda_alpha * c.lambda_alpha;
  c.c_n = expected_gauss_max(n);
  c.c_tilde_n = (c.c_n - c.lambda_alpha) / std::sqrt(c.delta_alpha);
  return c;
}

double predict_vn(const TailVector& tail, const TailConstants& constants) {
  require(tail.sigma > 0.0, ErrorKind::Domain, "tail scale must be positive");
  return tail.mu + constants.c_tilde_n * tail.sigma;
}

TailVector gaussian_population_tail(double mean, double sd, const TailConstants& constants) {
  require(sd > 0.0, ErrorKind::Domain, "population sd must be positive");
  return {mean + sd * constants.z_alpha, mean + sd * constants.lambda_alpha,
          sd * std::sqrt(constants.delta_alpha), 0};
}

double sorted_quantile(std::span<const double> sorted, double p) {
  require(!sorted.empty(), ErrorKind::Domain, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

QqFit qq_tail_fit(std::span<const double> samples, double q_lo, double q_hi,
                  std::size_t grid_points) {
  require(samples.size() >= 20, ErrorKind::Domain, "QQ fit needs at least 20 samples");
  require(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0, ErrorKind::Domain,
          "QQ window must satisfy 0 < q_lo < q_hi < 1");
  require(grid_points >= 2, ErrorKind::Domain, "QQ grid needs at least 2 levels");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> xs(grid_points);
  std::vector<double> ys(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double level =
        q_lo + (q_hi - q_lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    xs[i] = normal_quantile(level);
    ys[i] = sorted_quantile(sorted, level);
  }
  const double g = static_cast<double>(grid_points);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= g;
  my /= g;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(syy > 0.0))
    fail(ErrorKind::Degenerate, "QQ window quantiles are all equal; R^2 undefined");
  QqFit fit;
  fit.b = sxy / sxx;
  fit.a = my - fit.b * mx;
  fit.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  fit.q_lo = q_lo;
  fit.q_hi = q_hi;
  return fit;
}

}  // namespace tailx
