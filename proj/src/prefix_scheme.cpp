#include "tailx/prefix_scheme.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "linalg.hpp"
#include "tailx/error.hpp"

namespace tailx {

namespace {

void check_sizes(std::size_t m, std::span<const std::size_t> sizes) {
  require(!sizes.empty(), ErrorKind::Domain, "prefix scheme needs at least one prefix");
  std::size_t prev = 0;
  for (std::size_t s : sizes) {
    require(s >= 2, ErrorKind::Domain, "prefix sizes must be >= 2");
    require(s > prev, ErrorKind::Domain, "prefix sizes must be strictly increasing");
    prev = s;
  }
  require(sizes.back() <= m, ErrorKind::Domain, "largest prefix exceeds the group size");
}

}  // namespace

Rational rationalize(double x, std::uint32_t max_den) {
  require(x > 0.0 && x < 1.0, ErrorKind::Domain, "rationalize expects a value in (0, 1)");
  for (std::uint32_t q = 1; q <= max_den; ++q) {
    const double p = std::round(x * q);
    if (p >= 1.0 && std::abs(p / q - x) <= 1e-12) {
      const auto pi = static_cast<std::uint32_t>(p);
      const std::uint32_t g = std::gcd(pi, q);
      return {pi / g, q / g};
    }
  }
  fail(ErrorKind::Domain, "alpha is not a rational with denominator <= " + std::to_string(max_den));
}

std::vector<std::size_t> practical_prefixes(std::size_t m, std::size_t j_count) {
  require(j_count >= 1, ErrorKind::Domain, "need at least one prefix");
  std::vector<std::size_t> sizes;
  sizes.reserve(j_count);
  for (std::size_t j = 1; j <= j_count; ++j) {
    // round-half-up of m (J + j) / (2J) in integer arithmetic
    const std::size_t num = m * (j_count + j);
    const std::size_t den = 2 * j_count;
    const std::size_t s = (2 * num + den) / (2 * den);
    if (!sizes.empty() && sizes.back() == s)
      fail(ErrorKind::Collision, "practical prefixes collide at size " + std::to_string(s));
    require(s >= 2, ErrorKind::Domain, "practical prefix smaller than 2");
    sizes.push_back(s);
  }
  return sizes;
}

std::vector<std::size_t> theory_prefixes(std::size_t n, std::size_t j_count, Rational alpha) {
  require(j_count >= 1, ErrorKind::Domain, "need at least one prefix");
  require(alpha.p >= 1 && 2 * alpha.p < alpha.q && std::gcd(alpha.p, alpha.q) == 1,
          ErrorKind::Domain, "alpha must be a reduced fraction in (0, 1/2)");
  const std::size_t q = alpha.q;
  std::vector<std::size_t> sizes;
  sizes.reserve(j_count);
  for (std::size_t j = 1; j <= j_count; ++j) {
    // rho_j n / q = n (J + 1 + j) / (2 (J + 1) q), floored exactly
    const std::size_t s = q * ((n * (j_count + 1 + j)) / (2 * (j_count + 1) * q));
    if (s < q || s < 2)
      fail(ErrorKind::Collision, "budget too small: a theory prefix rounds to zero");
    if (!sizes.empty() && sizes.back() == s)
      fail(ErrorKind::Collision, "theory prefixes collide at size " + std::to_string(s));
    sizes.push_back(s);
  }
  return sizes;
}

std::vector<double> cancellation_weights(std::size_t m, std::span<const std::size_t> sizes,
                                         std::size_t k) {
  check_sizes(m, sizes);
  const std::size_t jn = sizes.size();
  require(k >= 1 && k <= jn, ErrorKind::Domain, "cancellation order must satisfy 1 <= k <= J");

  // Rows of A are powers of z_j, each scaled to unit max entry; the right-hand
  // side e_0 is unaffected because only row 0 (all ones) has a nonzero target.
  std::vector<double> a(k * jn);
  for (std::size_t l = 0; l < k; ++l) {
    double row_max = 0.0;
    for (std::size_t j = 0; j < jn; ++j) {
      const double z = static_cast<double>(m) / static_cast<double>(sizes[j]);
      a[l * jn + j] = std::pow(z, static_cast<double>(l));
      row_max = std::max(row_max, std::abs(a[l * jn + j]));
    }
    for (std::size_t j = 0; j < jn; ++j) a[l * jn + j] /= row_max;
  }
  std::vector<double> gram(k * k, 0.0);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < jn; ++j) gram[r * k + c] += a[r * jn + j] * a[c * jn + j];
  std::vector<double> e0(k, 0.0);
  e0[0] = 1.0;
  std::vector<double> y;
  try {
    y = detail::solve_dense(std::move(gram), std::move(e0), k);
  } catch (const Error&) {
    fail(ErrorKind::Rank, "moment matrix is rank deficient (coincident prefix ratios?)");
  }
  std::vector<double> w(jn, 0.0);
  for (std::size_t j = 0; j < jn; ++j)
    for (std::size_t l = 0; l < k; ++l) w[j] += a[l * jn + j] * y[l];
  return w;
}

PrefixScheme make_scheme(std::size_t m, std::vector<std::size_t> sizes, std::size_t k) {
  PrefixScheme s;
  s.m = m;
  s.k = k;
  s.weights = cancellation_weights(m, sizes, k);
  s.ratios.reserve(sizes.size());
  for (std::size_t size : sizes) s.ratios.push_back(static_cast<double>(m) / static_cast<double>(size));
  s.sizes = std::move(sizes);
  return s;
}

PrefixScheme practical_scheme(std::size_t m, std::size_t k, std::size_t j_count) {
  return make_scheme(m, practical_prefixes(m, j_count), k);
}

PrefixScheme theory_scheme(std::size_t n, std::size_t k, std::size_t j_count, Rational alpha) {
  return make_scheme(n, theory_prefixes(n, j_count, alpha), k);
}

}  // namespace tailx
