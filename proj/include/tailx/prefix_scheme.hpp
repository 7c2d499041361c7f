#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tailx {

/// Nested prefix sizes and the weights that cancel the first k-1 terms of an
/// inverse-budget bias expansion.
struct PrefixScheme {
  std::size_t m = 0;  // full (or split) group size the ratios refer to
  std::size_t k = 1;  // cancellation order
  std::vector<std::size_t> sizes;
  std::vector<double> ratios;   // m / sizes[j]
  std::vector<double> weights;  // sum to 1, annihilate ratios^l for l = 1..k-1

  std::size_t j_count() const { return sizes.size(); }
};

struct Rational {
  std::uint32_t p = 0;
  std::uint32_t q = 1;
};

/// Best rational p/q with q <= max_den matching x to 1e-12; domain error otherwise.
Rational rationalize(double x, std::uint32_t max_den = 1000);

/// m_j = round(m (J + j) / (2J)), j = 1..J. Gives (40, 48, 56, 64) for m = 64, J = 4.
std::vector<std::size_t> practical_prefixes(std::size_t m, std::size_t j_count);

/// n_j = q floor(rho_j n / q) with rho_j = 1/2 + j / (2(J+1)); every n_j is a
/// multiple of q so alpha * n_j is integral.
std::vector<std::size_t> theory_prefixes(std::size_t n, std::size_t j_count, Rational alpha);

/// Minimum-norm solution of A w = e_0 where A has rows (z_j^l), z_j = m / sizes[j],
/// l = 0..k-1.
std::vector<double> cancellation_weights(std::size_t m, std::span<const std::size_t> sizes,
                                         std::size_t k);

PrefixScheme make_scheme(std::size_t m, std::vector<std::size_t> sizes, std::size_t k);
PrefixScheme practical_scheme(std::size_t m, std::size_t k, std::size_t j_count);
PrefixScheme theory_scheme(std::size_t n, std::size_t k, std::size_t j_count, Rational alpha);

}  // namespace tailx
