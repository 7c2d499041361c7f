#pragma once

#include <cstddef>
#include <vector>

namespace tailx::detail {

/// Solves the dense row-major n x n system a x = b by Gaussian elimination
/// with partial pivoting. Throws a Rank error when a pivot falls below
/// rel_tol times the largest entry of a.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, std::size_t n,
                                double rel_tol = 1e-13);

}  // namespace tailx::detail
