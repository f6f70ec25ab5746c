#pragma once

// Euclidean projections onto the probability simplex
//   S   = { x : sum x_i = 1, x_i >= 0 }
// and the floored simplex
//   S_a = { x : sum x_i = 1, x_i >= a },  0 <= a <= 1/K.

#include <span>
#include <vector>

#include "saas/matrix.hpp"

namespace saas {

/// Projection onto S by sort-and-threshold, O(K log K).
std::vector<double> project_simplex(std::span<const double> v);

/// Projection onto S_alpha. Throws InfeasibleFloorError when alpha > 1/K.
std::vector<double> project_floor(std::span<const double> v, double alpha);

/// Row-wise project_floor, in place.
void project_rows(Matrix& m, double alpha);

}  // namespace saas
