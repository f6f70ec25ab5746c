#include "saas/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "saas/errors.hpp"

namespace saas {

namespace {

constexpr double kSumTolerance = std::numeric_limits<double>::epsilon();

void require_finite(std::span<const double> v) {
  if (v.empty()) throw ValidationError("simplex projection of an empty vector");
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError("simplex projection of a non-finite vector");
}

// Feasible up to rounding in the sum: projecting again could only move
// entries by an ulp, so the input is returned as is.
bool already_feasible(std::span<const double> v, double alpha) {
  double sum = 0.0;
  for (double x : v) {
    if (x < alpha) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= 4.0 * static_cast<double>(v.size()) * kSumTolerance;
}

}  // namespace

std::vector<double> project_simplex(std::span<const double> v) {
  require_finite(v);
  if (already_feasible(v, 0.0)) return {v.begin(), v.end()};
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // Largest k with sorted[k-1] - (prefix_k - 1)/k > 0. k = 1 always qualifies.
  double prefix = 0.0, tau = 0.0;
  for (std::size_t k = 1; k <= sorted.size(); ++k) {
    prefix += sorted[k - 1];
    const double t = (prefix - 1.0) / static_cast<double>(k);
    if (sorted[k - 1] - t > 0.0) tau = t;
  }
  std::vector<double> p(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = std::max(v[i] - tau, 0.0);
  return p;
}

std::vector<double> project_floor(std::span<const double> v, double alpha) {
  require_finite(v);
  const double K = static_cast<double>(v.size());
  if (!(alpha >= 0.0)) throw ValidationError("simplex floor must be >= 0");
  const double mass = 1.0 - K * alpha;
  if (mass < -1e-12) {
    throw InfeasibleFloorError("simplex floor " + std::to_string(alpha) + " exceeds 1/K for K=" +
                               std::to_string(v.size()));
  }
  if (already_feasible(v, alpha)) return {v.begin(), v.end()};
  if (alpha == 0.0) return project_simplex(v);
  if (mass <= 1e-12) return std::vector<double>(v.size(), 1.0 / K);
  std::vector<double> y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) y[i] = (v[i] - alpha) / mass;
  std::vector<double> p = project_simplex(y);
  for (double& x : p) x = alpha + mass * x;
  return p;
}

void project_rows(Matrix& m, double alpha) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    const auto p = project_floor(r, alpha);
    std::copy(p.begin(), p.end(), r.begin());
  }
}

}  // namespace saas
