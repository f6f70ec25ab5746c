#pragma once

// Reference implementations used only by tests.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "saas/nn_core.hpp"

namespace oracle {

// Projection onto {x : sum x = 1, x >= alpha} by enumerating every free set.
// For a fixed free set F the KKT conditions give x_i = v_i - theta on F and
// x_i = alpha elsewhere; the feasible candidate nearest to v is the answer.
inline std::vector<double> floor_projection(const std::vector<double>& v, double alpha) {
  const std::size_t K = v.size();
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << K); ++mask) {
    std::size_t m = 0;
    double s = 0.0;
    for (std::size_t i = 0; i < K; ++i)
      if (mask & (1u << i)) ++m, s += v[i];
    const double theta = (s - (1.0 - static_cast<double>(K - m) * alpha)) / static_cast<double>(m);
    std::vector<double> x(K, alpha);
    bool ok = true;
    for (std::size_t i = 0; i < K; ++i)
      if (mask & (1u << i)) {
        x[i] = v[i] - theta;
        if (x[i] < alpha - 1e-13) ok = false;
      }
    if (!ok) continue;
    double d = 0.0;
    for (std::size_t i = 0; i < K; ++i) d += (x[i] - v[i]) * (x[i] - v[i]);
    if (d < best_dist) best_dist = d, best = x;
  }
  return best;
}

inline std::vector<double> simplex_projection(const std::vector<double>& v) {
  return floor_projection(v, 0.0);
}

// Loss recomputed from the forward pass only.
inline double objective(const saas::ModelParams& p, const saas::Matrix& X, const saas::Matrix& T,
                        double beta) {
  const saas::Matrix probs = saas::forward(p, X);
  return saas::soft_cross_entropy(probs, T) + beta * saas::entropy_penalty(probs);
}

inline saas::Matrix random_simplex_rows(std::size_t n, std::size_t K, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  saas::Matrix T(n, K);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += T(r, k) = g(rng);
    for (std::size_t k = 0; k < K; ++k) T(r, k) /= s;
  }
  return T;
}

inline saas::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  saas::Matrix m(r, c);
  for (double& x : m.data) x = n(rng);
  return m;
}

// Max over all parameters of |analytic - numeric| / max(|analytic|, |numeric|, floor).
// Central differences with step h. Roundoff in the difference quotient is about
// eps * |loss| / h ~ 1e-10, so entries below `floor` are held to an absolute
// tolerance of floor * 1e-5 instead of a relative one.
inline double gradient_check(saas::ModelParams p, const saas::Matrix& X, const saas::Matrix& T,
                             double beta, double h = 1e-6, double floor = 1e-4) {
  const auto analytic = saas::grads(p, X, T, beta, true).grad;
  double worst = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto check = [&](double& w, double a) {
      const double w0 = w;
      w = w0 + h;
      const double up = objective(p, X, T, beta);
      w = w0 - h;
      const double down = objective(p, X, T, beta);
      w = w0;
      const double num = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(a), std::abs(num), floor});
      worst = std::max(worst, std::abs(a - num) / denom);
    };
    auto& L = p.layers[l];
    for (std::size_t i = 0; i < L.weight.data.size(); ++i)
      check(L.weight.data[i], analytic.layers[l].weight.data[i]);
    for (std::size_t i = 0; i < L.bias.size(); ++i) check(L.bias[i], analytic.layers[l].bias[i]);
  }
  return worst;
}

}  // namespace oracle
