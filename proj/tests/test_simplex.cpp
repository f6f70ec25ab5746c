#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "saas/errors.hpp"
#include "saas/simplex.hpp"

using namespace saas;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<double> random_vector(std::size_t K, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(K);
  for (double& x : v) x = n(rng);
  return v;
}

}  // namespace

TEST_CASE("project_simplex examples") {
  CHECK(project_simplex(std::vector<double>{0.3, 0.7}) == std::vector<double>{0.3, 0.7});
  const auto a = project_simplex(std::vector<double>{1.5, 0.5, 0.5});
  CHECK(max_abs_diff(a, {1.0, 0.0, 0.0}) < 1e-15);
  const auto b = project_simplex(std::vector<double>{0.0, 0.0});
  CHECK(max_abs_diff(b, {0.5, 0.5}) < 1e-15);
}

TEST_CASE("project_floor examples") {
  const auto a = project_floor(std::vector<double>{2.0, 0.0}, 0.05);
  CHECK(max_abs_diff(a, {0.95, 0.05}) < 1e-15);
  const auto u = project_floor(std::vector<double>{3.0, 3.0, 3.0, 3.0}, 0.25);
  CHECK(max_abs_diff(u, {0.25, 0.25, 0.25, 0.25}) < 1e-15);
  const auto v = project_floor(std::vector<double>{-1.0, -1.0, -1.0}, 0.1);
  CHECK(max_abs_diff(v, {1.0 / 3, 1.0 / 3, 1.0 / 3}) < 1e-15);
}

TEST_CASE("project_floor errors") {
  CHECK_THROWS_AS(project_floor(std::vector<double>{1.0, 0.0, 0.0}, 0.34), InfeasibleFloorError);
  CHECK_THROWS_AS(project_floor(std::vector<double>{1.0, 0.0}, -0.1), ValidationError);
  CHECK_THROWS_AS(project_simplex(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(project_simplex(std::vector<double>{NAN, 1.0}), ValidationError);
}

TEST_CASE("alpha = 0 reduces to project_simplex") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto v = random_vector(2 + i % 9, rng);
    CHECK(project_floor(v, 0.0) == project_simplex(v));
  }
}

TEST_CASE("oracle agreement, K = 2..10") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t K = 2; K <= 10; ++K) {
    double worst_s = 0.0, worst_f = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto v = random_vector(K, rng);
      worst_s = std::max(worst_s, max_abs_diff(project_simplex(v), oracle::simplex_projection(v)));
      const double alpha = unit(rng) / static_cast<double>(K);
      worst_f = std::max(worst_f, max_abs_diff(project_floor(v, alpha), oracle::floor_projection(v, alpha)));
    }
    CAPTURE(K);
    CHECK(worst_s <= 1e-8);
    CHECK(worst_f <= 1e-8);
  }
}

TEST_CASE("projection properties") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t K = 2 + i % 9;
    auto v = random_vector(K, rng);
    for (double& x : v) x *= 3.0;
    const double alpha = i % 4 == 0 ? 0.0 : unit(rng) / static_cast<double>(K);
    const auto p = project_floor(v, alpha);

    // feasibility
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-12);
    CHECK(*std::min_element(p.begin(), p.end()) >= alpha - 1e-15);

    // idempotence
    CHECK(project_floor(p, alpha) == p);

    // translation invariance
    const double c = 5.0 * (unit(rng) - 0.5);
    auto shifted = v;
    for (double& x : shifted) x += c;
    CHECK(max_abs_diff(project_floor(shifted, alpha), p) <= 1e-12);

    // order preservation
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = 0; b < K; ++b)
        if (v[a] >= v[b]) CHECK(p[a] >= p[b]);
  }
}

TEST_CASE("project_rows projects every row") {
  Matrix m(2, 2);
  m(0, 0) = 2.0;
  m(1, 0) = 0.3;
  m(1, 1) = 0.7;
  project_rows(m, 0.05);
  CHECK(m(0, 0) == doctest::Approx(0.95));
  CHECK(m(0, 1) == doctest::Approx(0.05));
  CHECK(m(1, 0) == 0.3);
  CHECK(m(1, 1) == 0.7);
}
