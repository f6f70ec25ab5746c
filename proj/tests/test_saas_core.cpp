#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "saas/errors.hpp"
#include "saas/saas_core.hpp"
#include "saas/simplex.hpp"

using namespace saas;

namespace {

DatasetSplit small_split(std::uint64_t seed, SplitSizes sizes = {6, 60, 20, 40}) {
  return split(make_two_moons(200, 0.1, seed), sizes, {}, seed + 1);
}

SaasConfig small_cfg() {
  SaasConfig c;
  c.outer_epochs = 3;
  c.inner_epochs = 1;
  c.batch_u = 20;
  c.batch_l = 6;
  c.phase2.max_epochs = 15;
  c.phase2.halve_after_epochs = 5;
  c.master_seed = 42;
  return c;
}

PosteriorMatrix uniform_posterior(std::size_t n, std::size_t K) {
  PosteriorMatrix p{Matrix(n, K), 0.0};
  p.P.data.assign(n * K, 1.0 / K);
  return p;
}

}  // namespace

TEST_CASE("cumulative_loss") {
  CHECK(cumulative_loss({{0.7, 0.7, 0.7, 0.7}, {0}}) == doctest::Approx(0.7));
  CHECK(cumulative_loss({{2.0, 1.0, 0.0}, {0}}) == 1.0);
  CHECK_THROWS(cumulative_loss({}));
}

TEST_CASE("inner_step_count") {
  SaasConfig c;
  c.batch_u = 30;
  c.inner_epochs = 2;
  CHECK(inner_step_count(c, 100) == 8);
  c.inner_steps = 5;
  CHECK(inner_step_count(c, 100) == 5);
}

TEST_CASE("config validation names the field") {
  auto expect = [](SaasConfig c, const std::string& field) {
    try {
      validate(c, 2);
      FAIL("expected ValidationError for " << field);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  SaasConfig c;
  c.eta_w = -1.0;
  expect(c, "eta_w");
  c = {};
  c.alpha_floor = 0.6;
  expect(c, "alpha_floor");
  c = {};
  c.momentum = 1.0;
  expect(c, "momentum");
  c = {};
  c.batch_u = 0;
  expect(c, "batch_u");
  c = {};
  c.arch = {2, 8, 3};
  expect(c, "arch");
  CHECK_NOTHROW(validate(SaasConfig{}, 2));
}

TEST_CASE("inner_simulation: frozen dynamics") {
  const auto s = small_split(1);
  auto c = small_cfg();
  c.eta_w = 0.0;
  c.momentum = 0.0;
  c.langevin_variance = 0.0;
  c.batch_u = s.n_unlabeled();
  c.inner_steps = 4;
  const std::uint64_t seed = 99;
  const auto r = inner_simulation(s, uniform_posterior(s.n_unlabeled(), 2), c, seed);
  CHECK(r.final_params == inner_initial_params(c, seed));
  REQUIRE(r.curve.step_losses.size() == 4);
  for (double l : r.curve.step_losses) CHECK(l == doctest::Approx(r.curve.step_losses[0]).epsilon(1e-14));
}

TEST_CASE("inner_simulation: one-step posterior gradient audit") {
  const auto s = small_split(2);
  auto c = small_cfg();
  c.inner_steps = 1;
  const auto post = initial_posterior(s.n_unlabeled(), 2, c);
  for (std::size_t bu : {s.n_unlabeled(), std::size_t{16}}) {
    c.batch_u = bu;
    const auto r = inner_simulation(s, post, c, 1234);
    const Matrix probs = forward(r.final_params, s.unlabeled_X);
    std::size_t visited = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < s.n_unlabeled(); ++i) {
      const bool hit = r.delta(i, 0) != 0.0 || r.delta(i, 1) != 0.0;
      visited += hit;
      if (!hit) continue;
      for (std::size_t k = 0; k < 2; ++k)
        worst = std::max(worst, std::abs(r.delta(i, k) - (-std::log(probs(i, k)) / static_cast<double>(bu))));
    }
    CAPTURE(bu);
    CHECK(visited == bu);
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("inner_simulation errors") {
  auto s = small_split(3);
  auto c = small_cfg();
  CHECK_THROWS_AS(inner_simulation(s, uniform_posterior(5, 2), c, 1), DimensionError);
  c.eta_w = 1e308;
  c.inner_steps = 5;
  CHECK_THROWS_AS(inner_simulation(s, uniform_posterior(s.n_unlabeled(), 2), c, 1), NumericError);
}

TEST_CASE("outer_epoch") {
  PosteriorMatrix p{Matrix(1, 2), 0.0};
  p.P(0, 0) = p.P(0, 1) = 0.5;
  Matrix d(1, 2);
  d(0, 0) = 1.0;
  const auto q = outer_epoch(p, d, 1.0, 0.0);
  CHECK(q.P(0, 0) == doctest::Approx(0.0));
  CHECK(q.P(0, 1) == doctest::Approx(1.0));

  SaasConfig c;
  const auto init = initial_posterior(30, 3, c);
  Matrix big(30, 3);
  big.data.assign(90, 7.0);
  CHECK(outer_epoch(init, big, 0.0, c.alpha_floor).P == init.P);
}

TEST_CASE("pseudo_labels and label_accuracy") {
  PosteriorMatrix p{Matrix(3, 3), 0.0};
  p.P.data = {0.2, 0.5, 0.3, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0};
  CHECK(pseudo_labels(p) == std::vector<int>{1, 0, 2});
  CHECK(label_accuracy({1, 0, 2}, {1, 1, 2}) == doctest::Approx(2.0 / 3.0));
  CHECK(std::isnan(label_accuracy({}, {})));
  PosteriorMatrix u{Matrix(2, 4), 0.0};
  u.P.data.assign(8, 0.25);
  CHECK(posterior_mean_entropy(u) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("run_phase1: empty loop and determinism") {
  const auto s = small_split(4);
  auto c = small_cfg();
  c.outer_epochs = 0;
  const auto r0 = run_phase1(s, c);
  CHECK(r0.epochs.empty());
  CHECK(r0.posterior.P == initial_posterior(s.n_unlabeled(), 2, c).P);

  c.outer_epochs = 3;
  std::size_t calls = 0;
  const auto a = run_phase1(s, c, [&](const OuterEpochStats& st, const PosteriorMatrix&) {
    ++calls;
    CHECK(st.epoch == calls);
  });
  const auto b = run_phase1(s, c);
  CHECK(calls == 3);
  CHECK(a.posterior.P == b.posterior.P);
  REQUIRE(a.epochs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a.epochs[i].cumulative_loss == b.epochs[i].cumulative_loss);
  for (std::size_t i = 0; i < a.posterior.P.rows; ++i) {
    double sum = 0.0;
    for (double v : a.posterior.P.row(i)) {
      sum += v;
      CHECK(v >= c.alpha_floor - 1e-15);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("run_phase1: reset mode reuses the same weights") {
  auto c = small_cfg();
  c.resample_mode = ResampleMode::reset_to_w0;
  CHECK(inner_initial_params(c, 1) == inner_initial_params(c, 2));
  c.resample_mode = ResampleMode::fresh_gaussian;
  CHECK_FALSE(inner_initial_params(c, 1) == inner_initial_params(c, 2));
}

TEST_CASE("lr schedule halves on plateaus and stops below lr_stop") {
  LrSchedule s(0.1, 50, 0.001);
  s.start(0.5);
  std::size_t epochs = 0;
  while (s.end_epoch(0.5)) ++epochs;
  std::vector<double> distinct;
  for (double lr : s.history())
    if (distinct.empty() || distinct.back() != lr) distinct.push_back(lr);
  const std::vector<double> expected{0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625};
  REQUIRE(distinct.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(distinct[i] == doctest::Approx(expected[i]).epsilon(1e-15));
  CHECK(epochs + 1 == 7 * 50);

  LrSchedule t(0.1, 2, 0.001);
  t.start(0.1);
  double acc = 0.1;
  for (int i = 0; i < 10; ++i) CHECK(t.end_epoch(acc += 0.01));
  CHECK(t.lr() == 0.1);
}

TEST_CASE("phase 2 and baseline") {
  const auto s = small_split(5);
  const auto c = small_cfg();
  const auto r = run_phase2(s, s.unlabeled_true_y, c);
  CHECK(r.metrics.unlabeled_error == 0.0);
  CHECK(r.epochs >= 1);
  CHECK(r.epochs <= c.phase2.max_epochs);
  CHECK(r.metrics.test_error == doctest::Approx(error_rate(r.params, s.test)));

  const auto a = run_baseline(s, c);
  const auto b = run_baseline(s, c);
  CHECK(a.metrics.test_error == b.metrics.test_error);
  CHECK(a.metrics.validation_error == b.metrics.validation_error);
  CHECK(a.params == b.params);
}

TEST_CASE("baseline with all labels beats baseline with six") {
  std::vector<double> few, many;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto c = small_cfg();
    c.master_seed = seed;
    c.phase2.max_epochs = 40;
    const auto ds = make_two_moons(400, 0.1, 10 + seed);
    few.push_back(run_baseline(split(ds, {6, 0, 50, 100}, {}, seed), c).metrics.test_error);
    many.push_back(run_baseline(split(ds, {250, 0, 50, 100}, {}, seed), c).metrics.test_error);
  }
  std::sort(few.begin(), few.end());
  std::sort(many.begin(), many.end());
  CHECK(many[1] <= few[1]);
}

TEST_CASE("train_supervised: clean labels train faster than fully corrupted ones") {
  const auto ds = make_two_moons(800, 0.1, 3);
  const auto bad = corrupt_labels(ds.y, 1.0, 2, 4, CorruptionMode::uniform);
  const std::vector<std::size_t> arch{2, 32, 32, 2};
  const auto clean = train_supervised(ds.X, ds.y, 2, arch, InitScale::fan_in, {}, 5);
  const auto noisy = train_supervised(ds.X, bad, 2, arch, InitScale::fan_in, {}, 5);
  CHECK(clean.step_losses.size() == 80);
  CHECK(epoch_means(clean).size() == 10);
  CHECK(cumulative_loss(clean) < cumulative_loss(noisy));
}
