#include "saas/saas_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "saas/errors.hpp"
#include "saas/rng.hpp"
#include "saas/simplex.hpp"

namespace saas {

namespace {

// Seed tags. Changing any of these changes every run.
enum : std::uint64_t {
  kTagPosteriorInit = 1,
  kTagW0 = 2,
  kTagWeights = 11,
  kTagUnlabeledStream = 12,
  kTagLabeledStream = 13,
  kTagAugment = 14,
  kTagNoise = 15,
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

std::uint64_t outer_seed_for(const SaasConfig& cfg, std::size_t m) {
  return derive_seed(cfg.master_seed, "phase1", m);
}

std::uint64_t phase2_seed(const SaasConfig& cfg) { return derive_seed(cfg.master_seed, "phase2", 0); }

void check_loss(double loss, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite loss at step " + std::to_string(step) +
                           " (learning rate too large?)",
                       static_cast<std::ptrdiff_t>(step));
  }
}

// One half-step on a mini-batch. Returns the batch loss at the starting weights.
double half_step(ModelParams& params, OptimizerState& opt, const Matrix& X, const Matrix& targets,
                 double beta, bool entropy, std::uint64_t noise_seed, std::size_t step,
                 double* cross_entropy = nullptr) {
  LossAndGrad lg = grads(params, X, targets, beta, entropy);
  check_loss(lg.loss, step);
  if (cross_entropy) *cross_entropy = lg.cross_entropy;
  apply_sgd_step(params, lg.grad, opt, noise_seed);
  return lg.loss;
}

double validation_accuracy(const ModelParams& params, const DatasetSplit& split) {
  const Dataset& ds = split.validation.size() > 0 ? split.validation : split.labeled;
  return 1.0 - error_rate(params, ds);
}

struct TrainOutcome {
  ModelParams params;
  std::vector<double> lr_history;
  std::size_t epochs = 0;
};

// Phase II loop shared with the baseline: one fresh init, unlabeled half-step
// on fixed one-hot targets (skipped when use_unlabeled is false), then a
// labeled half-step. No entropy term and no Langevin noise.
TrainOutcome train_phase2_like(const DatasetSplit& split, const std::vector<int>* y_hat,
                               const SaasConfig& cfg) {
  const bool use_unlabeled = y_hat != nullptr && !y_hat->empty();
  const std::size_t Nl = split.labeled.size();
  require(use_unlabeled || Nl > 0, "supervised training needs labeled or pseudo-labeled data");
  const std::uint64_t seed = phase2_seed(cfg);
  TrainOutcome out;
  out.params = init_params(cfg.arch, sub_seed(seed, kTagWeights), cfg.init_scale);
  OptimizerState opt = make_optimizer(out.params, cfg.phase2.lr0, cfg.momentum, 0.0);

  const Matrix Tu = use_unlabeled ? one_hot(*y_hat, split.K) : Matrix();
  const Matrix Tl = one_hot(split.labeled.y, split.K);
  std::optional<BatchStream> ustream, lstream;
  if (use_unlabeled) ustream.emplace(split.n_unlabeled(), cfg.batch_u, sub_seed(seed, kTagUnlabeledStream));
  if (Nl > 0) lstream.emplace(Nl, cfg.batch_l, sub_seed(seed, kTagLabeledStream));
  const std::size_t steps_per_epoch =
      use_unlabeled ? ustream->steps_per_epoch() : lstream->steps_per_epoch();

  LrSchedule schedule(cfg.phase2.lr0, cfg.phase2.halve_after_epochs, cfg.phase2.lr_stop);
  schedule.start(validation_accuracy(out.params, split));
  const std::uint64_t aug_seed = sub_seed(seed, kTagAugment);
  std::size_t step = 0;
  while (out.epochs < cfg.phase2.max_epochs) {
    opt.eta_w = schedule.lr();
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      if (use_unlabeled) {
        const auto& b = ustream->next();
        const Matrix X = augment_rows(cfg.augmentation, gather_rows(split.unlabeled_X, b),
                                      sub_seed(aug_seed, 2 * step));
        half_step(out.params, opt, X, gather_rows(Tu, b), 0.0, false, 0, step);
      }
      if (lstream) {
        const auto& b = lstream->next();
        const Matrix X = augment_rows(cfg.augmentation, gather_rows(split.labeled.X, b),
                                      sub_seed(aug_seed, 2 * step + 1));
        half_step(out.params, opt, X, gather_rows(Tl, b), 0.0, false, 0, step);
      }
    }
    ++out.epochs;
    if (!schedule.end_epoch(validation_accuracy(out.params, split))) break;
  }
  out.lr_history = schedule.history();
  return out;
}

}  // namespace

void validate(const SaasConfig& cfg, std::size_t num_classes) {
  require(cfg.arch.size() >= 2, "arch needs at least 2 sizes");
  for (auto s : cfg.arch) require(s >= 1, "arch sizes must be >= 1");
  require(num_classes == 0 || cfg.arch.back() == num_classes,
          "arch output size must equal the class count");
  require(cfg.eta_w > 0.0, "eta_w must be > 0");
  require(cfg.eta_pu >= 0.0, "eta_pu must be >= 0");
  require(cfg.beta >= 0.0, "beta must be >= 0");
  require(cfg.alpha_floor >= 0.0, "alpha_floor must be >= 0");
  if (num_classes > 0)
    require(cfg.alpha_floor <= 1.0 / static_cast<double>(num_classes), "alpha_floor must be <= 1/K");
  require(cfg.inner_steps >= 1 || cfg.inner_epochs >= 1, "inner_steps or inner_epochs must be >= 1");
  require(cfg.batch_u >= 1, "batch_u must be >= 1");
  require(cfg.batch_l >= 1, "batch_l must be >= 1");
  require(cfg.momentum >= 0.0 && cfg.momentum < 1.0, "momentum must be in [0, 1)");
  require(cfg.langevin_variance >= 0.0, "langevin_variance must be >= 0");
  require(cfg.early_stop_tv >= 0.0, "early_stop_tv must be >= 0");
  require(cfg.phase2.lr0 > 0.0, "phase2.lr0 must be > 0");
  require(cfg.phase2.halve_after_epochs >= 1, "phase2.halve_after_epochs must be >= 1");
  require(cfg.phase2.lr_stop > 0.0, "phase2.lr_stop must be > 0");
  require(cfg.phase2.max_epochs >= 1, "phase2.max_epochs must be >= 1");
  validate(cfg.augmentation);
}

double cumulative_loss(const LearningCurve& curve) {
  if (curve.step_losses.empty()) throw ValidationError("cumulative_loss of an empty learning curve");
  return std::accumulate(curve.step_losses.begin(), curve.step_losses.end(), 0.0) /
         static_cast<double>(curve.step_losses.size());
}

std::size_t inner_step_count(const SaasConfig& cfg, std::size_t n_unlabeled) {
  if (cfg.inner_steps > 0) return cfg.inner_steps;
  const std::size_t per_epoch = (n_unlabeled + cfg.batch_u - 1) / cfg.batch_u;
  return cfg.inner_epochs * per_epoch;
}

ModelParams inner_initial_params(const SaasConfig& cfg, std::uint64_t outer_seed) {
  const std::uint64_t seed = cfg.resample_mode == ResampleMode::fresh_gaussian
                                 ? sub_seed(outer_seed, kTagWeights)
                                 : sub_seed(cfg.master_seed, kTagW0);
  return init_params(cfg.arch, seed, cfg.init_scale);
}

InnerResult inner_simulation(const DatasetSplit& split, const PosteriorMatrix& posterior,
                             const SaasConfig& cfg, std::uint64_t outer_seed) {
  const std::size_t Nu = split.n_unlabeled(), K = split.K;
  require(Nu > 0, "inner_simulation needs unlabeled samples");
  if (posterior.P.rows != Nu || posterior.P.cols != K)
    throw DimensionError("posterior shape does not match the unlabeled set");

  InnerResult out;
  out.final_params = inner_initial_params(cfg, outer_seed);
  ModelParams& w = out.final_params;
  OptimizerState opt = make_optimizer(w, cfg.eta_w, cfg.momentum, cfg.langevin_variance);
  out.delta = Matrix(Nu, K);

  BatchStream ustream(Nu, cfg.batch_u, sub_seed(outer_seed, kTagUnlabeledStream));
  std::optional<BatchStream> lstream;
  if (split.labeled.size() > 0)
    lstream.emplace(split.labeled.size(), cfg.batch_l, sub_seed(outer_seed, kTagLabeledStream));
  const Matrix Tl = one_hot(split.labeled.y, K);
  const std::uint64_t aug_seed = sub_seed(outer_seed, kTagAugment);
  const std::uint64_t noise_seed = sub_seed(outer_seed, kTagNoise);

  const std::size_t T = inner_step_count(cfg, Nu);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t epoch_before = ustream.epochs_started();
    const std::vector<std::size_t> bu = ustream.next();
    if (t == 0 || ustream.epochs_started() != epoch_before) out.curve.epoch_boundaries.push_back(t);
    const Matrix Xu = augment_rows(cfg.augmentation, gather_rows(split.unlabeled_X, bu),
                                   sub_seed(aug_seed, 2 * t));
    double ce = 0.0;
    half_step(w, opt, Xu, gather_rows(posterior.P, bu), cfg.beta, true,
              sub_seed(noise_seed, 2 * t), t, &ce);

    if (lstream) {
      const auto& bl = lstream->next();
      const Matrix Xl = augment_rows(cfg.augmentation, gather_rows(split.labeled.X, bl),
                                     sub_seed(aug_seed, 2 * t + 1));
      half_step(w, opt, Xl, gather_rows(Tl, bl), 0.0, false, sub_seed(noise_seed, 2 * t + 1), t);
    }

    // Posterior gradient at the post-step weights, same augmented inputs.
    const Matrix probs = forward(w, Xu);
    const double scale =
        cfg.delta_scale == DeltaScale::batch_mean ? 1.0 / static_cast<double>(bu.size()) : 1.0;
    for (std::size_t r = 0; r < bu.size(); ++r) {
      auto drow = out.delta.row(bu[r]);
      for (std::size_t k = 0; k < K; ++k) drow[k] += scale * -std::log(probs(r, k));
    }
    out.curve.step_losses.push_back(ce);
  }
  return out;
}

PosteriorMatrix outer_epoch(const PosteriorMatrix& posterior, const Matrix& delta, double eta_pu,
                            double alpha) {
  if (delta.rows != posterior.P.rows || delta.cols != posterior.P.cols)
    throw DimensionError("outer_epoch: delta shape does not match the posterior");
  PosteriorMatrix out{posterior.P, alpha};
  if (eta_pu != 0.0)
    for (std::size_t i = 0; i < out.P.data.size(); ++i) out.P.data[i] -= eta_pu * delta.data[i];
  project_rows(out.P, alpha);
  return out;
}

std::vector<int> pseudo_labels(const PosteriorMatrix& posterior) { return argmax_rows(posterior.P); }

double posterior_mean_entropy(const PosteriorMatrix& posterior) {
  if (posterior.P.rows == 0) return 0.0;
  double total = 0.0;
  for (double p : posterior.P.data)
    if (p > 0.0) total -= p * std::log(p);
  return total / static_cast<double>(posterior.P.rows);
}

double label_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) throw DimensionError("label_accuracy: length mismatch");
  if (truth.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

PosteriorMatrix initial_posterior(std::size_t n_unlabeled, std::size_t K, const SaasConfig& cfg) {
  PosteriorMatrix post{Matrix(n_unlabeled, K), cfg.alpha_floor};
  Rng rng(sub_seed(cfg.master_seed, kTagPosteriorInit));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : post.P.data) v = normal(rng);
  project_rows(post.P, cfg.alpha_floor);
  return post;
}

Phase1Report run_phase1(const DatasetSplit& split, const SaasConfig& cfg,
                        const Phase1Observer& observer) {
  validate(cfg, split.K);
  Phase1Report report;
  report.posterior = initial_posterior(split.n_unlabeled(), split.K, cfg);
  const auto& truth = split.unlabeled_true_y;
  auto accuracy = [&](const PosteriorMatrix& p) {
    return truth.size() == p.P.rows ? label_accuracy(pseudo_labels(p), truth)
                                    : std::numeric_limits<double>::quiet_NaN();
  };
  report.initial_accuracy = accuracy(report.posterior);
  report.initial_entropy = posterior_mean_entropy(report.posterior);

  for (std::size_t m = 0; m < cfg.outer_epochs; ++m) {
    const InnerResult inner = inner_simulation(split, report.posterior, cfg, outer_seed_for(cfg, m));
    PosteriorMatrix next = outer_epoch(report.posterior, inner.delta, cfg.eta_pu, cfg.alpha_floor);

    OuterEpochStats stats;
    stats.epoch = m + 1;
    stats.cumulative_loss = cumulative_loss(inner.curve);
    double tv = 0.0;
    for (std::size_t i = 0; i < next.P.data.size(); ++i)
      tv += std::abs(next.P.data[i] - report.posterior.P.data[i]);
    stats.tv_change = next.P.rows > 0 ? 0.5 * tv / static_cast<double>(next.P.rows) : 0.0;
    report.posterior = std::move(next);
    stats.accuracy = accuracy(report.posterior);
    stats.mean_entropy = posterior_mean_entropy(report.posterior);
    report.epochs.push_back(stats);
    if (observer) observer(stats, report.posterior);
    if (cfg.early_stop_tv > 0.0 && stats.tv_change < cfg.early_stop_tv) break;
  }
  return report;
}

LrSchedule::LrSchedule(double lr0, std::size_t window, double lr_stop)
    : lr_(lr0), lr_stop_(lr_stop), window_(window) {
  require(lr0 > 0.0 && lr_stop > 0.0 && window >= 1, "invalid learning-rate schedule");
}

void LrSchedule::start(double initial_accuracy) {
  best_ = initial_accuracy;
  in_window_ = 0;
  improved_ = false;
  history_.assign(1, lr_);
}

bool LrSchedule::end_epoch(double validation_accuracy) {
  if (history_.empty()) history_.push_back(lr_);
  if (validation_accuracy > best_) {
    best_ = validation_accuracy;
    improved_ = true;
  }
  if (++in_window_ < window_) return true;
  in_window_ = 0;
  if (improved_) {
    improved_ = false;
    return true;
  }
  lr_ *= 0.5;
  if (lr_ < lr_stop_) return false;
  history_.push_back(lr_);
  return true;
}

double error_rate(const ModelParams& params, const Dataset& ds) {
  if (ds.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - label_accuracy(argmax_rows(forward(params, ds.X)), ds.y);
}

Phase2Result run_phase2(const DatasetSplit& split, const std::vector<int>& y_hat,
                        const SaasConfig& cfg) {
  validate(cfg, split.K);
  if (y_hat.size() != split.n_unlabeled())
    throw DimensionError("run_phase2: pseudo-label count does not match the unlabeled set");
  TrainOutcome t = train_phase2_like(split, &y_hat, cfg);
  Phase2Result out;
  out.metrics.test_error = error_rate(t.params, split.test);
  out.metrics.validation_error = error_rate(t.params, split.validation);
  if (split.unlabeled_true_y.size() == y_hat.size() && !y_hat.empty())
    out.metrics.unlabeled_error = 1.0 - label_accuracy(y_hat, split.unlabeled_true_y);
  out.params = std::move(t.params);
  out.lr_history = std::move(t.lr_history);
  out.epochs = t.epochs;
  return out;
}

BaselineResult run_baseline(const DatasetSplit& split, const SaasConfig& cfg) {
  validate(cfg, split.K);
  require(split.labeled.size() > 0, "baseline needs a non-empty labeled set");
  TrainOutcome t = train_phase2_like(split, nullptr, cfg);
  BaselineResult out;
  out.metrics.test_error = error_rate(t.params, split.test);
  out.metrics.validation_error = error_rate(t.params, split.validation);
  out.params = std::move(t.params);
  out.lr_history = std::move(t.lr_history);
  out.epochs = t.epochs;
  return out;
}

LearningCurve train_supervised(const Matrix& X, const std::vector<int>& y, std::size_t K,
                               const std::vector<std::size_t>& arch, InitScale init_scale,
                               const SupervisedRun& run, std::uint64_t seed) {
  if (X.rows != y.size()) throw DimensionError("train_supervised: feature/label count mismatch");
  require(!y.empty(), "train_supervised needs data");
  ModelParams w = init_params(arch, sub_seed(seed, kTagWeights), init_scale);
  OptimizerState opt = make_optimizer(w, run.lr, run.momentum, 0.0);
  const Matrix T = one_hot(y, K);
  LearningCurve curve;
  std::size_t step = 0;
  for (std::size_t e = 0; e < run.epochs; ++e) {
    curve.epoch_boundaries.push_back(step);
    const auto sched = epoch_batches(y.size(), run.batch_size, sub_seed(seed, 100 + e));
    for (const auto& b : sched.batches) {
      curve.step_losses.push_back(
          half_step(w, opt, gather_rows(X, b), gather_rows(T, b), 0.0, false, 0, step));
      ++step;
    }
  }
  return curve;
}

std::vector<double> epoch_means(const LearningCurve& curve) {
  std::vector<double> out;
  const auto& b = curve.epoch_boundaries;
  for (std::size_t e = 0; e < b.size(); ++e) {
    const std::size_t lo = b[e];
    const std::size_t hi = e + 1 < b.size() ? b[e + 1] : curve.step_losses.size();
    double sum = 0.0;
    for (std::size_t s = lo; s < hi; ++s) sum += curve.step_losses[s];
    out.push_back(hi > lo ? sum / static_cast<double>(hi - lo) : 0.0);
  }
  return out;
}

}  // namespace saas
