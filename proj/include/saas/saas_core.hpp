#pragma once

// Posterior inference for unknown labels by maximizing training speed.
//
// Phase I keeps a posterior matrix P (one row per unlabeled sample). Each
// outer epoch draws fresh weights, runs a short unrolled SGD simulation in
// which every step is an unlabeled half-step (soft targets P plus an entropy
// penalty) followed by a labeled half-step, and accumulates -log f_w(x) for
// the visited unlabeled rows. P then takes a gradient step on that
// accumulation and is projected back onto the floored simplex.
//
// Phase II trains one network on the argmax labels of P.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "saas/data.hpp"
#include "saas/matrix.hpp"
#include "saas/nn_core.hpp"

namespace saas {

enum class ResampleMode { fresh_gaussian, reset_to_w0 };

/// Scale of the accumulated posterior gradient per visited row.
enum class DeltaScale {
  batch_mean,  // 1/|B_u|, the gradient of the batch-averaged loss
  per_sample,  // 1
};

struct Phase2Schedule {
  double lr0 = 0.1;
  std::size_t halve_after_epochs = 50;
  double lr_stop = 0.001;
  /// Hard cap on Phase II epochs.
  std::size_t max_epochs = 1000;

  bool operator==(const Phase2Schedule&) const = default;
};

struct SaasConfig {
  std::vector<std::size_t> arch{2, 32, 32, 2};
  InitScale init_scale = InitScale::fan_in;
  /// Inner steps per outer epoch. 0 means inner_epochs * ceil(N_u / batch_u).
  std::size_t inner_steps = 0;
  std::size_t inner_epochs = 5;
  std::size_t outer_epochs = 75;
  double eta_w = 0.01;
  double eta_pu = 1.0;
  double beta = 1.0;
  double alpha_floor = 0.05;
  std::size_t batch_u = 100;
  std::size_t batch_l = 100;
  double momentum = 0.9;
  double langevin_variance = 1e-5 * 0.01;
  ResampleMode resample_mode = ResampleMode::fresh_gaussian;
  DeltaScale delta_scale = DeltaScale::batch_mean;
  /// Stop Phase I once the mean total-variation change of P drops below this; 0 disables.
  double early_stop_tv = 0.0;
  AugmentationSpec augmentation = IdentityAug{};
  std::uint64_t master_seed = 0;
  Phase2Schedule phase2;

  bool operator==(const SaasConfig&) const = default;
};

/// Throws ValidationError naming the first field that violates its range.
void validate(const SaasConfig& cfg, std::size_t num_classes);

struct PosteriorMatrix {
  Matrix P;  // N_u x K
  double floor = 0.0;
};

struct LearningCurve {
  std::vector<double> step_losses;
  std::vector<std::size_t> epoch_boundaries;  // step index where each epoch starts
};

/// Mean of the per-step losses.
double cumulative_loss(const LearningCurve& curve);

std::size_t inner_step_count(const SaasConfig& cfg, std::size_t n_unlabeled);

struct InnerResult {
  Matrix delta;  // N_u x K, accumulated posterior gradient
  LearningCurve curve;
  ModelParams final_params;
};

/// Weights an inner simulation starts from for `outer_seed`.
ModelParams inner_initial_params(const SaasConfig& cfg, std::uint64_t outer_seed);

InnerResult inner_simulation(const DatasetSplit& split, const PosteriorMatrix& posterior,
                             const SaasConfig& cfg, std::uint64_t outer_seed);

/// Row-wise project_floor(P - eta * delta, alpha).
PosteriorMatrix outer_epoch(const PosteriorMatrix& posterior, const Matrix& delta, double eta_pu,
                            double alpha);

/// Row-wise argmax, ties to the lowest class.
std::vector<int> pseudo_labels(const PosteriorMatrix& posterior);

/// Mean row entropy of P (natural log).
double posterior_mean_entropy(const PosteriorMatrix& posterior);

/// Fraction of positions where the two label vectors agree; NaN when empty.
double label_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Gaussian initialization of P projected onto the floored simplex.
PosteriorMatrix initial_posterior(std::size_t n_unlabeled, std::size_t K, const SaasConfig& cfg);

struct OuterEpochStats {
  std::size_t epoch = 0;        // 1-based count of completed outer epochs
  double cumulative_loss = 0.0;  // of the inner simulation that produced this update
  double accuracy = std::numeric_limits<double>::quiet_NaN();  // pseudo-labels after the update
  double mean_entropy = 0.0;
  double tv_change = 0.0;  // mean total-variation distance moved by P rows
};

struct Phase1Report {
  PosteriorMatrix posterior;
  double initial_accuracy = std::numeric_limits<double>::quiet_NaN();
  double initial_entropy = 0.0;
  std::vector<OuterEpochStats> epochs;
};

using Phase1Observer = std::function<void(const OuterEpochStats&, const PosteriorMatrix&)>;

Phase1Report run_phase1(const DatasetSplit& split, const SaasConfig& cfg,
                        const Phase1Observer& observer = {});

/// Learning-rate schedule: hold for a window of epochs, halve whenever the
/// window saw no validation improvement, stop once the rate drops below lr_stop.
class LrSchedule {
 public:
  LrSchedule(double lr0, std::size_t window, double lr_stop);
  void start(double initial_accuracy);
  /// Returns false when training should stop.
  bool end_epoch(double validation_accuracy);
  double lr() const { return lr_; }
  /// Every learning rate that was used, in order.
  const std::vector<double>& history() const { return history_; }

 private:
  double lr_, lr_stop_;
  std::size_t window_;
  std::size_t in_window_ = 0;
  bool improved_ = false;
  double best_ = -std::numeric_limits<double>::infinity();
  std::vector<double> history_;
};

struct Phase2Metrics {
  /// unlabeled_error compares the pseudo-labels Phase II trained on with the
  /// held-out true labels of the unlabeled set.
  double test_error = std::numeric_limits<double>::quiet_NaN();
  double unlabeled_error = std::numeric_limits<double>::quiet_NaN();
  double validation_error = std::numeric_limits<double>::quiet_NaN();
};

struct BaselineMetrics {
  double test_error = std::numeric_limits<double>::quiet_NaN();
  double validation_error = std::numeric_limits<double>::quiet_NaN();
};

struct Phase2Result {
  ModelParams params;
  Phase2Metrics metrics;
  std::vector<double> lr_history;
  std::size_t epochs = 0;
};

struct BaselineResult {
  ModelParams params;
  BaselineMetrics metrics;
  std::vector<double> lr_history;
  std::size_t epochs = 0;
};

Phase2Result run_phase2(const DatasetSplit& split, const std::vector<int>& y_hat,
                        const SaasConfig& cfg);

BaselineResult run_baseline(const DatasetSplit& split, const SaasConfig& cfg);

/// Classification error of `params` on `ds`; NaN for an empty set.
double error_rate(const ModelParams& params, const Dataset& ds);

struct SupervisedRun {
  std::size_t epochs = 10;
  std::size_t batch_size = 100;
  double lr = 0.1;
  double momentum = 0.0;
};

/// Plain fixed-rate SGD on (X, y) from init_params(arch, seed). Records the
/// mini-batch loss at the weights each step starts from.
LearningCurve train_supervised(const Matrix& X, const std::vector<int>& y, std::size_t K,
                               const std::vector<std::size_t>& arch, InitScale init_scale,
                               const SupervisedRun& run, std::uint64_t seed);

/// Mean loss of each epoch in `curve`.
std::vector<double> epoch_means(const LearningCurve& curve);

}  // namespace saas
