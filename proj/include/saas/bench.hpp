#pragma once

// Desk-scale experiment harness. Every experiment is a pure function of its
// inputs: per-run seeds come from derive_seed(master, experiment, index), so
// sweep points can run in any order and still produce identical tables.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "saas/data.hpp"
#include "saas/saas_core.hpp"

namespace saas::bench {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct ExperimentResult {
  std::string kind;
  std::vector<Table> tables;
  std::uint64_t master_seed = 0;
  double wall_seconds = 0.0;

  const Table& table(const std::string& name) const;
};

/// Doubles use 17 significant digits; NaN is written as an empty field.
std::string format_cell(const Cell& cell);
std::string to_csv(const Table& table);

enum class DatasetKind { two_moons, blobs, idx, csv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::two_moons;
  std::size_t n = 1000;
  double noise = 0.1;            // two_moons noise / blobs sigma
  std::size_t classes = 3;       // blobs
  std::size_t dim = 2;           // blobs
  double separation = 5.0;       // blobs: centers at separation * e_k (cycled over dims)
  std::string images_path;       // idx
  std::string labels_path;       // idx
  std::string csv_path;          // csv
  std::size_t max_samples = 0;   // idx/csv: keep a seeded random subset of this size; 0 keeps all

  bool operator==(const DatasetSpec&) const = default;
};

/// Builds the dataset; generated kinds use `seed`, file kinds use it for subsetting.
Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed);

struct SplitSpec {
  SplitSizes sizes{6, 400, 50, 0};
  SplitOptions options{};

  bool operator==(const SplitSpec&) const = default;
};

/// Seeds of one replicate of an experiment.
struct ReplicateSeeds {
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t corruption = 0;
  std::uint64_t init = 0;
  std::uint64_t saas = 0;  // master_seed of the SaaS run
};
ReplicateSeeds replicate_seeds(std::uint64_t master, const std::string& experiment,
                               std::size_t index);

using Progress = std::function<void(const std::string&)>;

struct RunOptions {
  std::size_t jobs = 1;
  Progress progress{};
};

struct CorruptionParams {
  std::vector<double> fractions{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t n_seeds = 3;
  std::size_t epochs_budget = 10;
  double lr = 0.1;
  std::size_t batch_size = 100;
  CorruptionMode mode = CorruptionMode::uniform;

  bool operator==(const CorruptionParams&) const = default;
};

/// Fully labeled training on corrupted labels at a fixed rate, no augmentation.
/// Tables: trajectory(fraction, seed, epoch, loss), summary(fraction, mean_LT, std_LT).
ExperimentResult corruption_speed_experiment(const SaasConfig& base, const DatasetSpec& data,
                                             const CorruptionParams& params,
                                             const RunOptions& opts = {});

struct OuterEpochParams {
  std::vector<std::size_t> m_list{1, 10, 40};
  std::size_t probe_epochs = 10;
  std::size_t n_seeds = 3;
  double probe_lr = 0.1;
  std::size_t probe_batch = 100;

  bool operator==(const OuterEpochParams&) const = default;
};

/// Epoch (1-based) whose loss the outer-epoch summary reports.
inline constexpr std::size_t kProbeEpoch = 2;

/// One Phase I run per seed with snapshots at each M; a fresh network is then
/// trained on each snapshot's pseudo-labels.
/// Tables: trajectory(M, seed, epoch, loss), snapshot(M, seed, pseudo_label_accuracy),
/// summary(M, median_epoch2_loss, mean_epoch2_loss).
ExperimentResult outer_epoch_speed_experiment(const SaasConfig& cfg, const DatasetSpec& data,
                                              const SplitSpec& split_spec,
                                              const OuterEpochParams& params,
                                              const RunOptions& opts = {});

struct SweepParams {
  std::vector<std::size_t> unlabeled_counts{50, 200, 800};
  std::size_t n_seeds = 3;

  bool operator==(const SweepParams&) const = default;
};

/// Full SaaS per unlabeled count per seed. N_u = 0 runs the supervised baseline.
/// Tables: runs(n_unlabeled, seed, test_error, unlabeled_error),
/// summary(n_unlabeled, mean_test_accuracy, std_test_accuracy).
ExperimentResult unlabeled_sweep_experiment(const SaasConfig& cfg, const DatasetSpec& data,
                                            const SplitSpec& split_spec,
                                            const SweepParams& params,
                                            const RunOptions& opts = {});

inline const std::vector<std::string> kSslMetrics{
    "baseline_test_error", "saas_unlabeled_error", "saas_test_error"};

/// Baseline, Phase I and Phase II per seed.
/// Tables: runs(seed, metric, value), summary(metric, mean, std),
/// phase1(seed, outer_epoch, cumulative_loss, pseudo_label_accuracy, mean_entropy),
/// posterior(seed, index, true_label, pseudo_label, p0..p{K-1}).
ExperimentResult run_ssl(const SaasConfig& cfg, const DatasetSpec& data,
                         const SplitSpec& split_spec, std::size_t n_seeds,
                         const RunOptions& opts = {});

/// Supervised baseline only. Tables: runs(seed, test_error, validation_error), summary.
ExperimentResult run_baseline_experiment(const SaasConfig& cfg, const DatasetSpec& data,
                                         const SplitSpec& split_spec, std::size_t n_seeds,
                                         const RunOptions& opts = {});

double mean(const std::vector<double>& v);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(const std::vector<double>& v);
double median(std::vector<double> v);

/// Writes <kind>_<table>.csv per table and <kind>.json, each via write-then-rename.
std::vector<std::filesystem::path> write_artifacts(const ExperimentResult& result,
                                                   const std::filesystem::path& out_dir,
                                                   const nlohmann::ordered_json& config_echo);

/// Write `contents` to a temporary sibling and rename it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

/// Runs fn(0..n-1) on up to `jobs` threads.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace saas::bench
