#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "saas/matrix.hpp"
#include "saas/rng.hpp"

namespace saas {

struct Dataset {
  Matrix X;            // N x d
  std::vector<int> y;  // class ids in [0, K)
  std::size_t K = 0;
  std::string name;

  std::size_t size() const { return y.size(); }
  std::size_t dim() const { return X.cols; }
};

/// Throws ValidationError on out-of-range labels, empty data or non-finite features.
void validate(const Dataset& ds);

/// Subset of `ds` at `indices`, in that order.
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

/// Labeled / unlabeled / validation / test partition of one dataset.
/// `unlabeled_true_y` is for evaluation code only; training never reads it.
struct DatasetSplit {
  Dataset labeled;
  Matrix unlabeled_X;
  std::vector<int> unlabeled_true_y;
  Dataset validation;
  Dataset test;
  std::size_t K = 0;

  // Row indices into the source dataset.
  std::vector<std::size_t> labeled_idx, unlabeled_idx, validation_idx, test_idx;

  std::size_t n_unlabeled() const { return unlabeled_X.rows; }
};

Dataset make_two_moons(std::size_t n, double noise_sigma, std::uint64_t seed);
Dataset make_blobs(std::size_t n, const Matrix& centers, double sigma, std::uint64_t seed);

/// IDX image/label pair (magics 0x00000803 / 0x00000801). Pixels scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// CSV with header f0..f{d-1},label.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

struct SplitSizes {
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
  std::size_t validation = 0;
  /// 0 means "everything left over".
  std::size_t test = 0;

  bool operator==(const SplitSizes&) const = default;
};

struct SplitOptions {
  bool balanced = true;
  /// Also place the labeled samples in the unlabeled pool.
  bool union_labeled = false;

  bool operator==(const SplitOptions&) const = default;
};

/// Uniform random partition. Indices are drawn from one permutation in the
/// order labeled, validation, test, unlabeled, so for a fixed seed the first
/// three sets do not depend on `sizes.unlabeled` when `sizes.test` is fixed.
DatasetSplit split(const Dataset& ds, const SplitSizes& sizes, const SplitOptions& opts,
                   std::uint64_t seed);

enum class CorruptionMode {
  wrong_class,  // replacement drawn from the K-1 other classes
  uniform,      // replacement drawn from all K classes
};

/// Exactly round(fraction * N) uniformly chosen entries receive a new label.
std::vector<int> corrupt_labels(const std::vector<int>& y, double fraction, std::size_t K,
                                std::uint64_t seed,
                                CorruptionMode mode = CorruptionMode::wrong_class);

struct IdentityAug {
  bool operator==(const IdentityAug&) const = default;
};
struct GaussianJitter {
  double sigma = 0.0;
  bool operator==(const GaussianJitter&) const = default;
};
struct TranslateFlip {
  int max_shift = 0;
  bool flip = false;
  bool operator==(const TranslateFlip&) const = default;
};
using AugmentationSpec = std::variant<IdentityAug, GaussianJitter, TranslateFlip>;

void validate(const AugmentationSpec& spec);
bool is_identity(const AugmentationSpec& spec);

/// Draws one group element for `x` and applies it.
std::vector<double> apply_augmentation(const AugmentationSpec& spec, std::span<const double> x,
                                       std::uint64_t seed);

/// Shift a square image by `dx` columns and `dy` rows with zero fill.
std::vector<double> translate_image(std::span<const double> x, int dx, int dy);
std::vector<double> flip_horizontal(std::span<const double> x);

/// Augment every row of `X` with per-row seeds derived from `seed`.
Matrix augment_rows(const AugmentationSpec& spec, const Matrix& X, std::uint64_t seed);

struct BatchSchedule {
  std::vector<std::vector<std::size_t>> batches;
  std::size_t batch_size = 0;
};

/// Shuffled partition of 0..n-1 into batches; the last one may be short.
BatchSchedule epoch_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed);

/// Endless stream of mini-batches over 0..n-1, reshuffled at each pass.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed);
  const std::vector<std::size_t>& next();
  std::size_t steps_per_epoch() const { return schedule_.batches.size(); }
  std::size_t epochs_started() const { return epoch_; }

 private:
  std::size_t n_, batch_size_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t pos_ = 0;
  BatchSchedule schedule_;
};

}  // namespace saas
