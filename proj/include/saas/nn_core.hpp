#pragma once

// Dense feed-forward softmax classifier: forward pass, soft-label losses,
// analytic gradients and the SGD / momentum / Langevin update.

#include <cstdint>
#include <utility>
#include <vector>

#include "saas/matrix.hpp"

namespace saas {

/// Probability clamp applied before every logarithm.
inline constexpr double kProbEps = 1e-12;

struct Layer {
  Matrix weight;  // out x in
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

/// Classifier weights. Hidden layers use ReLU; the output layer is softmax.
struct ModelParams {
  std::vector<Layer> layers;

  std::vector<std::size_t> arch() const;
  std::size_t input_dim() const { return layers.front().weight.cols; }
  std::size_t num_classes() const { return layers.back().weight.rows; }
  std::size_t parameter_count() const;

  bool operator==(const ModelParams&) const = default;
};

/// Same shape as `like`, every entry zero.
ModelParams zeros_like(const ModelParams& like);

/// Throws DimensionError if layers do not chain, ValidationError on non-finite entries.
void validate(const ModelParams& params);

enum class InitScale { unit, fan_in };

/// I.i.d. zero-mean Gaussian weights (variance 1 or 1/fan_in), zero biases.
ModelParams init_params(const std::vector<std::size_t>& arch, std::uint64_t seed,
                        InitScale scale = InitScale::fan_in);

/// Row-wise class probabilities, clamped to [kProbEps, 1].
Matrix forward(const ModelParams& params, const Matrix& X);

/// Mean over rows of -<log p_i, t_i>. Target rows must lie on the simplex (1e-6).
double soft_cross_entropy(const Matrix& probs, const Matrix& targets);

/// Mean over rows of -<p_i, log p_i>.
double entropy_penalty(const Matrix& probs);

struct LossAndGrad {
  double loss = 0.0;  // cross_entropy + beta * entropy when enabled
  double cross_entropy = 0.0;
  double entropy = 0.0;  // batch-mean output entropy (computed either way)
  ModelParams grad;
};

/// Backpropagated gradient of soft_cross_entropy + beta * entropy_penalty.
LossAndGrad grads(const ModelParams& params, const Matrix& X, const Matrix& targets,
                  double beta, bool include_entropy);

struct OptimizerState {
  double eta_w = 0.01;
  double momentum = 0.0;
  ModelParams velocity;
  double langevin_variance = 0.0;
};

/// Fresh optimizer state with zero velocity shaped like `params`.
OptimizerState make_optimizer(const ModelParams& params, double eta_w, double momentum,
                              double langevin_variance);

/// v' = momentum * v + grad; w' = w - eta_w * v' + n with n ~ N(0, variance I).
std::pair<ModelParams, OptimizerState> sgd_step(const ModelParams& params,
                                                const ModelParams& grad,
                                                const OptimizerState& state,
                                                std::uint64_t noise_seed);

/// In-place form of sgd_step; the result is identical.
void apply_sgd_step(ModelParams& params, const ModelParams& grad, OptimizerState& state,
                    std::uint64_t noise_seed);

/// One-hot rows for class ids in [0, K).
Matrix one_hot(const std::vector<int>& labels, std::size_t K);

/// Row-wise argmax, ties to the lowest index.
std::vector<int> argmax_rows(const Matrix& m);

}  // namespace saas
