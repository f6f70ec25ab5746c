#include "saas/nn_core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "saas/errors.hpp"
#include "saas/rng.hpp"

namespace saas {

namespace {

struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer (inputs[0] = X)
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix probs;                // unclamped softmax
};

void check_finite(const Matrix& m, std::size_t layer, const char* what) {
  for (double v : m.data) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite ") + what + " at layer " +
                             std::to_string(layer),
                         static_cast<std::ptrdiff_t>(layer));
    }
  }
}

Matrix affine(const Layer& layer, const Matrix& in) {
  const std::size_t n = in.rows, out = layer.weight.rows, d = layer.weight.cols;
  Matrix z(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    const double* a = in.data.data() + i * d;
    for (std::size_t o = 0; o < out; ++o) {
      const double* w = layer.weight.data.data() + o * d;
      double acc = layer.bias[o];
      for (std::size_t k = 0; k < d; ++k) acc += a[k] * w[k];
      z(i, o) = acc;
    }
  }
  return z;
}

void softmax_rows(Matrix& z) {
  for (std::size_t i = 0; i < z.rows; ++i) {
    auto r = z.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    double sum = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : r) v /= sum;
  }
}

ForwardCache forward_cached(const ModelParams& params, const Matrix& X) {
  if (params.layers.empty()) throw DimensionError("forward: model has no layers");
  if (X.cols != params.input_dim()) {
    throw DimensionError("forward: input has " + std::to_string(X.cols) +
                         " features, model expects " + std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  const std::size_t L = params.layers.size();
  cache.inputs.reserve(L);
  cache.pre.reserve(L);
  Matrix a = X;
  for (std::size_t l = 0; l < L; ++l) {
    Matrix z = affine(params.layers[l], a);
    check_finite(z, l, "pre-activation");
    cache.inputs.push_back(std::move(a));
    if (l + 1 < L) {
      a = z;
      for (double& v : a.data) v = v > 0.0 ? v : 0.0;
    } else {
      cache.probs = z;
      softmax_rows(cache.probs);
    }
    cache.pre.push_back(std::move(z));
  }
  return cache;
}

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw DimensionError(std::string(op) + ": shape mismatch");
  }
}

void require_same_shape(const ModelParams& a, const ModelParams& b, const char* op) {
  if (a.arch() != b.arch()) throw DimensionError(std::string(op) + ": parameter shape mismatch");
}

}  // namespace

std::vector<std::size_t> ModelParams::arch() const {
  std::vector<std::size_t> a;
  if (layers.empty()) return a;
  a.push_back(layers.front().weight.cols);
  for (const auto& l : layers) a.push_back(l.weight.rows);
  return a;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.data.size() + l.bias.size();
  return n;
}

ModelParams zeros_like(const ModelParams& like) {
  ModelParams z;
  z.layers.reserve(like.layers.size());
  for (const auto& l : like.layers) {
    z.layers.push_back({Matrix(l.weight.rows, l.weight.cols), std::vector<double>(l.bias.size())});
  }
  return z;
}

void validate(const ModelParams& params) {
  if (params.layers.empty()) throw DimensionError("model has no layers");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    if (layer.weight.data.size() != layer.weight.rows * layer.weight.cols ||
        layer.bias.size() != layer.weight.rows) {
      throw DimensionError("layer " + std::to_string(l) + " has inconsistent shape");
    }
    if (l > 0 && params.layers[l - 1].weight.rows != layer.weight.cols) {
      throw DimensionError("layer " + std::to_string(l) + " input does not match previous output");
    }
    for (double v : layer.weight.data)
      if (!std::isfinite(v)) throw ValidationError("non-finite weight in layer " + std::to_string(l));
    for (double v : layer.bias)
      if (!std::isfinite(v)) throw ValidationError("non-finite bias in layer " + std::to_string(l));
  }
}

ModelParams init_params(const std::vector<std::size_t>& arch, std::uint64_t seed, InitScale scale) {
  if (arch.size() < 2) throw DimensionError("architecture needs at least input and output sizes");
  for (auto s : arch)
    if (s == 0) throw DimensionError("architecture sizes must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ModelParams p;
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    Layer layer{Matrix(arch[l + 1], arch[l]), std::vector<double>(arch[l + 1], 0.0)};
    const double sd = scale == InitScale::unit ? 1.0 : 1.0 / std::sqrt(static_cast<double>(arch[l]));
    for (double& w : layer.weight.data) w = sd * normal(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Matrix forward(const ModelParams& params, const Matrix& X) {
  Matrix probs = forward_cached(params, X).probs;
  for (double& v : probs.data) v = clamp_prob(v);
  return probs;
}

double soft_cross_entropy(const Matrix& probs, const Matrix& targets) {
  require_same_shape(probs, targets, "soft_cross_entropy");
  if (probs.rows == 0) throw DimensionError("soft_cross_entropy: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows; ++i) {
    double sum = 0.0, row = 0.0;
    for (std::size_t k = 0; k < probs.cols; ++k) {
      const double t = targets(i, k);
      if (!(t >= -1e-6 && t <= 1.0 + 1e-6)) {
        throw ValidationError("soft_cross_entropy: target row " + std::to_string(i) + " off simplex");
      }
      sum += t;
      row -= t * std::log(clamp_prob(probs(i, k)));
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ValidationError("soft_cross_entropy: target row " + std::to_string(i) +
                            " sums to " + std::to_string(sum));
    }
    total += row;
  }
  return total / static_cast<double>(probs.rows);
}

double entropy_penalty(const Matrix& probs) {
  if (probs.rows == 0) throw DimensionError("entropy_penalty: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.rows; ++i) {
    for (std::size_t k = 0; k < probs.cols; ++k) {
      const double p = clamp_prob(probs(i, k));
      total -= p * std::log(p);
    }
  }
  return std::max(0.0, total / static_cast<double>(probs.rows));
}

LossAndGrad grads(const ModelParams& params, const Matrix& X, const Matrix& targets,
                  double beta, bool include_entropy) {
  ForwardCache cache = forward_cached(params, X);
  const Matrix& p = cache.probs;
  require_same_shape(p, targets, "grads");
  const std::size_t n = p.rows, K = p.cols;
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool use_entropy = include_entropy && beta != 0.0;

  Matrix clamped = p;
  for (double& v : clamped.data) v = clamp_prob(v);
  LossAndGrad out;
  out.cross_entropy = soft_cross_entropy(clamped, targets);
  out.entropy = entropy_penalty(clamped);
  out.loss = out.cross_entropy + (use_entropy ? beta * out.entropy : 0.0);

  // d loss / d logits
  Matrix delta(n, K);
  for (std::size_t i = 0; i < n; ++i) {
    double tsum = 0.0;
    for (std::size_t k = 0; k < K; ++k) tsum += targets(i, k);
    double H = 0.0;
    if (use_entropy)
      for (std::size_t k = 0; k < K; ++k) H -= clamped(i, k) * std::log(clamped(i, k));
    for (std::size_t k = 0; k < K; ++k) {
      double g = p(i, k) * tsum - targets(i, k);
      if (use_entropy) g -= beta * p(i, k) * (std::log(clamped(i, k)) + H);
      delta(i, k) = g * inv_n;
    }
  }

  out.grad = zeros_like(params);
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const Matrix& a = cache.inputs[l];
    Layer& g = out.grad.layers[l];
    const std::size_t od = g.weight.rows, id = g.weight.cols;
    for (std::size_t i = 0; i < n; ++i) {
      const double* ai = a.data.data() + i * id;
      for (std::size_t o = 0; o < od; ++o) {
        const double d = delta(i, o);
        if (d == 0.0) continue;
        g.bias[o] += d;
        double* gw = g.weight.data.data() + o * id;
        for (std::size_t k = 0; k < id; ++k) gw[k] += d * ai[k];
      }
    }
    if (l == 0) break;
    const Matrix& W = params.layers[l].weight;
    const Matrix& zprev = cache.pre[l - 1];
    Matrix next(n, id);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t o = 0; o < od; ++o) {
        const double d = delta(i, o);
        if (d == 0.0) continue;
        const double* w = W.data.data() + o * id;
        for (std::size_t k = 0; k < id; ++k) next(i, k) += d * w[k];
      }
      for (std::size_t k = 0; k < id; ++k)
        if (zprev(i, k) <= 0.0) next(i, k) = 0.0;
    }
    check_finite(next, l - 1, "gradient");
    delta = std::move(next);
  }
  return out;
}

OptimizerState make_optimizer(const ModelParams& params, double eta_w, double momentum,
                              double langevin_variance) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must be in [0, 1)");
  if (!(langevin_variance >= 0.0)) throw ValidationError("langevin_variance must be >= 0");
  return OptimizerState{eta_w, momentum, zeros_like(params), langevin_variance};
}

void apply_sgd_step(ModelParams& params, const ModelParams& grad, OptimizerState& state,
                    std::uint64_t noise_seed) {
  require_same_shape(params, grad, "sgd_step");
  require_same_shape(params, state.velocity, "sgd_step");
  if (!(state.langevin_variance >= 0.0)) throw ValidationError("langevin_variance must be >= 0");
  const bool noisy = state.langevin_variance > 0.0;
  Rng rng(noise_seed);
  std::normal_distribution<double> normal(0.0, noisy ? std::sqrt(state.langevin_variance) : 1.0);
  auto update = [&](std::vector<double>& w, const std::vector<double>& g, std::vector<double>& v) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = state.momentum * v[i] + g[i];
      w[i] -= state.eta_w * v[i];
      if (noisy) w[i] += normal(rng);
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight.data, grad.layers[l].weight.data,
           state.velocity.layers[l].weight.data);
    update(params.layers[l].bias, grad.layers[l].bias, state.velocity.layers[l].bias);
  }
}

std::pair<ModelParams, OptimizerState> sgd_step(const ModelParams& params, const ModelParams& grad,
                                                const OptimizerState& state,
                                                std::uint64_t noise_seed) {
  std::pair<ModelParams, OptimizerState> out{params, state};
  apply_sgd_step(out.first, grad, out.second, noise_seed);
  return out;
}

Matrix one_hot(const std::vector<int>& labels, std::size_t K) {
  Matrix m(labels.size(), K);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= K)
      throw ValidationError("one_hot: label out of range");
    m(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return m;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto r = m.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

}  // namespace saas
