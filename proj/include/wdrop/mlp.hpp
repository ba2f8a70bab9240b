#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wdrop/rng.hpp"

namespace wdrop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class HeadKind {
  point,     // m mean outputs
  gaussian,  // m mean outputs followed by m raw-scale outputs
};

inline const char* to_string(HeadKind h) { return h == HeadKind::point ? "point" : "gaussian"; }

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Feed-forward ReLU regressor. Dropout acts on hidden activations only.
class MlpModel {
 public:
  MlpModel() = default;

  MlpModel(std::vector<DenseLayer> layers, HeadKind head, double drop_rate)
      : layers_(std::move(layers)), head_(head), drop_rate_(drop_rate) {
    validate();
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  /// Mutable access for optimizers; callers must keep the layer shapes.
  std::vector<DenseLayer>& layers_mut() { return layers_; }

  HeadKind head() const { return head_; }
  double drop_rate() const { return drop_rate_; }

  std::size_t input_dim() const { return static_cast<std::size_t>(layers_.front().weight.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(layers_.back().weight.rows()); }
  /// Number of regression targets m.
  std::size_t target_dim() const {
    return head_ == HeadKind::gaussian ? output_dim() / 2 : output_dim();
  }
  std::size_t hidden_layers() const { return layers_.size() - 1; }
  std::size_t hidden_width(std::size_t k) const {
    return static_cast<std::size_t>(layers_[k].weight.rows());
  }

  /// Throws std::invalid_argument if any structural invariant is broken.
  void validate() const {
    if (layers_.size() < 2) throw std::invalid_argument("MlpModel: need at least one hidden layer");
    if (!(drop_rate_ >= 0.0 && drop_rate_ < 1.0))
      throw std::invalid_argument("MlpModel: drop rate must lie in [0, 1), got " +
                                  std::to_string(drop_rate_));
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& l = layers_[k];
      if (l.weight.rows() == 0 || l.weight.cols() == 0 || l.bias.size() != l.weight.rows())
        throw std::invalid_argument("MlpModel: malformed layer " + std::to_string(k));
      if (k > 0 && layers_[k - 1].weight.rows() != l.weight.cols())
        throw std::invalid_argument("MlpModel: layer " + std::to_string(k) +
                                    " input width does not match previous output");
      if (!l.weight.allFinite() || !l.bias.allFinite())
        throw std::invalid_argument("MlpModel: non-finite parameter in layer " + std::to_string(k));
    }
    if (head_ == HeadKind::gaussian && output_dim() % 2 != 0)
      throw std::invalid_argument("MlpModel: gaussian head needs an even number of outputs");
  }

 private:
  std::vector<DenseLayer> layers_;
  HeadKind head_ = HeadKind::point;
  double drop_rate_ = 0.0;
};

/// One sampled sub-network: a keep indicator per hidden unit.
struct DropoutMask {
  std::vector<Vector> keep;  // one 0/1 vector per hidden layer
  double rescale = 1.0;      // 1 / (1 - p)
};

/// Builds a model for layer_sizes = {d, h_1, ..., h_k, m}. Hidden layers get
/// He-normal weights, the output layer Glorot-uniform; all biases start at 0.
/// A gaussian head doubles the output layer to 2m units.
inline MlpModel init_mlp(const std::vector<std::size_t>& layer_sizes, HeadKind head, double drop_rate,
                         SeededRng& rng) {
  if (layer_sizes.size() < 3)
    throw std::invalid_argument("init_mlp: need input, at least one hidden and an output size");
  for (auto s : layer_sizes)
    if (s == 0) throw std::invalid_argument("init_mlp: layer sizes must be positive");
  if (!(drop_rate >= 0.0 && drop_rate < 1.0))
    throw std::invalid_argument("init_mlp: drop rate must lie in [0, 1)");

  std::vector<DenseLayer> layers;
  const std::size_t n = layer_sizes.size() - 1;
  for (std::size_t k = 0; k < n; ++k) {
    const auto fan_in = static_cast<Eigen::Index>(layer_sizes[k]);
    auto fan_out = static_cast<Eigen::Index>(layer_sizes[k + 1]);
    const bool is_output = (k + 1 == n);
    if (is_output && head == HeadKind::gaussian) fan_out *= 2;

    DenseLayer l{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
    if (!is_output) {
      const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (Eigen::Index j = 0; j < fan_in; ++j)
        for (Eigen::Index i = 0; i < fan_out; ++i) l.weight(i, j) = rng.normal(0.0, sd);
    } else {
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (Eigen::Index j = 0; j < fan_in; ++j)
        for (Eigen::Index i = 0; i < fan_out; ++i) l.weight(i, j) = rng.uniform(-a, a);
    }
    layers.push_back(std::move(l));
  }
  return MlpModel(std::move(layers), head, drop_rate);
}

/// Inverted dropout: each hidden unit survives with probability 1 - p and
/// survivors are scaled by 1 / (1 - p).
inline DropoutMask sample_mask(const MlpModel& model, SeededRng& rng) {
  DropoutMask mask;
  const double p = model.drop_rate();
  mask.rescale = 1.0 / (1.0 - p);
  mask.keep.reserve(model.hidden_layers());
  for (std::size_t k = 0; k < model.hidden_layers(); ++k) {
    Vector keep(static_cast<Eigen::Index>(model.hidden_width(k)));
    for (Eigen::Index i = 0; i < keep.size(); ++i) keep(i) = (p > 0.0 && rng.uniform() < p) ? 0.0 : 1.0;
    mask.keep.push_back(std::move(keep));
  }
  return mask;
}

/// Intermediate values of one batched pass, kept for backward().
struct ForwardCache {
  std::vector<Matrix> inputs;   // input to layer k (columns are samples)
  std::vector<Matrix> factors;  // relu'(z) * keep * rescale for hidden layer k
  Matrix output;                // output_dim x batch
};

namespace detail {

inline void check_masks(const MlpModel& model, std::span<const DropoutMask> masks, Eigen::Index batch) {
  if (masks.size() > 1 && static_cast<Eigen::Index>(masks.size()) != batch)
    throw std::invalid_argument("forward: need 0, 1 or batch-many masks");
  for (const auto& m : masks) {
    if (m.keep.size() != model.hidden_layers())
      throw std::invalid_argument("forward: mask layer count does not match model");
    if (!(m.rescale > 0.0)) throw std::invalid_argument("forward: mask rescale must be positive");
    for (std::size_t k = 0; k < m.keep.size(); ++k)
      if (static_cast<std::size_t>(m.keep[k].size()) != model.hidden_width(k))
        throw std::invalid_argument("forward: mask width does not match hidden layer " + std::to_string(k));
  }
}

}  // namespace detail

/// Batched forward pass over the columns of x (input_dim x batch).
/// masks: empty = full network; one mask = shared by all columns;
/// batch-many masks = one per column.
inline Matrix forward_batch(const MlpModel& model, const Matrix& x, std::span<const DropoutMask> masks,
                            ForwardCache* cache = nullptr) {
  if (static_cast<std::size_t>(x.rows()) != model.input_dim())
    throw std::invalid_argument("forward: input dimension " + std::to_string(x.rows()) +
                                " does not match model input " + std::to_string(model.input_dim()));
  detail::check_masks(model, masks, x.cols());

  const auto& layers = model.layers();
  if (cache) {
    cache->inputs.clear();
    cache->factors.clear();
  }
  Matrix a = x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Matrix z = layers[k].weight * a;
    z.colwise() += layers[k].bias;
    if (cache) cache->inputs.push_back(std::move(a));
    if (k + 1 == layers.size()) {
      a = std::move(z);
      break;
    }
    Matrix factor = (z.array() > 0.0).cast<double>().matrix();
    if (masks.size() == 1) {
      factor.array().colwise() *= masks[0].keep[k].array() * masks[0].rescale;
    } else if (!masks.empty()) {
      for (Eigen::Index c = 0; c < factor.cols(); ++c)
        factor.col(c).array() *= masks[static_cast<std::size_t>(c)].keep[k].array() *
                                 masks[static_cast<std::size_t>(c)].rescale;
    }
    a = z.cwiseProduct(factor);
    if (cache) cache->factors.push_back(std::move(factor));
  }
  if (cache) cache->output = a;
  return a;
}

inline Vector forward(const MlpModel& model, std::span<const double> x, const DropoutMask* mask = nullptr) {
  Matrix in = Eigen::Map<const Matrix>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  std::span<const DropoutMask> masks;
  if (mask) masks = std::span<const DropoutMask>(mask, 1);
  return forward_batch(model, in, masks).col(0);
}

/// Same shape as the model's parameters.
struct Gradients {
  std::vector<DenseLayer> layers;

  static Gradients zeros_like(const MlpModel& model) {
    Gradients g;
    for (const auto& l : model.layers())
      g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    return g;
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }
};

/// Accumulates into grad the gradient of sum(adjoint .* output) for the pass
/// recorded in cache. adjoint has the shape of cache.output.
inline void backward(const MlpModel& model, const ForwardCache& cache, const Matrix& adjoint, Gradients& grad) {
  const auto& layers = model.layers();
  if (adjoint.rows() != cache.output.rows() || adjoint.cols() != cache.output.cols())
    throw std::invalid_argument("backward: adjoint shape does not match forward output");
  if (grad.layers.size() != layers.size() || cache.inputs.size() != layers.size())
    throw std::invalid_argument("backward: gradient or cache does not match model");

  Matrix delta = adjoint;
  for (std::size_t k = layers.size(); k-- > 0;) {
    grad.layers[k].weight.noalias() += delta * cache.inputs[k].transpose();
    grad.layers[k].bias.noalias() += delta.rowwise().sum();
    if (k == 0) break;
    Matrix back = layers[k].weight.transpose() * delta;
    delta = back.cwiseProduct(cache.factors[k - 1]);
  }
}

inline std::size_t parameter_count(const MlpModel& model) {
  std::size_t n = 0;
  for (const auto& l : model.layers()) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

/// Flattened view of all parameters, layer by layer (weights column-major, then bias).
inline Vector flatten(const std::vector<DenseLayer>& layers) {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    out.segment(at, l.weight.size()) = l.weight.reshaped();
    at += l.weight.size();
    out.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return out;
}

inline void unflatten(const Vector& flat, std::vector<DenseLayer>& layers) {
  Eigen::Index at = 0;
  for (auto& l : layers) {
    l.weight.reshaped() = flat.segment(at, l.weight.size());
    at += l.weight.size();
    l.bias = flat.segment(at, l.bias.size());
    at += l.bias.size();
  }
  if (at != flat.size()) throw std::invalid_argument("unflatten: size mismatch");
}

}  // namespace wdrop
