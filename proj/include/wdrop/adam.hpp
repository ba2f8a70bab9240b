#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "wdrop/mlp.hpp"

namespace wdrop {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators for Adam, congruent to a model's parameters.
class AdamState {
 public:
  AdamState(const MlpModel& model, AdamConfig cfg = {})
      : cfg_(cfg), first_(Gradients::zeros_like(model)), second_(Gradients::zeros_like(model)) {
    if (!(cfg_.lr > 0 && cfg_.beta1 > 0 && cfg_.beta1 < 1 && cfg_.beta2 > 0 && cfg_.beta2 < 1 && cfg_.eps > 0))
      throw std::invalid_argument("AdamState: lr, beta1, beta2 and eps must be positive (betas < 1)");
  }

  const AdamConfig& config() const { return cfg_; }
  std::uint64_t step() const { return t_; }

  /// Bias-corrected Adam update in place. Non-finite gradients raise
  /// std::domain_error and leave both the model and the state untouched.
  void apply(MlpModel& model, const Gradients& grad) {
    auto& layers = model.layers_mut();
    if (grad.layers.size() != layers.size())
      throw std::invalid_argument("adam_step: gradient layer count does not match model");
    for (std::size_t k = 0; k < layers.size(); ++k)
      if (grad.layers[k].weight.rows() != layers[k].weight.rows() ||
          grad.layers[k].weight.cols() != layers[k].weight.cols() ||
          grad.layers[k].bias.size() != layers[k].bias.size())
        throw std::invalid_argument("adam_step: gradient shape does not match layer " + std::to_string(k));
    if (!grad.all_finite()) throw std::domain_error("adam_step: non-finite gradient, update skipped");

    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double step = cfg_.lr / c1;
    const double inv_c2 = 1.0 / c2;

    auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseAbs2();
      param.array() -= step * m.array() / ((v.array() * inv_c2).sqrt() + cfg_.eps);
    };
    for (std::size_t k = 0; k < layers.size(); ++k) {
      update(layers[k].weight, grad.layers[k].weight, first_.layers[k].weight, second_.layers[k].weight);
      update(layers[k].bias, grad.layers[k].bias, first_.layers[k].bias, second_.layers[k].bias);
    }
  }

 private:
  AdamConfig cfg_;
  Gradients first_;
  Gradients second_;
  std::uint64_t t_ = 0;
};

inline void adam_step(AdamState& state, MlpModel& model, const Gradients& grad) { state.apply(model, grad); }

}  // namespace wdrop
