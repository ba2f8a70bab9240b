#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wdrop/adam.hpp"
#include "wdrop/dataset.hpp"
#include "wdrop/losses.hpp"
#include "wdrop/method.hpp"
#include "wdrop/mlp.hpp"
#include "wdrop/rng.hpp"

namespace wdrop {

/// Raised when a training loss or gradient stops being finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t step, double loss, const std::string& what)
      : std::runtime_error(what), step_(step), loss_(loss) {}
  std::size_t step() const { return step_; }
  double loss() const { return loss_; }

 private:
  std::size_t step_;
  double loss_;
};

struct TrainedModel {
  MethodConfig config;
  std::vector<MlpModel> members;  // one model unless the method is an ensemble
};

/// Called once per epoch with (member index, epoch, mean batch loss).
using EpochCallback = std::function<void(std::size_t, std::size_t, double)>;

namespace detail {

inline std::vector<DropoutMask> sample_masks(const MlpModel& model, std::size_t n, SeededRng& rng) {
  std::vector<DropoutMask> masks;
  masks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) masks.push_back(sample_mask(model, rng));
  return masks;
}

// One optimization step on the batch (x: d x B, y: m x B). Returns the loss.
inline double train_step(const MethodConfig& cfg, MlpModel& model, AdamState& adam, const Matrix& x,
                         const Matrix& y, SeededRng& mask_rng, Gradients& grad) {
  for (auto& l : grad.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  const auto batch = static_cast<std::size_t>(x.cols());
  double loss = 0.0;

  if (cfg.method == Method::wdropout) {
    // L masks, each shared across the whole mini-batch.
    const std::size_t L = cfg.train_samples;
    std::vector<ForwardCache> caches(L);
    std::vector<Matrix> outputs(L);
    for (std::size_t l = 0; l < L; ++l) {
      DropoutMask mask = sample_mask(model, mask_rng);
      outputs[l] = forward_batch(model, x, std::span<const DropoutMask>(&mask, 1), &caches[l]);
    }
    std::vector<Matrix> adjoints;
    loss = wdropout_batch(outputs, y, &adjoints);
    if (!std::isfinite(loss)) return loss;
    for (std::size_t l = 0; l < L; ++l) backward(model, caches[l], adjoints[l], grad);
  } else {
    std::vector<DropoutMask> masks;
    if (uses_dropout(cfg.method) && model.drop_rate() > 0.0) masks = sample_masks(model, batch, mask_rng);
    ForwardCache cache;
    Matrix out = forward_batch(model, x, masks, &cache);
    Matrix adjoint;
    loss = is_parametric(cfg.method) ? gaussian_nll_batch(out, y, &adjoint) : mse_batch(out, y, &adjoint);
    if (!std::isfinite(loss)) return loss;
    backward(model, cache, adjoint, grad);
  }
  adam_step(adam, model, grad);
  return loss;
}

inline MlpModel train_member(const MethodConfig& cfg, const Matrix& x, const Matrix& y, SeededRng rng,
                             std::size_t member, const EpochCallback& on_epoch) {
  std::vector<std::size_t> sizes{static_cast<std::size_t>(x.rows())};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(static_cast<std::size_t>(y.rows()));
  const double p = uses_dropout(cfg.method) ? cfg.drop_rate : 0.0;
  const HeadKind head = is_parametric(cfg.method) ? HeadKind::gaussian : HeadKind::point;

  SeededRng init_rng = rng.split(0);
  SeededRng order_rng = rng.split(1);
  SeededRng mask_rng = rng.split(2);
  MlpModel model = init_mlp(sizes, head, p, init_rng);
  AdamState adam(model, AdamConfig{cfg.lr});
  Gradients grad = Gradients::zeros_like(model);

  const auto n = static_cast<std::size_t>(x.cols());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, order_rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      std::vector<Eigen::Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(stop));
      Matrix xb = x(Eigen::all, idx);
      Matrix yb = y(Eigen::all, idx);
      double loss = 0.0;
      try {
        loss = train_step(cfg, model, adam, xb, yb, mask_rng, grad);
      } catch (const std::domain_error& e) {
        throw TrainingDiverged(step, loss, std::string("training diverged at step ") + std::to_string(step) +
                                               " (member " + std::to_string(member) + "): " + e.what());
      }
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "training diverged at step " << step << " (member " << member << ", epoch " << epoch
           << "): loss = " << loss;
        throw TrainingDiverged(step, loss, os.str());
      }
      epoch_loss += loss;
      ++batches;
      ++step;
    }
    if (on_epoch) on_epoch(member, epoch, epoch_loss / static_cast<double>(batches));
  }
  return model;
}

}  // namespace detail

/// Trains the network(s) of one method on an (already normalized) dataset.
/// Ensemble members get independent streams rng.split(member).
inline TrainedModel train(const MethodConfig& cfg, const RegressionDataset& data, const SeededRng& rng,
                          const EpochCallback& on_epoch = {}) {
  cfg.validate();
  data.validate();
  const Matrix x = data.features.transpose();
  const Matrix y = data.targets.transpose();
  TrainedModel out;
  out.config = cfg;
  const std::size_t members = is_ensemble(cfg.method) ? cfg.ensemble_size : 1;
  for (std::size_t k = 0; k < members; ++k)
    out.members.push_back(detail::train_member(cfg, x, y, rng.split(k), k, on_epoch));
  return out;
}

}  // namespace wdrop
