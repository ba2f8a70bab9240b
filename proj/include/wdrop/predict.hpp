#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "wdrop/losses.hpp"
#include "wdrop/method.hpp"
#include "wdrop/mlp.hpp"
#include "wdrop/rng.hpp"
#include "wdrop/train.hpp"

namespace wdrop {

/// Per-point Gaussian summary (mu_i, sigma_i). Both are N x m.
struct PredictiveDistribution {
  Matrix mu;
  Matrix sigma;

  void validate() const {
    if (mu.rows() != sigma.rows() || mu.cols() != sigma.cols())
      throw std::invalid_argument("PredictiveDistribution: mu and sigma shapes differ");
    if ((sigma.array() < 0.0).any()) throw std::invalid_argument("PredictiveDistribution: negative sigma");
  }
};

namespace detail {

// Running mean / population variance per matrix element (Welford).
struct RunningMoments {
  Matrix mean, m2;
  std::size_t n = 0;

  void add(const Matrix& x) {
    if (n == 0) {
      mean = Matrix::Zero(x.rows(), x.cols());
      m2 = Matrix::Zero(x.rows(), x.cols());
    }
    ++n;
    Matrix delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2.array() += delta.array() * (x - mean).array();
  }
  Matrix variance() const { return m2 / static_cast<double>(n); }
};

inline void split_gaussian_output(const Matrix& out, std::size_t m, Matrix& mu, Matrix& var) {
  const auto mm = static_cast<Eigen::Index>(m);
  mu = out.topRows(mm);
  var = out.bottomRows(mm).unaryExpr([](double r) { return head_variance(r); });
}

}  // namespace detail

/// Dropout sampling at inference (MC dropout and W-dropout): T masked passes,
/// mu = sample mean, sigma^2 = population variance + lambda. Each pass uses
/// one mask for all rows of x, so every input sees T independent sub-networks.
inline PredictiveDistribution predict_dropout(const MlpModel& model, const Matrix& x, std::size_t T, double lambda,
                                              SeededRng& rng) {
  if (T < 2) throw std::invalid_argument("predict_dropout: need T >= 2 passes");
  if (!(lambda >= 0.0)) throw std::invalid_argument("predict_dropout: lambda must be >= 0");
  if (model.head() != HeadKind::point) throw std::invalid_argument("predict_dropout: expects a point-head model");
  const Matrix xt = x.transpose();
  detail::RunningMoments acc;
  for (std::size_t t = 0; t < T; ++t) {
    DropoutMask mask = sample_mask(model, rng);
    acc.add(forward_batch(model, xt, std::span<const DropoutMask>(&mask, 1)));
  }
  PredictiveDistribution out;
  out.mu = acc.mean.transpose();
  out.sigma = (acc.variance().array() + lambda).sqrt().matrix().transpose();
  return out;
}

/// DE aggregate of M point predictions (each N x m): mean of member means and
/// population variance of the member means.
inline PredictiveDistribution combine_point_members(std::span<const Matrix> member_mu) {
  if (member_mu.size() < 2) throw std::invalid_argument("combine_point_members: need at least 2 members for a variance");
  detail::RunningMoments acc;
  for (const auto& m : member_mu) acc.add(m);
  return {acc.mean, acc.variance().cwiseSqrt()};
}

/// Moments of an equally weighted Gaussian mixture (PU-DE, PU-MC):
/// mu* = mean mu_k, sigma*^2 = mean(sigma_k^2 + mu_k^2) - mu*^2.
inline PredictiveDistribution combine_gaussian_members(std::span<const Matrix> member_mu,
                                                       std::span<const Matrix> member_sigma) {
  if (member_mu.empty() || member_mu.size() != member_sigma.size())
    throw std::invalid_argument("combine_gaussian_members: need matching, non-empty member lists");
  detail::RunningMoments acc;
  Matrix mean_var = Matrix::Zero(member_mu[0].rows(), member_mu[0].cols());
  for (std::size_t k = 0; k < member_mu.size(); ++k) {
    acc.add(member_mu[k]);
    mean_var += member_sigma[k].cwiseAbs2();
  }
  mean_var /= static_cast<double>(member_mu.size());
  // mean(sigma^2 + mu^2) - mu*^2 == mean(sigma^2) + popvar(mu)
  return {acc.mean, (mean_var + acc.variance()).cwiseSqrt()};
}

/// Prediction of a single parametric (gaussian head) network.
inline PredictiveDistribution predict_parametric(const MlpModel& model, const Matrix& x,
                                                 const DropoutMask* mask = nullptr) {
  if (model.head() != HeadKind::gaussian) throw std::invalid_argument("predict_parametric: expects a gaussian head");
  std::span<const DropoutMask> masks;
  if (mask) masks = std::span<const DropoutMask>(mask, 1);
  Matrix out = forward_batch(model, x.transpose(), masks);
  Matrix mu, var;
  detail::split_gaussian_output(out, model.target_dim(), mu, var);
  return {mu.transpose(), var.cwiseSqrt().transpose()};
}

/// Ensemble prediction. Point-head members give the DE aggregate,
/// gaussian-head members the mixture moments.
inline PredictiveDistribution predict_ensemble(std::span<const MlpModel> members, const Matrix& x) {
  if (members.empty()) throw std::invalid_argument("predict_ensemble: no members");
  std::vector<Matrix> mus, sigmas;
  const bool gaussian = members.front().head() == HeadKind::gaussian;
  for (const auto& m : members) {
    if ((m.head() == HeadKind::gaussian) != gaussian)
      throw std::invalid_argument("predict_ensemble: members mix point and gaussian heads");
    if (gaussian) {
      auto p = predict_parametric(m, x);
      mus.push_back(std::move(p.mu));
      sigmas.push_back(std::move(p.sigma));
    } else {
      mus.push_back(forward_batch(m, x.transpose(), {}).transpose());
    }
  }
  return gaussian ? combine_gaussian_members(mus, sigmas) : combine_point_members(mus);
}

/// PU-MC: T dropout samples of a parametric network, combined as a mixture.
inline PredictiveDistribution predict_pu_mc(const MlpModel& model, const Matrix& x, std::size_t T, SeededRng& rng) {
  if (T < 2) throw std::invalid_argument("predict_pu_mc: need T >= 2 passes");
  std::vector<Matrix> mus, sigmas;
  for (std::size_t t = 0; t < T; ++t) {
    DropoutMask mask = sample_mask(model, rng);
    auto p = predict_parametric(model, x, &mask);
    mus.push_back(std::move(p.mu));
    sigmas.push_back(std::move(p.sigma));
  }
  return combine_gaussian_members(mus, sigmas);
}

/// Predictive distribution of a trained model according to its method.
inline PredictiveDistribution predict(const TrainedModel& model, const Matrix& x, SeededRng& rng) {
  const auto& cfg = model.config;
  switch (cfg.method) {
    case Method::wdropout:
      return predict_dropout(model.members.at(0), x, cfg.inference_samples, 0.0, rng);
    case Method::mc:
      return predict_dropout(model.members.at(0), x, cfg.inference_samples, cfg.mc_lambda, rng);
    case Method::pu:
      return predict_parametric(model.members.at(0), x);
    case Method::de:
    case Method::pu_de:
      return predict_ensemble(model.members, x);
    case Method::pu_mc:
      return predict_pu_mc(model.members.at(0), x, cfg.inference_samples, rng);
  }
  throw std::logic_error("predict: unhandled method");
}

}  // namespace wdrop
