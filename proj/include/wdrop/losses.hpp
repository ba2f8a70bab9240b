#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "wdrop/mlp.hpp"

namespace wdrop {

/// Per-coordinate mean and population variance (divide by L) of L sub-network
/// predictions. Rows of samples are passes, columns are output coordinates.
struct SampleStats {
  Vector mean;
  Vector var;
};

inline SampleStats sample_stats(const Matrix& samples) {
  if (samples.rows() == 0 || samples.cols() == 0) throw std::invalid_argument("sample_stats: empty sample");
  SampleStats st;
  st.mean = samples.colwise().mean().transpose();
  st.var = (samples.rowwise() - st.mean.transpose()).array().square().colwise().mean().transpose();
  return st;
}

/// Squared 2-Wasserstein distance between N(mu1, sigma1^2) and N(mu2, sigma2^2).
inline double ws2_squared_gaussians(double mu1, double sigma1, double mu2, double sigma2) {
  if (sigma1 < 0 || sigma2 < 0) throw std::invalid_argument("ws2_squared_gaussians: negative sigma");
  return (mu1 - mu2) * (mu1 - mu2) + (sigma1 - sigma2) * (sigma1 - sigma2);
}

namespace detail {

// W-dropout loss of one coordinate from its L pass values f:
//   (mu - y)^2 + (sigma - sqrt((mu - y)^2 + sigma^2))^2
// If grad is non-empty it receives d loss / d f_l. The sigma path stays finite
// as sigma -> 0 because d sigma / d f_l = (f_l - mu) / (L sigma) and
// |f_l - mu| <= sqrt(L) sigma; at sigma == 0 that term is exactly zero.
inline double wdropout_coord(std::span<const double> f, double y, std::span<double> grad) {
  const double L = static_cast<double>(f.size());
  double mu = 0.0;
  for (double v : f) mu += v;
  mu /= L;
  double var = 0.0;
  for (double v : f) var += (v - mu) * (v - mu);
  var /= L;
  const double sigma = std::sqrt(var);
  const double d = mu - y;
  const double s = std::sqrt(d * d + var);
  const double gap = sigma - s;
  const double loss = d * d + gap * gap;
  if (!grad.empty()) {
    double dl_dd = 2.0 * d;
    double dl_dsigma = 0.0;
    if (s > 0.0) {
      dl_dd -= 2.0 * gap * d / s;
      dl_dsigma = 2.0 * gap * (1.0 - sigma / s);
    }
    for (std::size_t l = 0; l < f.size(); ++l) {
      double g = dl_dd / L;
      if (sigma > 0.0) g += dl_dsigma * (f[l] - mu) / (L * sigma);
      grad[l] = g;
    }
  }
  return loss;
}

}  // namespace detail

/// W-dropout loss of one data point: samples is L x m, y has m entries.
/// Coordinates are summed.
inline double wdropout_loss(const Matrix& samples, const Vector& y) {
  if (samples.rows() < 2) throw std::invalid_argument("wdropout_loss: need at least 2 sub-network samples");
  if (samples.cols() != y.size()) throw std::invalid_argument("wdropout_loss: target size mismatch");
  double total = 0.0;
  std::vector<double> f(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    for (Eigen::Index l = 0; l < samples.rows(); ++l) f[static_cast<std::size_t>(l)] = samples(l, c);
    total += detail::wdropout_coord(f, y(c), {});
  }
  return total;
}

/// Batch W-dropout objective: the mean over columns of y (targets, m x B) of
/// the per-point loss, where passes[l] (m x B) holds the l-th sub-network's
/// outputs. If adjoints is given it receives d objective / d passes[l].
inline double wdropout_batch(const std::vector<Matrix>& passes, const Matrix& y, std::vector<Matrix>* adjoints) {
  const std::size_t L = passes.size();
  if (L < 2) throw std::invalid_argument("wdropout_batch: need at least 2 sub-network samples");
  for (const auto& p : passes)
    if (p.rows() != y.rows() || p.cols() != y.cols())
      throw std::invalid_argument("wdropout_batch: pass shape does not match targets");
  const Eigen::Index m = y.rows(), batch = y.cols();
  if (adjoints) adjoints->assign(L, Matrix(m, batch));

  std::vector<double> f(L), g(L);
  double total = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (Eigen::Index i = 0; i < batch; ++i)
    for (Eigen::Index c = 0; c < m; ++c) {
      for (std::size_t l = 0; l < L; ++l) f[l] = passes[l](c, i);
      total += detail::wdropout_coord(f, y(c, i), adjoints ? std::span<double>(g) : std::span<double>{});
      if (adjoints)
        for (std::size_t l = 0; l < L; ++l) (*adjoints)[l](c, i) = g[l] * inv_b;
    }
  return total * inv_b;
}

/// Mean over the batch of the summed squared error.
inline double mse_batch(const Matrix& out, const Matrix& y, Matrix* adjoint) {
  if (out.rows() != y.rows() || out.cols() != y.cols())
    throw std::invalid_argument("mse_batch: output shape does not match targets");
  const double inv_b = 1.0 / static_cast<double>(y.cols());
  Matrix diff = out - y;
  if (adjoint) *adjoint = 2.0 * inv_b * diff;
  return diff.squaredNorm() * inv_b;
}

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Variance floor added after softplus in the parametric head.
inline constexpr double kVarianceFloor = 1e-6;

/// Predicted variance of a gaussian head from its raw-scale output.
inline double head_variance(double raw) { return softplus(raw) + kVarianceFloor; }

/// Gaussian NLL (constant dropped) averaged over the batch and summed over
/// coordinates. out is 2m x B (means, then raw scales); y is m x B.
inline double gaussian_nll_batch(const Matrix& out, const Matrix& y, Matrix* adjoint) {
  const Eigen::Index m = y.rows(), batch = y.cols();
  if (out.rows() != 2 * m || out.cols() != batch)
    throw std::invalid_argument("gaussian_nll_batch: output shape does not match targets");
  const double inv_b = 1.0 / static_cast<double>(batch);
  if (adjoint) adjoint->resize(2 * m, batch);
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i)
    for (Eigen::Index c = 0; c < m; ++c) {
      const double mu = out(c, i), raw = out(m + c, i);
      const double var = head_variance(raw);
      const double d = mu - y(c, i);
      total += 0.5 * std::log(var) + d * d / (2.0 * var);
      if (adjoint) {
        (*adjoint)(c, i) = d / var * inv_b;
        const double dl_dvar = 0.5 / var - d * d / (2.0 * var * var);
        (*adjoint)(m + c, i) = dl_dvar * sigmoid(raw) * inv_b;
      }
    }
  return total * inv_b;
}

/// Gaussian NLL of explicit (mu, raw_scale, y) triples, averaged.
inline double gaussian_nll_loss(std::span<const double> mu, std::span<const double> raw_scale,
                                std::span<const double> y) {
  if (mu.size() != raw_scale.size() || mu.size() != y.size() || mu.empty())
    throw std::invalid_argument("gaussian_nll_loss: inputs must be non-empty and equally sized");
  const auto n = static_cast<Eigen::Index>(mu.size());
  Matrix out(2, n), target(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(0, i) = mu[static_cast<std::size_t>(i)];
    out(1, i) = raw_scale[static_cast<std::size_t>(i)];
    target(0, i) = y[static_cast<std::size_t>(i)];
  }
  return gaussian_nll_batch(out, target, nullptr);
}

/// Inverse of head_variance: raw-scale value giving the requested variance.
inline double raw_scale_for_variance(double var) {
  const double sp = var - kVarianceFloor;
  if (!(sp > 0)) throw std::invalid_argument("raw_scale_for_variance: variance must exceed the floor");
  // softplus^{-1}(s) = log(expm1(s))
  return sp > 30.0 ? sp + std::log1p(-std::exp(-sp)) : std::log(std::expm1(sp));
}

}  // namespace wdrop
