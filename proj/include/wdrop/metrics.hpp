#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wdrop/normal.hpp"
#include "wdrop/predict.hpp"

namespace wdrop {

/// Smallest sigma used when forming residuals or likelihoods.
inline constexpr double kSigmaFloor = 1e-12;

/// r_i = (mu_i - y_i) / sigma_i for every evaluated point.
struct NormalizedResiduals {
  std::vector<double> values;
  std::size_t floor_hits = 0;  // points whose sigma was raised to kSigmaFloor
};

/// Per-split evaluation bundle.
struct EvalReport {
  std::size_t n_points = 0;
  double rmse = 0.0;
  double mean_nll = 0.0;
  double ece = 0.0;
  double ws = 0.0;
  double etl = 0.0;
  double ks = 0.0;
  std::size_t sigma_floor_hits = 0;
};

namespace detail {

inline void check_pred(const PredictiveDistribution& pred, const Matrix& y) {
  pred.validate();
  if (pred.mu.rows() != y.rows() || pred.mu.cols() != y.cols())
    throw std::invalid_argument("metrics: prediction and target shapes differ");
  if (y.size() == 0) throw std::invalid_argument("metrics: empty input");
}

inline void check_residuals(std::span<const double> r) {
  if (r.empty()) throw std::invalid_argument("metrics: empty residual set");
}

// Antiderivatives of Phi: G(t) = int_{-inf}^t Phi = t Phi(t) + phi(t) and
// H(t) = int_t^{inf} (1 - Phi) = phi(t) - t (1 - Phi(t)).
inline double lower_area(double t) { return t * std_normal_cdf(t) + std_normal_pdf(t); }
inline double upper_area(double t) { return std_normal_pdf(t) - t * std_normal_sf(t); }

// int_a^b Phi(t) dt, each half-line handled with the form that avoids cancellation.
inline double cdf_integral(double a, double b) {
  if (b <= a) return 0.0;
  if (b <= 0.0) return lower_area(b) - lower_area(a);
  if (a >= 0.0) return (b - a) - (upper_area(a) - upper_area(b));
  return (lower_area(0.0) - lower_area(a)) + (b - (upper_area(0.0) - upper_area(b)));
}

// int_a^b |c - Phi(t)| dt for a constant level c in [0, 1].
inline double level_gap_integral(double c, double a, double b) {
  if (b <= a) return 0.0;
  const double fa = std_normal_cdf(a), fb = std_normal_cdf(b);
  if (c >= fb) return c * (b - a) - cdf_integral(a, b);
  if (c <= fa) return cdf_integral(a, b) - c * (b - a);
  const double t = std_normal_quantile(c);
  return (c * (t - a) - cdf_integral(a, t)) + (cdf_integral(t, b) - c * (b - t));
}

}  // namespace detail

/// Normalized residuals of all N x m entries (column by column).
inline NormalizedResiduals residuals(const PredictiveDistribution& pred, const Matrix& y) {
  detail::check_pred(pred, y);
  NormalizedResiduals out;
  out.values.reserve(static_cast<std::size_t>(y.size()));
  for (Eigen::Index c = 0; c < y.cols(); ++c)
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      double s = pred.sigma(i, c);
      if (s < kSigmaFloor) {
        s = kSigmaFloor;
        ++out.floor_hits;
      }
      out.values.push_back((pred.mu(i, c) - y(i, c)) / s);
    }
  return out;
}

inline double rmse(const PredictiveDistribution& pred, const Matrix& y) {
  detail::check_pred(pred, y);
  return std::sqrt((pred.mu - y).squaredNorm() / static_cast<double>(y.size()));
}

/// Mean of log sigma + (mu - y)^2 / (2 sigma^2); the log sqrt(2 pi) constant is dropped.
inline double mean_nll(const PredictiveDistribution& pred, const Matrix& y) {
  detail::check_pred(pred, y);
  double total = 0.0;
  for (Eigen::Index c = 0; c < y.cols(); ++c)
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double s = std::max(pred.sigma(i, c), kSigmaFloor);
      const double d = pred.mu(i, c) - y(i, c);
      total += std::log(s) + d * d / (2.0 * s * s);
    }
  return total / static_cast<double>(y.size());
}

/// Expected calibration error over B equal-probability bins of Phi(r).
/// The last bin is closed. Computed from integer counts as
/// sum_j |B n_j - N| / (B N).
inline double ece(std::span<const double> r, std::size_t bins = 10) {
  if (bins < 2) throw std::invalid_argument("ece: need at least 2 bins");
  detail::check_residuals(r);
  std::vector<long long> counts(bins, 0);
  for (double v : r) {
    const double u = std_normal_cdf(v);
    auto j = static_cast<std::size_t>(u * static_cast<double>(bins));
    if (j >= bins) j = bins - 1;
    ++counts[j];
  }
  const auto n = static_cast<long long>(r.size());
  const auto b = static_cast<long long>(bins);
  long long dev = 0;
  for (long long c : counts) dev += std::llabs(b * c - n);
  return static_cast<double>(dev) / static_cast<double>(b * n);
}

/// 1-Wasserstein distance between the empirical distribution of r and N(0,1):
/// the exact integral of |F_emp - Phi|, evaluated piecewise between sorted
/// residuals with closed-form antiderivatives of Phi.
inline double ws1(std::span<const double> r) {
  detail::check_residuals(r);
  std::vector<double> s(r.begin(), r.end());
  for (double v : s)
    if (!std::isfinite(v)) throw std::invalid_argument("ws1: non-finite residual");
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double total = detail::lower_area(s.front()) + detail::upper_area(s.back());
  for (std::size_t k = 0; k + 1 < s.size(); ++k)
    total += detail::level_gap_integral(static_cast<double>(k + 1) / n, s[k], s[k + 1]);
  return total;
}

/// Number of points in the upper (1 - q) tail: ceil((1 - q) N), at least 1.
/// A relative slack of 1e-9 keeps e.g. (1 - 0.99) * 100 from rounding up to 2.
inline std::size_t tail_count(std::size_t n, double q) {
  const double x = (1.0 - q) * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
  return std::clamp<std::size_t>(k, 1, n);
}

/// Expected tail loss: mean of the ceil((1 - q) N) largest |r_i|.
inline double etl(std::span<const double> r, double q = 0.99) {
  detail::check_residuals(r);
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("etl: quantile must lie in (0, 1)");
  std::vector<double> a(r.size());
  std::transform(r.begin(), r.end(), a.begin(), [](double v) { return std::abs(v); });
  const std::size_t k = tail_count(a.size(), q);
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k - 1), a.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += a[i];
  return sum / static_cast<double>(k);
}

/// Kolmogorov-Smirnov distance sup_t |F_emp(t) - Phi(t)|, checked on both
/// sides of every jump.
inline double ks(std::span<const double> r) {
  detail::check_residuals(r);
  std::vector<double> s(r.begin(), r.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double best = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = std_normal_cdf(s[i]);
    best = std::max({best, std::abs(static_cast<double>(i + 1) / n - f), std::abs(static_cast<double>(i) / n - f)});
  }
  return best;
}

/// All metrics for one prediction set. For m > 1 outputs the distributional
/// scores are computed per coordinate and averaged; rmse pools all entries.
inline EvalReport evaluate(const PredictiveDistribution& pred, const Matrix& y, std::size_t bins = 10,
                           double tail_q = 0.99) {
  detail::check_pred(pred, y);
  EvalReport rep;
  rep.n_points = static_cast<std::size_t>(y.rows());
  rep.rmse = rmse(pred, y);
  rep.mean_nll = mean_nll(pred, y);
  const auto all = residuals(pred, y);
  rep.sigma_floor_hits = all.floor_hits;
  const auto m = static_cast<std::size_t>(y.cols());
  const auto n = static_cast<std::size_t>(y.rows());
  for (std::size_t c = 0; c < m; ++c) {
    std::span<const double> rc(all.values.data() + c * n, n);
    rep.ece += ece(rc, bins);
    rep.ws += ws1(rc);
    rep.etl += etl(rc, tail_q);
    rep.ks += ks(rc);
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  rep.ece *= inv_m;
  rep.ws *= inv_m;
  rep.etl *= inv_m;
  rep.ks *= inv_m;
  return rep;
}

}  // namespace wdrop
