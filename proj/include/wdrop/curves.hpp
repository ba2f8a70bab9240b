#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "wdrop/normal.hpp"

namespace wdrop {

/// Calibration scores of a Gaussian residual distribution N(mu, sigma^2)
/// measured against N(0, 1).
struct CurvePoint {
  double ws1 = 0.0;  // 1-Wasserstein
  double ws2 = 0.0;  // 2-Wasserstein (not squared)
  double ece = 0.0;
};

namespace detail {

// Composite 5-point Gauss-Legendre rule on [a, b].
template <typename F>
double gauss_legendre(F&& f, double a, double b, std::size_t panels = 400) {
  static constexpr double x[] = {0.0, 0.5384693101056831, -0.5384693101056831, 0.9061798459386640,
                                 -0.9061798459386640};
  static constexpr double w[] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                                 0.2369268850561891};
  if (b <= a) return 0.0;
  const double h = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = a + (static_cast<double>(p) + 0.5) * h;
    double s = 0.0;
    for (int k = 0; k < 5; ++k) s += w[k] * f(mid + 0.5 * h * x[k]);
    total += 0.5 * h * s;
  }
  return total;
}

inline constexpr double kQuantileSpan = 12.0;  // |z| beyond this carries < 1e-32 mass

}  // namespace detail

/// W1(N(mu, sigma^2), N(0,1)) by quadrature of the quantile-coupling form
/// int |mu + (sigma - 1) z| phi(z) dz, split at the kink.
inline double gaussian_ws1_numeric(double mu, double sigma) {
  if (sigma < 0) throw std::invalid_argument("gaussian_ws1_numeric: negative sigma");
  const double slope = sigma - 1.0;
  auto f = [&](double z) { return std::abs(mu + slope * z) * std_normal_pdf(z); };
  const double lo = -detail::kQuantileSpan, hi = detail::kQuantileSpan;
  if (slope != 0.0) {
    const double kink = std::clamp(-mu / slope, lo, hi);
    return detail::gauss_legendre(f, lo, kink) + detail::gauss_legendre(f, kink, hi);
  }
  return detail::gauss_legendre(f, lo, hi);
}

/// W2(N(mu, sigma^2), N(0,1)) by quadrature of int (mu + (sigma - 1) z)^2 phi(z) dz.
inline double gaussian_ws2_numeric(double mu, double sigma) {
  if (sigma < 0) throw std::invalid_argument("gaussian_ws2_numeric: negative sigma");
  auto f = [&](double z) {
    const double g = mu + (sigma - 1.0) * z;
    return g * g * std_normal_pdf(z);
  };
  return std::sqrt(detail::gauss_legendre(f, -detail::kQuantileSpan, detail::kQuantileSpan));
}

/// Closed form sqrt(mu^2 + (sigma - 1)^2).
inline double gaussian_ws2_closed(double mu, double sigma) {
  if (sigma < 0) throw std::invalid_argument("gaussian_ws2_closed: negative sigma");
  return std::hypot(mu, sigma - 1.0);
}

/// ECE of residuals distributed as N(mu, sigma^2), from exact bin probabilities.
inline double gaussian_ece_exact(double mu, double sigma, std::size_t bins = 10) {
  if (bins < 2) throw std::invalid_argument("gaussian_ece_exact: need at least 2 bins");
  if (sigma < 0) throw std::invalid_argument("gaussian_ece_exact: negative sigma");
  const double b = static_cast<double>(bins);
  std::vector<double> mass(bins, 0.0);
  if (sigma == 0.0) {
    auto j = static_cast<std::size_t>(std_normal_cdf(mu) * b);
    mass[std::min(j, bins - 1)] = 1.0;
  } else {
    double prev = 0.0;
    for (std::size_t j = 0; j < bins; ++j) {
      double next = 1.0;
      if (j + 1 < bins) next = std_normal_cdf((std_normal_quantile(static_cast<double>(j + 1) / b) - mu) / sigma);
      mass[j] = next - prev;
      prev = next;
    }
  }
  double total = 0.0;
  for (double p : mass) total += std::abs(p - 1.0 / b);
  return total;
}

inline CurvePoint analytic_curves(double mu, double sigma, std::size_t bins = 10) {
  if (sigma < 0) throw std::invalid_argument("analytic_curves: negative sigma");
  return {gaussian_ws1_numeric(mu, sigma), gaussian_ws2_numeric(mu, sigma), gaussian_ece_exact(mu, sigma, bins)};
}

}  // namespace wdrop
