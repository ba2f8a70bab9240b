#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wdrop {

inline double std_normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

/// Phi(t) through erfc, which keeps full relative accuracy in the lower tail.
inline double std_normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(t) without cancellation.
inline double std_normal_sf(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }

/// Phi^{-1}(u) for u in (0, 1): Acklam's rational approximation (|rel err| < 1.2e-9)
/// polished with two Halley steps against std_normal_cdf.
inline double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("std_normal_quantile: u must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double lo = 0.02425, hi = 1.0 - lo;

  double x;
  if (u < lo) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= hi) {
    const double q = u - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    // Phi(x) - u, evaluated on the smaller tail to avoid cancellation near u = 1.
    const double e = (x > 0.0) ? (1.0 - u) - std_normal_sf(x) : std_normal_cdf(x) - u;
    const double pdf = std_normal_pdf(x);
    if (pdf == 0.0) break;
    const double step = e / pdf;
    x -= step / (1.0 + 0.5 * x * step);
  }
  return x;
}

}  // namespace wdrop
