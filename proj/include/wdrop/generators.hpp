#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "wdrop/dataset.hpp"
#include "wdrop/rng.hpp"

namespace wdrop {

/// Ground-truth noise standard deviation of the toy-noise data: sqrt(exp(-0.02 x^2)).
inline double toy_noise_std(double x) { return std::exp(-0.01 * x * x); }

/// Deterministic toy-hf target: polynomial plus an amplitude-modulated fast sine.
inline double toy_hf(double x) {
  return 0.25 * x * x - 0.01 * x * x * x + 40.0 * std::exp(-(x + 1.0) * (x + 1.0) / 200.0) * std::sin(3.0 * x);
}

inline constexpr double kToyNoiseLo = -15.0, kToyNoiseHi = 15.0;
inline constexpr double kToyHfLo = -15.0, kToyHfHi = 20.0;

namespace detail {

inline RegressionDataset make_1d(std::string name, Matrix x, Matrix y, bool standardize) {
  RegressionDataset d;
  d.name = std::move(name);
  d.features = std::move(x);
  d.targets = std::move(y);
  d.feature_names = {"x"};
  d.target_names = {"y"};
  if (standardize) d = apply_normalizer(fit_normalizer(d), d);
  return d;
}

}  // namespace detail

/// x ~ U[-15, 15], y ~ N(0, exp(-0.02 x^2)); standardized unless told otherwise.
/// The normalization record lets callers map ground truth into model units.
inline RegressionDataset gen_toy_noise(std::size_t n, SeededRng& rng, bool standardize = true) {
  if (n == 0) throw std::invalid_argument("gen_toy_noise: n must be positive");
  Matrix x(static_cast<Eigen::Index>(n), 1), y(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = rng.uniform(kToyNoiseLo, kToyNoiseHi);
    y(i, 0) = rng.normal(0.0, toy_noise_std(x(i, 0)));
  }
  return detail::make_1d("toy-noise", std::move(x), std::move(y), standardize);
}

/// x ~ U[-15, 20], y = toy_hf(x).
inline RegressionDataset gen_toy_hf(std::size_t n, SeededRng& rng, bool standardize = true) {
  if (n == 0) throw std::invalid_argument("gen_toy_hf: n must be positive");
  Matrix x(static_cast<Eigen::Index>(n), 1), y(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = rng.uniform(kToyHfLo, kToyHfHi);
    y(i, 0) = toy_hf(x(i, 0));
  }
  return detail::make_1d("toy-hf", std::move(x), std::move(y), standardize);
}

/// x ~ U(-1, 1), y ~ N(0, sigma_true^2). Never standardized: sigma_true is the
/// quantity a model is supposed to recover.
inline RegressionDataset gen_noisy_line(std::size_t n, double sigma_true, SeededRng& rng) {
  if (n == 0) throw std::invalid_argument("gen_noisy_line: n must be positive");
  if (!(sigma_true >= 0.0)) throw std::invalid_argument("gen_noisy_line: sigma_true must be >= 0");
  Matrix x(static_cast<Eigen::Index>(n), 1), y(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = rng.uniform(-1.0, 1.0);
    y(i, 0) = sigma_true == 0.0 ? 0.0 : rng.normal(0.0, sigma_true);
  }
  return detail::make_1d("noisy-line", std::move(x), std::move(y), false);
}

}  // namespace wdrop
