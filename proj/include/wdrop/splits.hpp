#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wdrop/mlp.hpp"
#include "wdrop/rng.hpp"

namespace wdrop {

enum class SplitKind { iid_kfold, pca, label };
enum class Regime { none, interpolate, extrapolate };

inline std::string to_string(SplitKind k) {
  switch (k) {
    case SplitKind::iid_kfold: return "iid";
    case SplitKind::pca: return "pca";
    case SplitKind::label: return "label";
  }
  return "?";
}

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::none: return "none";
    case Regime::interpolate: return "interpolate";
    case Regime::extrapolate: return "extrapolate";
  }
  return "?";
}

inline SplitKind parse_split_kind(const std::string& s) {
  if (s == "iid" || s == "iid_kfold" || s == "kfold") return SplitKind::iid_kfold;
  if (s == "pca") return SplitKind::pca;
  if (s == "label") return SplitKind::label;
  throw std::invalid_argument("unknown split kind '" + s + "' (expected iid, pca or label)");
}

inline Regime parse_regime(const std::string& s) {
  if (s == "interpolate") return Regime::interpolate;
  if (s == "extrapolate") return Regime::extrapolate;
  if (s == "none") return Regime::none;
  throw std::invalid_argument("unknown regime '" + s + "' (expected interpolate or extrapolate)");
}

/// One train/test partition of row indices 0..N-1. Indices are sorted.
struct SplitPlan {
  SplitKind kind = SplitKind::iid_kfold;
  std::size_t n_chunks = 10;
  Regime regime = Regime::none;
  std::size_t fold = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  /// Checks that train and test partition 0..n-1 exactly.
  void validate(std::size_t n) const {
    std::vector<int> seen(n, 0);
    for (auto v : {&train, &test})
      for (auto i : *v) {
        if (i >= n) throw std::logic_error("SplitPlan: index out of range");
        if (seen[i]++) throw std::logic_error("SplitPlan: index " + std::to_string(i) + " used twice");
      }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw std::logic_error("SplitPlan: indices do not cover the dataset");
  }

  std::string label() const {
    return kind == SplitKind::iid_kfold ? "iid" : to_string(kind) + "-" + to_string(regime);
  }
};

/// Shuffled k-fold partition; the first n % k folds get one extra row.
inline std::vector<SplitPlan> kfold(std::size_t n, std::size_t k, SeededRng& rng) {
  if (k < 2) throw std::invalid_argument("kfold: need k >= 2");
  if (k > n) throw std::invalid_argument("kfold: k = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(perm, rng);
  std::vector<SplitPlan> plans(k);
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    std::vector<char> is_test(n, 0);
    for (std::size_t i = at; i < at + size; ++i) is_test[perm[i]] = 1;
    at += size;
    auto& p = plans[f];
    p.kind = SplitKind::iid_kfold;
    p.n_chunks = k;
    p.fold = f;
    for (std::size_t i = 0; i < n; ++i) (is_test[i] ? p.test : p.train).push_back(i);
  }
  return plans;
}

/// Valid test-chunk indices of a regime: the two outer chunks for
/// extrapolation, the inner ones for interpolation.
inline std::vector<std::size_t> regime_folds(Regime regime, std::size_t n_chunks) {
  if (n_chunks < 3) throw std::invalid_argument("regime_folds: need at least 3 chunks");
  std::vector<std::size_t> out;
  if (regime == Regime::extrapolate) return {0, n_chunks - 1};
  if (regime != Regime::interpolate) throw std::invalid_argument("regime_folds: regime must be interpolate or extrapolate");
  for (std::size_t c = 1; c + 1 < n_chunks; ++c) out.push_back(c);
  return out;
}

/// Orders rows by score (ties by row index), cuts them into n_chunks equal
/// chunks with the remainder spread over the lowest-score chunks, and holds
/// out chunk `fold`. Extrapolation requires an outer chunk, interpolation an
/// inner one.
inline SplitPlan ordered_split(std::span<const double> scores, std::size_t n_chunks, Regime regime, std::size_t fold,
                               SplitKind kind = SplitKind::label) {
  if (n_chunks < 3) throw std::invalid_argument("ordered_split: need at least 3 chunks");
  const std::size_t n = scores.size();
  if (n < n_chunks) throw std::invalid_argument("ordered_split: fewer rows than chunks");
  const auto valid = regime_folds(regime, n_chunks);
  if (std::find(valid.begin(), valid.end(), fold) == valid.end())
    throw std::invalid_argument("ordered_split: fold " + std::to_string(fold) + " is not a valid " +
                                to_string(regime) + " chunk for " + std::to_string(n_chunks) + " chunks");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::size_t begin = 0;
  for (std::size_t c = 0; c < fold; ++c) begin += n / n_chunks + (c < n % n_chunks ? 1 : 0);
  const std::size_t end = begin + n / n_chunks + (fold < n % n_chunks ? 1 : 0);

  SplitPlan p;
  p.kind = kind;
  p.n_chunks = n_chunks;
  p.regime = regime;
  p.fold = fold;
  p.test.assign(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
  std::sort(p.test.begin(), p.test.end());
  std::vector<char> is_test(n, 0);
  for (auto i : p.test) is_test[i] = 1;
  for (std::size_t i = 0; i < n; ++i)
    if (!is_test[i]) p.train.push_back(i);
  return p;
}

/// Dominant eigenvector of the centered covariance of x (rows are points),
/// by power iteration (tolerance 1e-9, at most 10^4 iterations). The sign is
/// fixed so that the largest-magnitude coordinate is positive.
inline Vector pca_first_component(const Matrix& x) {
  if (x.rows() < 2) throw std::invalid_argument("pca_first_component: need at least 2 points");
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows());
  Eigen::Index best = 0;
  cov.colwise().norm().maxCoeff(&best);
  if (!(cov.col(best).norm() > 1e-300)) throw std::invalid_argument("pca_first_component: data are constant");

  Vector v = cov.col(best) + Vector::Constant(cov.rows(), 1e-6 * cov.col(best).norm());
  v.normalize();
  for (int it = 0; it < 10000; ++it) {
    Vector next = cov * v;
    const double norm = next.norm();
    if (!(norm > 0.0)) break;
    next /= norm;
    const double change = (next - v).norm();
    v = std::move(next);
    if (change < 1e-9) break;
  }
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0) v = -v;
  return v;
}

/// Projections of the centered rows of x onto the first principal axis.
inline Vector pca_scores(const Matrix& x) {
  const Vector axis = pca_first_component(x);
  return (x.rowwise() - x.colwise().mean()) * axis;
}

}  // namespace wdrop
