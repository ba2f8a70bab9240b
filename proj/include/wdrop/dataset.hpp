#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wdrop/mlp.hpp"

namespace wdrop {

/// Per-column standardization statistics. Columns with zero spread are
/// stored with std 1 so that they pass through unchanged (apart from centering).
struct Normalizer {
  Vector feature_mean, feature_std;
  Vector target_mean, target_std;

  Matrix apply_features(const Matrix& x) const {
    check(x.cols(), feature_mean.size(), "features");
    return (x.rowwise() - feature_mean.transpose()).array().rowwise() / feature_std.transpose().array();
  }
  Matrix apply_targets(const Matrix& y) const {
    check(y.cols(), target_mean.size(), "targets");
    return (y.rowwise() - target_mean.transpose()).array().rowwise() / target_std.transpose().array();
  }
  Matrix invert_features(const Matrix& x) const {
    check(x.cols(), feature_mean.size(), "features");
    Matrix out = x.array().rowwise() * feature_std.transpose().array();
    return out.rowwise() + feature_mean.transpose();
  }
  Matrix invert_targets(const Matrix& y) const {
    check(y.cols(), target_mean.size(), "targets");
    Matrix out = y.array().rowwise() * target_std.transpose().array();
    return out.rowwise() + target_mean.transpose();
  }

 private:
  static void check(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want)
      throw std::invalid_argument(std::string("Normalizer: column count mismatch for ") + what);
  }
};

/// Feature rows and target rows of a regression problem (one row per sample).
struct RegressionDataset {
  std::string name;
  Matrix features;  // N x d
  Matrix targets;   // N x m
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
  std::optional<Normalizer> normalization;  // set when the values are standardized

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t target_dim() const { return static_cast<std::size_t>(targets.cols()); }

  void validate() const {
    if (features.rows() == 0) throw std::invalid_argument("RegressionDataset '" + name + "': no rows");
    if (features.rows() != targets.rows())
      throw std::invalid_argument("RegressionDataset '" + name + "': feature/target row counts differ");
    if (targets.cols() == 0 || features.cols() == 0)
      throw std::invalid_argument("RegressionDataset '" + name + "': missing feature or target columns");
    if (!features.allFinite() || !targets.allFinite())
      throw std::invalid_argument("RegressionDataset '" + name + "': non-finite values");
  }

  RegressionDataset subset(std::span<const std::size_t> rows) const {
    RegressionDataset out;
    out.name = name;
    out.feature_names = feature_names;
    out.target_names = target_names;
    out.normalization = normalization;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.targets.resize(static_cast<Eigen::Index>(rows.size()), targets.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] >= size()) throw std::out_of_range("RegressionDataset::subset: row index out of range");
      out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
      out.targets.row(static_cast<Eigen::Index>(i)) = targets.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
  }
};

namespace detail {

inline void column_stats(const Matrix& m, Vector& mean, Vector& sd) {
  mean = m.colwise().mean().transpose();
  sd = ((m.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (Eigen::Index j = 0; j < sd.size(); ++j)
    if (!(sd(j) > 1e-12)) sd(j) = 1.0;
}

}  // namespace detail

/// Fits mean / population std per column. Pass only the training split.
inline Normalizer fit_normalizer(const RegressionDataset& train) {
  train.validate();
  Normalizer n;
  detail::column_stats(train.features, n.feature_mean, n.feature_std);
  detail::column_stats(train.targets, n.target_mean, n.target_std);
  return n;
}

inline RegressionDataset apply_normalizer(const Normalizer& n, const RegressionDataset& d) {
  RegressionDataset out = d;
  out.features = n.apply_features(d.features);
  out.targets = n.apply_targets(d.targets);
  out.normalization = n;
  return out;
}

inline RegressionDataset invert_normalizer(const Normalizer& n, const RegressionDataset& d) {
  RegressionDataset out = d;
  out.features = n.invert_features(d.features);
  out.targets = n.invert_targets(d.targets);
  out.normalization.reset();
  return out;
}

}  // namespace wdrop
