#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "wdrop/splits.hpp"

using namespace wdrop;

namespace {

Matrix anisotropic_gaussian(std::size_t n, double angle, SeededRng& rng) {
  Matrix x(static_cast<Eigen::Index>(n), 2);
  const double c = std::cos(angle), s = std::sin(angle);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double a = rng.normal(0.0, 3.0), b = rng.normal(0.0, 0.5);
    x(i, 0) = c * a - s * b + 1.0;
    x(i, 1) = s * a + c * b - 2.0;
  }
  return x;
}

}  // namespace

TEST(Splits, KfoldPartitionsAndBalances) {
  SeededRng rng(1);
  const auto plans = kfold(103, 10, rng);
  ASSERT_EQ(plans.size(), 10u);
  std::vector<int> tested(103, 0);
  for (std::size_t f = 0; f < 10; ++f) {
    plans[f].validate(103);
    EXPECT_EQ(plans[f].test.size(), f < 3 ? 11u : 10u);
    EXPECT_EQ(plans[f].fold, f);
    EXPECT_EQ(plans[f].label(), "iid");
    for (auto i : plans[f].test) ++tested[i];
  }
  EXPECT_TRUE(std::all_of(tested.begin(), tested.end(), [](int c) { return c == 1; }));
  EXPECT_THROW(kfold(5, 6, rng), std::invalid_argument);
  EXPECT_THROW(kfold(5, 1, rng), std::invalid_argument);
}

TEST(Splits, KfoldDeterministic) {
  SeededRng a(4), b(4);
  const auto p = kfold(50, 5, a), q = kfold(50, 5, b);
  for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(p[f].test, q[f].test);
}

TEST(Splits, RegimeFolds) {
  EXPECT_EQ(regime_folds(Regime::extrapolate, 10), (std::vector<std::size_t>{0, 9}));
  EXPECT_EQ(regime_folds(Regime::interpolate, 5), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_THROW(regime_folds(Regime::none, 10), std::invalid_argument);
  EXPECT_THROW(regime_folds(Regime::extrapolate, 2), std::invalid_argument);
}

TEST(Splits, LabelExtrapolateTakesTopChunk) {
  std::vector<double> scores(100);
  std::iota(scores.begin(), scores.end(), 0.0);
  std::reverse(scores.begin(), scores.end());  // row i has score 99 - i
  const auto top = ordered_split(scores, 10, Regime::extrapolate, 9);
  std::vector<std::size_t> expected(10);
  std::iota(expected.begin(), expected.end(), std::size_t{0});
  EXPECT_EQ(top.test, expected);
  EXPECT_EQ(top.label(), "label-extrapolate");
  top.validate(100);
  const auto bottom = ordered_split(scores, 10, Regime::extrapolate, 0);
  std::iota(expected.begin(), expected.end(), std::size_t{90});
  EXPECT_EQ(bottom.test, expected);
}

TEST(Splits, OrderedSplitChunksAndRegimes) {
  std::vector<double> scores(23);
  std::iota(scores.begin(), scores.end(), 0.0);
  std::size_t total = 0;
  for (std::size_t f : {1u, 2u, 3u}) {
    const auto p = ordered_split(scores, 5, Regime::interpolate, f);
    p.validate(23);
    total += p.test.size();
    // Chunks 0..2 get 5 rows, chunks 3..4 get 4 rows.
    EXPECT_EQ(p.test.size(), f < 3 ? 5u : 4u);
  }
  total += ordered_split(scores, 5, Regime::extrapolate, 0).test.size();
  total += ordered_split(scores, 5, Regime::extrapolate, 4).test.size();
  EXPECT_EQ(total, 23u);
  EXPECT_THROW(ordered_split(scores, 5, Regime::extrapolate, 2), std::invalid_argument);
  EXPECT_THROW(ordered_split(scores, 5, Regime::interpolate, 0), std::invalid_argument);
  EXPECT_THROW(ordered_split(std::vector<double>(3, 0.0), 5, Regime::extrapolate, 0), std::invalid_argument);
}

TEST(Splits, TiesBreakByRowIndex) {
  const std::vector<double> scores(10, 1.0);
  const auto p = ordered_split(scores, 5, Regime::extrapolate, 0);
  EXPECT_EQ(p.test, (std::vector<std::size_t>{0, 1}));
}

TEST(Splits, PcaMatchesEigensolver) {
  SeededRng rng(2);
  for (double angle : {0.3, 1.2, -0.8}) {
    const Matrix x = anisotropic_gaussian(2000, angle, rng);
    const Vector v = pca_first_component(x);
    const Matrix c = x.rowwise() - x.colwise().mean();
    const Matrix cov = c.transpose() * c / static_cast<double>(x.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    Vector ref = es.eigenvectors().col(1);
    Eigen::Index arg = 0;
    ref.cwiseAbs().maxCoeff(&arg);
    if (ref(arg) < 0) ref = -ref;
    EXPECT_NEAR((v - ref).norm(), 0.0, 1e-6) << angle;
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  }
}

TEST(Splits, PcaHigherDimensional) {
  SeededRng rng(3);
  Matrix x(500, 6);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < 6; ++j) x(i, j) = rng.normal(0.0, 1.0 + static_cast<double>(j));
  const Vector v = pca_first_component(x);
  const Matrix c = x.rowwise() - x.colwise().mean();
  Eigen::SelfAdjointEigenSolver<Matrix> es(c.transpose() * c / 500.0);
  EXPECT_NEAR(std::abs(v.dot(es.eigenvectors().col(5))), 1.0, 1e-6);
  EXPECT_THROW(pca_first_component(Matrix::Ones(10, 3)), std::invalid_argument);
}

TEST(Splits, PcaExtrapolateHoldsOutExtremeProjections) {
  SeededRng rng(4);
  const Matrix x = anisotropic_gaussian(1000, 0.7, rng);
  const Vector s = pca_scores(x);
  const std::span<const double> sp(s.data(), 1000);
  const auto hi = ordered_split(sp, 10, Regime::extrapolate, 9, SplitKind::pca);
  EXPECT_EQ(hi.label(), "pca-extrapolate");
  std::vector<double> sorted(s.data(), s.data() + 1000);
  std::sort(sorted.begin(), sorted.end());
  for (auto i : hi.test) EXPECT_GE(s(static_cast<Eigen::Index>(i)), sorted[900]);
  for (auto i : hi.train) EXPECT_LT(s(static_cast<Eigen::Index>(i)), sorted[900]);
}

TEST(Splits, ValidateDetectsOverlapAndGaps) {
  SplitPlan p;
  p.train = {0, 1};
  p.test = {1, 2};
  EXPECT_THROW(p.validate(3), std::logic_error);
  p.test = {2};
  EXPECT_NO_THROW(p.validate(3));
  EXPECT_THROW(p.validate(4), std::logic_error);
  p.test = {5};
  EXPECT_THROW(p.validate(3), std::logic_error);
}

TEST(Splits, Parsing) {
  EXPECT_EQ(parse_split_kind("iid"), SplitKind::iid_kfold);
  EXPECT_EQ(parse_split_kind("pca"), SplitKind::pca);
  EXPECT_EQ(parse_regime("interpolate"), Regime::interpolate);
  EXPECT_THROW(parse_split_kind("random"), std::invalid_argument);
  EXPECT_THROW(parse_regime("sideways"), std::invalid_argument);
}
