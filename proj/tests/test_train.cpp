#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "wdrop/generators.hpp"
#include "wdrop/metrics.hpp"
#include "wdrop/predict.hpp"
#include "wdrop/train.hpp"

using namespace wdrop;

namespace {

RegressionDataset line_data(std::size_t n, double slope, double noise, std::uint64_t seed) {
  SeededRng rng(seed);
  RegressionDataset d;
  d.name = "line";
  d.features.resize(static_cast<Eigen::Index>(n), 1);
  d.targets.resize(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    d.features(i, 0) = rng.uniform(-1.0, 1.0);
    d.targets(i, 0) = slope * d.features(i, 0) + (noise > 0 ? rng.normal(0.0, noise) : 0.0);
  }
  return d;
}

MethodConfig quick(Method m, std::size_t epochs) {
  MethodConfig c;
  c.method = m;
  c.hidden = {20, 20};
  c.epochs = epochs;
  c.batch_size = 50;
  c.train_samples = 5;
  c.inference_samples = 30;
  c.ensemble_size = 3;
  return c;
}

}  // namespace

TEST(Train, DeterministicForFixedSeed) {
  const auto data = line_data(200, 1.0, 0.1, 1);
  for (Method m : {Method::wdropout, Method::mc, Method::pu, Method::de}) {
    const auto a = train(quick(m, 5), data, SeededRng(7));
    const auto b = train(quick(m, 5), data, SeededRng(7));
    const auto c = train(quick(m, 5), data, SeededRng(8));
    ASSERT_EQ(a.members.size(), b.members.size());
    for (std::size_t k = 0; k < a.members.size(); ++k)
      EXPECT_EQ(flatten(a.members[k].layers()), flatten(b.members[k].layers())) << to_string(m);
    EXPECT_NE(flatten(a.members[0].layers()), flatten(c.members[0].layers())) << to_string(m);
  }
}

TEST(Train, MemberCountsAndHeads) {
  const auto data = line_data(100, 1.0, 0.1, 2);
  EXPECT_EQ(train(quick(Method::de, 1), data, SeededRng(1)).members.size(), 3u);
  EXPECT_EQ(train(quick(Method::pu_de, 1), data, SeededRng(1)).members.size(), 3u);
  const auto pu = train(quick(Method::pu, 1), data, SeededRng(1));
  ASSERT_EQ(pu.members.size(), 1u);
  EXPECT_EQ(pu.members[0].head(), HeadKind::gaussian);
  EXPECT_DOUBLE_EQ(pu.members[0].drop_rate(), 0.0);
  EXPECT_DOUBLE_EQ(train(quick(Method::pu_mc, 1), data, SeededRng(1)).members[0].drop_rate(), 0.1);
  EXPECT_DOUBLE_EQ(train(quick(Method::de, 1), data, SeededRng(1)).members[0].drop_rate(), 0.0);
}

TEST(Train, EpochCallbackReportsDecreasingLoss) {
  const auto data = line_data(300, 2.0, 0.0, 3);
  std::vector<double> losses;
  train(quick(Method::mc, 40), data, SeededRng(2),
        [&](std::size_t member, std::size_t epoch, double loss) {
          EXPECT_EQ(member, 0u);
          EXPECT_EQ(epoch, losses.size());
          losses.push_back(loss);
        });
  ASSERT_EQ(losses.size(), 40u);
  EXPECT_LT(losses.back(), 0.2 * losses.front());
}

TEST(Train, WdropoutFitsNoiselessTargetWithSmallSpread) {
  const auto data = line_data(500, 0.8, 0.0, 4);
  auto cfg = quick(Method::wdropout, 300);
  cfg.hidden = {50, 50};
  const auto model = train(cfg, data, SeededRng(3));
  SeededRng rng(4);
  const auto pred = predict(model, data.features, rng);
  EXPECT_LT(rmse(pred, data.targets), 0.05);
  EXPECT_LT(pred.sigma.mean(), 0.1);
}

TEST(Train, DivergenceIsReported) {
  const auto data = line_data(100, 1.0, 0.1, 5);
  auto cfg = quick(Method::mc, 50);
  cfg.lr = 1e150;
  try {
    train(cfg, data, SeededRng(1));
    FAIL() << "expected TrainingDiverged";
  } catch (const TrainingDiverged& e) {
    EXPECT_NE(std::string(e.what()).find("diverged at step"), std::string::npos);
    EXPECT_FALSE(std::isfinite(e.loss()) && e.loss() < 1e300);
  }
}

TEST(Train, ConfigValidation) {
  const auto data = line_data(20, 1.0, 0.1, 6);
  auto cfg = quick(Method::wdropout, 1);
  cfg.train_samples = 1;
  EXPECT_THROW(train(cfg, data, SeededRng(1)), std::invalid_argument);
  cfg = quick(Method::de, 1);
  cfg.ensemble_size = 1;
  EXPECT_THROW(train(cfg, data, SeededRng(1)), std::invalid_argument);
  cfg = quick(Method::mc, 1);
  cfg.drop_rate = 1.0;
  EXPECT_THROW(train(cfg, data, SeededRng(1)), std::invalid_argument);
  cfg = quick(Method::mc, 0);
  EXPECT_THROW(train(cfg, data, SeededRng(1)), std::invalid_argument);
}

TEST(Train, MultiOutputTargets) {
  SeededRng rng(9);
  RegressionDataset d;
  d.features.resize(200, 2);
  d.targets.resize(200, 2);
  for (Eigen::Index i = 0; i < 200; ++i) {
    d.features(i, 0) = rng.uniform(-1, 1);
    d.features(i, 1) = rng.uniform(-1, 1);
    d.targets(i, 0) = d.features(i, 0) + d.features(i, 1);
    d.targets(i, 1) = d.features(i, 0) - d.features(i, 1);
  }
  for (Method m : kAllMethods) {
    const auto model = train(quick(m, 3), d, SeededRng(2));
    SeededRng pr(3);
    const auto pred = predict(model, d.features, pr);
    EXPECT_EQ(pred.mu.rows(), 200);
    EXPECT_EQ(pred.mu.cols(), 2);
    EXPECT_TRUE(pred.sigma.allFinite());
    EXPECT_GE(pred.sigma.minCoeff(), 0.0);
  }
}
