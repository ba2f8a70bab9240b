#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "test_util.hpp"
#include "wdrop/config.hpp"
#include "wdrop/experiment.hpp"
#include "wdrop/report.hpp"

using namespace wdrop;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunRecord rec(const std::string& ds, const std::string& method, const std::string& split, std::size_t fold,
              const std::string& side, double ece) {
  RunRecord r;
  r.dataset = ds;
  r.method = method;
  r.split = split;
  r.fold = fold;
  r.side = side;
  r.metrics.ece = ece;
  r.metrics.rmse = 1.0;
  r.metrics.n_points = 10;
  return r;
}

const SummaryRow& find_row(const std::vector<SummaryRow>& rows, const std::string& method, const std::string& split,
                           const std::string& metric) {
  for (const auto& r : rows)
    if (r.method == method && r.split == split && r.metric == metric) return r;
  throw std::runtime_error("row not found: " + method + " " + split + " " + metric);
}

const char* kTinyConfig =
    "# tiny run\n"
    "datasets = toy-noise, toy-hf\n"
    "n = 120\n"
    "methods = wdropout, mc\n"
    "splits = iid, pca, label\n"
    "regimes = extrapolate\n"
    "folds = 3\n"
    "n_chunks = 5\n"
    "max_folds = 1\n"
    "epochs = 3\n"
    "hidden = 8, 8\n"
    "L = 3\n"
    "T = 5\n"
    "seed = 17\n";

}  // namespace

TEST(Config, ParsesListsAndComments) {
  const auto cfg = parse(
      "name = demo  # trailing comment\n"
      "datasets = toy-noise, csv:data/a.csv\n"
      "methods = wdropout, mc, pu_de\n"
      "splits = iid, pca\n"
      "regimes = interpolate, extrapolate\n"
      "hidden = 30, 20\n"
      "p = 0.2\nL = 8\nT = 40\nlambda = 1e-5\nseed = 99\nepochs = 12\nbatch_size = auto\n");
  EXPECT_EQ(cfg.name, "demo");
  ASSERT_EQ(cfg.datasets.size(), 2u);
  EXPECT_EQ(cfg.datasets[1].kind, "csv");
  EXPECT_EQ(cfg.datasets[1].path, "data/a.csv");
  EXPECT_EQ(cfg.datasets[1].display_name(), "a");
  EXPECT_EQ(cfg.methods, (std::vector<Method>{Method::wdropout, Method::mc, Method::pu_de}));
  EXPECT_EQ(cfg.regimes.size(), 2u);
  EXPECT_EQ(*cfg.hidden, (std::vector<std::size_t>{30, 20}));
  EXPECT_DOUBLE_EQ(cfg.drop_rate, 0.2);
  EXPECT_EQ(*cfg.train_samples, 8u);
  EXPECT_EQ(cfg.inference_samples, 40u);
  EXPECT_DOUBLE_EQ(cfg.mc_lambda, 1e-5);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_TRUE(cfg.seed_given);
  EXPECT_EQ(*cfg.epochs, 12u);
  EXPECT_FALSE(cfg.batch_size.has_value());
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse("datasets = toy-noise\nmethods = mc\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(parse("datasets = toy-noise\nmethods = mc\nmethods = pu\n"), ConfigError);
  EXPECT_THROW(parse("datasets = toy-noise\nmethods = nope\n"), ConfigError);
  EXPECT_THROW(parse("datasets = toy-noise\nmethods = mc\np = abc\n"), ConfigError);
  EXPECT_THROW(parse("datasets = toy-noise\nmethods = mc\nfolds = 2.5\n"), ConfigError);
  EXPECT_THROW(parse("methods = mc\n"), ConfigError);
  EXPECT_THROW(parse("datasets = moons\nmethods = mc\n"), ConfigError);
  EXPECT_THROW(parse("datasets = toy-noise\nmethods = mc\nsweep_param = q\nsweep_values = 1\n"), ConfigError);
  EXPECT_THROW(parse("datasets = toy-noise\nmethods mc\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/wdrop.cfg"), ConfigError);
}

TEST(Config, SizeClassDefaults) {
  auto cfg = parse("datasets = toy-noise, csv:x.csv\nmethods = wdropout\n");
  auto small = method_config_for(cfg, Method::wdropout, cfg.datasets[1], 506);
  EXPECT_EQ(small.epochs, 1000u);
  EXPECT_EQ(small.batch_size, 100u);
  EXPECT_EQ(small.hidden, (std::vector<std::size_t>{100, 100}));
  EXPECT_EQ(small.train_samples, 5u);
  EXPECT_EQ(folds_for(cfg, 506), 10u);
  auto large = method_config_for(cfg, Method::wdropout, cfg.datasets[0], 12000);
  EXPECT_EQ(large.epochs, 150u);
  EXPECT_EQ(large.hidden, (std::vector<std::size_t>{50, 50}));
  EXPECT_EQ(large.train_samples, 10u);
  EXPECT_EQ(folds_for(cfg, 12000), 5u);
  auto huge = method_config_for(cfg, Method::mc, cfg.datasets[1], 515345);
  EXPECT_EQ(huge.batch_size, 500u);
  EXPECT_EQ(huge.epochs, 150u);
  cfg.epochs = 7;
  cfg.folds = 4;
  EXPECT_EQ(method_config_for(cfg, Method::mc, cfg.datasets[1], 506).epochs, 7u);
  EXPECT_EQ(folds_for(cfg, 506), 4u);
}

TEST(Experiment, PlansAndJobMatrix) {
  const auto cfg = parse(kTinyConfig);
  const auto data = prepare_datasets(cfg);
  ASSERT_EQ(data.size(), 2u);
  // iid (1 after max_folds) + pca-extrapolate (1) + label-extrapolate (1)
  EXPECT_EQ(data[0].plans.size(), 3u);
  for (const auto& d : data)
    for (const auto& p : d.plans) EXPECT_NO_THROW(p.validate(d.data.size()));
  const auto jobs = describe_jobs(cfg, data);
  EXPECT_EQ(jobs.size(), 2u * 3u * 2u);
  EXPECT_EQ(jobs[0].dataset, "toy-noise");
  EXPECT_EQ(jobs[0].split, "iid");
  EXPECT_EQ(jobs[0].method, "wdropout");
  EXPECT_EQ(jobs[0].n_train + jobs[0].n_test, 120u);
  EXPECT_EQ(jobs[3].split, "pca-extrapolate");
}

TEST(Experiment, LabelPlanHoldsOutTargetExtremes) {
  auto cfg = parse("datasets = toy-noise\nn = 200\nmethods = mc\nsplits = label\nregimes = extrapolate\n");
  const auto data = prepare_datasets(cfg);
  ASSERT_EQ(data[0].plans.size(), 2u);
  const auto& y = data[0].data.targets;
  const auto& low = data[0].plans[0];
  double max_test = -1e300, min_train = 1e300;
  for (auto i : low.test) max_test = std::max(max_test, y(static_cast<Eigen::Index>(i), 0));
  for (auto i : low.train) min_train = std::min(min_train, y(static_cast<Eigen::Index>(i), 0));
  EXPECT_LE(max_test, min_train);
  EXPECT_EQ(low.test.size(), 20u);
}

TEST(Experiment, RunIsDeterministicAndThreadIndependent) {
  auto cfg = parse(kTinyConfig);
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  cfg.threads = 3;
  const auto c = run_experiment(cfg);
  ASSERT_EQ(a.size(), 24u);
  const auto ja = nlohmann::json(a).dump(), jb = nlohmann::json(b).dump(), jc = nlohmann::json(c).dump();
  EXPECT_EQ(ja, jb);
  EXPECT_EQ(ja, jc);
  EXPECT_EQ(a[0].side, "train");
  EXPECT_EQ(a[1].side, "test");
  for (const auto& r : a) {
    EXPECT_GT(r.metrics.n_points, 0u);
    EXPECT_TRUE(std::isfinite(r.metrics.ws));
  }
  cfg.seed = 18;
  EXPECT_NE(nlohmann::json(run_experiment(cfg)).dump(), ja);
}

TEST(Experiment, SweepValue) {
  const auto cfg = parse(kTinyConfig);
  EXPECT_DOUBLE_EQ(with_sweep_value(cfg, "p", 0.05).drop_rate, 0.05);
  EXPECT_EQ(*with_sweep_value(cfg, "L", 8).train_samples, 8u);
  EXPECT_THROW(with_sweep_value(cfg, "L", 1.5), ConfigError);
  EXPECT_THROW(with_sweep_value(cfg, "q", 1), ConfigError);
}

TEST(Aggregate, TwoStageAveraging) {
  std::vector<RunRecord> records;
  // Dataset A: 2 iid folds (ece 0.1, 0.3); dataset B: 4 iid folds (all 0.8).
  records.push_back(rec("A", "mc", "iid", 0, "test", 0.1));
  records.push_back(rec("A", "mc", "iid", 1, "test", 0.3));
  for (std::size_t f = 0; f < 4; ++f) records.push_back(rec("B", "mc", "iid", f, "test", 0.8));
  // OOD: pca-extrapolate folds average 0.2, label-extrapolate 0.6 on A.
  records.push_back(rec("A", "mc", "pca-extrapolate", 0, "test", 0.1));
  records.push_back(rec("A", "mc", "pca-extrapolate", 9, "test", 0.3));
  records.push_back(rec("A", "mc", "label-extrapolate", 0, "test", 0.6));
  records.push_back(rec("A", "mc", "label-extrapolate", 0, "train", 0.05));

  const auto rows = aggregate(records);
  const auto& iid = find_row(rows, "mc", "test", "ece");
  EXPECT_EQ(iid.stats.count, 2u);
  EXPECT_NEAR(iid.stats.mean, (0.2 + 0.8) / 2.0, 1e-15);  // fold-mean first, not 0.6
  EXPECT_NEAR(iid.stats.median, 0.5, 1e-15);
  EXPECT_NEAR(iid.stats.q25, 0.35, 1e-15);
  EXPECT_NEAR(iid.stats.q75, 0.65, 1e-15);
  const auto& ood = find_row(rows, "mc", "extrapolate", "ece");
  EXPECT_NEAR(ood.stats.mean, (0.2 + 0.6) / 2.0, 1e-15);
  EXPECT_EQ(ood.stats.count, 1u);
  EXPECT_NEAR(find_row(rows, "mc", "extrapolate-train", "ece").stats.mean, 0.05, 1e-15);
}

TEST(Aggregate, OrderInvariant) {
  SeededRng rng(3);
  std::vector<RunRecord> records;
  for (const char* ds : {"a", "b", "c"})
    for (const char* m : {"mc", "wdropout"})
      for (std::size_t f = 0; f < 5; ++f)
        for (const char* side : {"train", "test"}) records.push_back(rec(ds, m, "iid", f, side, rng.uniform()));
  const std::string base = summary_csv(aggregate(records));
  for (int t = 0; t < 5; ++t) {
    shuffle(records, rng);
    EXPECT_EQ(summary_csv(aggregate(records)), base);
  }
}

TEST(Aggregate, QuantileInterpolation) {
  EXPECT_DOUBLE_EQ(quantile_sorted({1.0, 2.0, 3.0, 4.0}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile_sorted({5.0}, 0.75), 5.0);
  EXPECT_THROW(summarize({}), std::invalid_argument);
}

TEST(Report, CsvSchemasAndJsonRoundTrip) {
  std::vector<RunRecord> records{rec("A", "mc", "iid", 0, "test", 0.25), rec("A", "wdropout", "iid", 0, "test", 0.125)};
  records[0].metrics.ws = 0.1 + 0.2;
  records[0].metrics.sigma_floor_hits = 3;
  const auto rows = aggregate(records);
  const std::string csv = summary_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,split,metric,mean,median,q25,q75");
  EXPECT_NE(csv.find("mc,test,ece,0.25,0.25,0.25,0.25\n"), std::string::npos);
  EXPECT_NE(csv.find("wdropout,test,ece,0.125,"), std::string::npos);
  const std::string plot = plot_csv(plot_points(rows, "0.1"));
  EXPECT_EQ(plot.substr(0, plot.find('\n')), "series,metric,x,mean,q25,median,q75");
  EXPECT_NE(plot.find("mc:test,ece,0.1,0.25,"), std::string::npos);

  const auto cfg = parse(kTinyConfig);
  const auto j = report_json(cfg, records, rows);
  const auto back = records_from_json(nlohmann::json::parse(j.dump(2)));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].metrics.ws, records[0].metrics.ws);
  EXPECT_EQ(back[0].metrics.sigma_floor_hits, 3u);
  EXPECT_EQ(nlohmann::json(back).dump(), nlohmann::json(records).dump());
  EXPECT_EQ(j["config"]["seed"], 17);
  EXPECT_FALSE(j["config"].contains("threads"));
}
