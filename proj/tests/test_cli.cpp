#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "test_util.hpp"

using namespace wdrop;
using wdrop::testing::read_file;
using wdrop::testing::TempDir;
using wdrop::testing::write_file;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string tiny_config(const std::string& out_dir) {
  return "datasets = toy-noise\n"
         "n = 100\n"
         "methods = wdropout, mc\n"
         "folds = 2\n"
         "max_folds = 1\n"
         "epochs = 2\n"
         "hidden = 6\n"
         "L = 3\n"
         "T = 4\n"
         "seed = 5\n"
         "output = " + out_dir + "\n";
}

}  // namespace

TEST(Cli, GenDataWritesRowsAndIsReproducible) {
  TempDir dir("cli_gen");
  const auto a = dir.file("a.csv"), b = dir.file("b.csv");
  ASSERT_EQ(run({"gen-data", "--kind", "toy-hf", "--n", "100", "--seed", "3", "--out", a}).code, 0);
  ASSERT_EQ(run({"gen-data", "--kind", "toy-hf", "--n", "100", "--seed", "3", "--out", b}).code, 0);
  EXPECT_EQ(count_lines(read_file(a)), 101u);
  EXPECT_EQ(read_file(a), read_file(b));
  ASSERT_EQ(run({"gen-data", "--kind", "toy-hf", "--n", "100", "--seed", "4", "--out", b}).code, 0);
  EXPECT_NE(read_file(a), read_file(b));
}

TEST(Cli, NoiselessLineHasZeroTargets) {
  TempDir dir("cli_line");
  const auto f = dir.file("line.csv");
  ASSERT_EQ(run({"gen-data", "--kind", "noisy-line", "--n", "50", "--sigma-true", "0", "--out", f}).code, 0);
  const auto data = load_csv(f);
  ASSERT_EQ(data.size(), 50u);
  EXPECT_EQ(data.targets.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Cli, SeedFromEnvironment) {
  TempDir dir("cli_env");
  const auto a = dir.file("a.csv"), b = dir.file("b.csv");
  ::setenv("WDROP_SEED", "11", 1);
  ASSERT_EQ(run({"gen-data", "--kind", "toy-noise", "--n", "20", "--out", a}).code, 0);
  ::unsetenv("WDROP_SEED");
  ASSERT_EQ(run({"gen-data", "--kind", "toy-noise", "--n", "20", "--seed", "11", "--out", b}).code, 0);
  EXPECT_EQ(read_file(a), read_file(b));
}

TEST(Cli, CurvesTable) {
  auto r = run({"curves", "--mu-range", "0,3", "--sigma-range", "0,1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "mu,sigma,ws1,ws2,ece");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> v;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    rows.push_back(v);
  }
  ASSERT_EQ(rows.size(), 4u);
  // (0, 0): point mass at the mean
  EXPECT_NEAR(rows[0][2], 0.7978845608028654, 1e-9);
  EXPECT_NEAR(rows[0][3], 1.0, 1e-9);
  // (0, 1): exact match
  EXPECT_NEAR(rows[1][2], 0.0, 1e-9);
  EXPECT_NEAR(rows[1][4], 0.0, 1e-9);
  // (3, 1): pure shift
  EXPECT_NEAR(rows[3][2], 3.0, 1e-9);
  EXPECT_NEAR(rows[3][3], 3.0, 1e-9);
}

TEST(Cli, CurvesDefaultGridAndFile) {
  TempDir dir("cli_curves");
  const auto f = dir.file("sub/curves.csv");
  ASSERT_EQ(run({"curves", "--out", f}).code, 0);
  EXPECT_EQ(count_lines(read_file(f)), 101u);
  EXPECT_EQ(run({"curves", "--sigma-range", "-1"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"curves", "--sigma-range", "1:2"}).code, cli::kExitUsage);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"curves", "--nope"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"gen-data", "--kind", "toy-noise"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"gen-data", "--kind", "moons", "--out", "/tmp/x.csv"}).code, cli::kExitUsage);
  const auto r = run({"bench", "--config", "/nonexistent/run.cfg"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("/nonexistent/run.cfg"), std::string::npos);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST(Cli, RuntimeFailureExitCode) {
  TempDir dir("cli_rt");
  const auto r = run({"eval", "--predictions", dir.file("missing.csv")});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("missing.csv"), std::string::npos);
}

TEST(Cli, BenchWritesOutputsAndDryRun) {
  TempDir dir("cli_bench");
  const auto out_dir = dir.file("out");
  write_file(dir.file("run.cfg"), tiny_config(out_dir));

  const auto dry = run({"bench", "--config", dir.file("run.cfg"), "--dry-run"});
  ASSERT_EQ(dry.code, 0) << dry.err;
  EXPECT_NE(dry.out.find("wdropout"), std::string::npos);
  EXPECT_FALSE(std::filesystem::exists(out_dir));

  const auto r = run({"bench", "--config", dir.file("run.cfg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string summary = read_file(out_dir + "/summary.csv");
  EXPECT_EQ(summary.substr(0, summary.find('\n')), "method,split,metric,mean,median,q25,q75");
  // 2 methods x {train, test} x 6 metrics
  EXPECT_EQ(count_lines(summary), 1u + 2u * 2u * 6u);
  EXPECT_NE(summary.find("\nmc,test,ece,"), std::string::npos);
  EXPECT_NE(summary.find("\nwdropout,test,ws,"), std::string::npos);
  for (const char* f : {"report.json", "plot.csv", "splits.json"})
    EXPECT_TRUE(std::filesystem::exists(out_dir + "/" + f)) << f;

  const std::string first = read_file(out_dir + "/report.json");
  ASSERT_EQ(run({"bench", "--config", dir.file("run.cfg"), "--threads", "2"}).code, 0);
  EXPECT_EQ(read_file(out_dir + "/report.json"), first);
  EXPECT_EQ(read_file(out_dir + "/summary.csv"), summary);

  ASSERT_EQ(run({"bench", "--config", dir.file("run.cfg"), "--seed", "6"}).code, 0);
  EXPECT_NE(read_file(out_dir + "/report.json"), first);
}

TEST(Cli, SweepOverDropRate) {
  TempDir dir("cli_sweep");
  const auto out_dir = dir.file("out");
  write_file(dir.file("run.cfg"), tiny_config(out_dir));
  const auto r = run({"sweep", "--param", "p", "--values", "0.05,0.1", "--config", dir.file("run.cfg")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(out_dir + "/p=0.05/summary.csv"));
  EXPECT_TRUE(std::filesystem::exists(out_dir + "/p=0.1/summary.csv"));
  const std::string combined = read_file(out_dir + "/sweep_summary.csv");
  EXPECT_EQ(count_lines(combined), 1u + 2u * 24u);
  EXPECT_NE(combined.find("\n0.05,wdropout,test,ece,"), std::string::npos);
  EXPECT_NE(read_file(out_dir + "/plot.csv").find("wdropout:test,ece,0.1,"), std::string::npos);

  EXPECT_EQ(run({"sweep", "--param", "q", "--values", "1", "--config", dir.file("run.cfg")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"sweep", "--param", "L", "--values", "1.5", "--config", dir.file("run.cfg")}).code,
            cli::kExitUsage);
}

TEST(Cli, TrainEvalRoundTrip) {
  TempDir dir("cli_train");
  const auto data = dir.file("line.csv"), model = dir.file("m.json"), preds = dir.file("p.csv");
  ASSERT_EQ(run({"gen-data", "--kind", "noisy-line", "--n", "200", "--sigma-true", "0.5", "--seed", "2", "--out", data})
                .code,
            0);
  auto t = run({"train", "--data", data, "--method", "wdropout", "--hidden", "16,16", "--L", "4", "--epochs", "30",
                "--seed", "1", "--out", model});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto e1 = run({"eval", "--model", model, "--data", data, "--seed", "4", "--write-predictions", preds});
  ASSERT_EQ(e1.code, 0) << e1.err;
  const auto j = nlohmann::json::parse(e1.out);
  EXPECT_EQ(j.at("n_points").get<std::size_t>(), 200u);
  EXPECT_TRUE(std::isfinite(j.at("ws").get<double>()));
  // Scoring the written predictions gives the same report.
  const auto e2 = run({"eval", "--predictions", preds});
  ASSERT_EQ(e2.code, 0) << e2.err;
  const auto j2 = nlohmann::json::parse(e2.out);
  EXPECT_NEAR(j2.at("rmse").get<double>(), j.at("rmse").get<double>(), 1e-9);
  EXPECT_NEAR(j2.at("ece").get<double>(), j.at("ece").get<double>(), 1e-9);

  EXPECT_EQ(run({"train", "--data", data, "--method", "nope", "--out", model}).code, cli::kExitUsage);
  EXPECT_EQ(run({"eval", "--model", model}).code, cli::kExitUsage);
}
