#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "wdrop/config.hpp"
#include "wdrop/csv.hpp"
#include "wdrop/dataset.hpp"
#include "wdrop/generators.hpp"
#include "wdrop/metrics.hpp"
#include "wdrop/predict.hpp"
#include "wdrop/rng.hpp"
#include "wdrop/splits.hpp"
#include "wdrop/train.hpp"

namespace wdrop {

/// Metrics of one trained model on one side (train or test) of one split.
struct RunRecord {
  std::string dataset;
  std::string method;
  std::string split;  // plan label: iid, pca-extrapolate, label-interpolate, ...
  std::size_t fold = 0;
  std::string side;   // train | test
  EvalReport metrics;
};

/// A dataset in raw units together with every split plan run on it.
struct PreparedDataset {
  DatasetSpec spec;
  RegressionDataset data;
  std::vector<SplitPlan> plans;
};

struct Job {
  std::size_t dataset = 0;
  std::size_t plan = 0;
  std::size_t method = 0;
};

/// Row of the job matrix, as printed by a dry run.
struct JobDescription {
  std::string dataset;
  std::string split;
  std::size_t fold = 0;
  std::string method;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
};

using LogFn = std::function<void(const std::string&)>;

/// Stream layout: dataset d draws from master.split(d); within it split(0)
/// generates data, split(1) shuffles folds and split(2).split(plan).split(method)
/// drives one job (split(0) training, split(1) prediction).
inline SeededRng dataset_stream(const ExperimentConfig& cfg, std::size_t d) { return SeededRng(cfg.seed).split(d); }

inline SeededRng job_stream(const ExperimentConfig& cfg, const Job& job) {
  return dataset_stream(cfg, job.dataset).split(2).split(job.plan).split(job.method);
}

inline RegressionDataset load_dataset(const DatasetSpec& spec, SeededRng rng) {
  if (spec.kind == "toy-noise") return gen_toy_noise(spec.n, rng, false);
  if (spec.kind == "toy-hf") return gen_toy_hf(spec.n, rng, false);
  if (spec.kind == "noisy-line") return gen_noisy_line(spec.n, spec.sigma_true, rng);
  if (spec.kind == "csv") return load_csv(spec.path, spec.target);
  throw ConfigError("unknown dataset kind '" + spec.kind + "'");
}

/// Split plans for one dataset. PCA scores are taken on globally
/// standardized features so that no single input scale dominates the axis;
/// label scores use the first target column.
inline std::vector<SplitPlan> make_plans(const ExperimentConfig& cfg, const RegressionDataset& data, SeededRng rng) {
  std::vector<SplitPlan> plans;
  const std::size_t n = data.size();
  auto limit = [&](std::vector<SplitPlan> v) {
    if (cfg.max_folds > 0 && v.size() > cfg.max_folds) v.resize(cfg.max_folds);
    plans.insert(plans.end(), v.begin(), v.end());
  };
  for (SplitKind kind : cfg.splits) {
    if (kind == SplitKind::iid_kfold) {
      limit(kfold(n, folds_for(cfg, n), rng));
      continue;
    }
    Vector scores;
    if (kind == SplitKind::pca)
      scores = pca_scores(apply_normalizer(fit_normalizer(data), data).features);
    else
      scores = data.targets.col(0);
    const std::span<const double> s(scores.data(), static_cast<std::size_t>(scores.size()));
    for (Regime regime : cfg.regimes) {
      std::vector<SplitPlan> v;
      for (std::size_t f : regime_folds(regime, cfg.n_chunks)) v.push_back(ordered_split(s, cfg.n_chunks, regime, f, kind));
      limit(std::move(v));
    }
  }
  for (const auto& p : plans) p.validate(n);
  return plans;
}

inline std::vector<PreparedDataset> prepare_datasets(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<PreparedDataset> out;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    PreparedDataset p;
    p.spec = cfg.datasets[d];
    const SeededRng rng = dataset_stream(cfg, d);
    p.data = load_dataset(p.spec, rng.split(0));
    p.data.name = p.spec.display_name();
    p.plans = make_plans(cfg, p.data, rng.split(1));
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<Job> enumerate_jobs(const ExperimentConfig& cfg, const std::vector<PreparedDataset>& data) {
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < data.size(); ++d)
    for (std::size_t p = 0; p < data[d].plans.size(); ++p)
      for (std::size_t m = 0; m < cfg.methods.size(); ++m) jobs.push_back({d, p, m});
  return jobs;
}

inline std::vector<JobDescription> describe_jobs(const ExperimentConfig& cfg, const std::vector<PreparedDataset>& data) {
  std::vector<JobDescription> out;
  for (const Job& j : enumerate_jobs(cfg, data)) {
    const auto& ds = data[j.dataset];
    const auto& plan = ds.plans[j.plan];
    const MethodConfig mc = method_config_for(cfg, cfg.methods[j.method], ds.spec, ds.data.size());
    out.push_back({ds.data.name, plan.label(), plan.fold, to_string(mc.method), plan.train.size(), plan.test.size(),
                   mc.epochs, mc.batch_size});
  }
  return out;
}

/// Trains one method on one split and evaluates it on both sides. The
/// normalizer is fitted on the training rows only.
inline std::vector<RunRecord> run_job(const ExperimentConfig& cfg, const PreparedDataset& ds, const Job& job,
                                      const LogFn& log = {}) {
  const SplitPlan& plan = ds.plans[job.plan];
  const MethodConfig mc = method_config_for(cfg, cfg.methods[job.method], ds.spec, ds.data.size());
  const RegressionDataset train_raw = ds.data.subset(plan.train);
  const RegressionDataset test_raw = ds.data.subset(plan.test);
  const Normalizer norm = fit_normalizer(train_raw);
  const RegressionDataset train_set = apply_normalizer(norm, train_raw);
  const RegressionDataset test_set = apply_normalizer(norm, test_raw);

  const SeededRng rng = job_stream(cfg, job);
  const std::string tag = ds.data.name + " " + plan.label() + " fold " + std::to_string(plan.fold) + " " +
                          to_string(mc.method);
  TrainedModel model;
  try {
    model = train(mc, train_set, rng.split(0));
  } catch (const TrainingDiverged& e) {
    throw std::runtime_error(tag + ": " + e.what());
  }
  SeededRng pred_rng = rng.split(1);
  std::vector<RunRecord> out;
  for (const auto* side : {&train_set, &test_set}) {
    const PredictiveDistribution pred = predict(model, side->features, pred_rng);
    RunRecord r;
    r.dataset = ds.data.name;
    r.method = to_string(mc.method);
    r.split = plan.label();
    r.fold = plan.fold;
    r.side = side == &train_set ? "train" : "test";
    r.metrics = evaluate(pred, side->targets, cfg.bins);
    out.push_back(std::move(r));
  }
  if (log) {
    char buf[160];
    std::snprintf(buf, sizeof buf, " test rmse %.4f ece %.4f ws %.4f", out[1].metrics.rmse, out[1].metrics.ece,
                  out[1].metrics.ws);
    log(tag + buf);
  }
  return out;
}

/// Runs the full job matrix. Jobs are independent and may run on several
/// threads; results land in fixed slots, so the order never depends on
/// scheduling.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const std::vector<PreparedDataset>& data,
                                             const LogFn& log = {}) {
  const std::vector<Job> jobs = enumerate_jobs(cfg, data);
  std::vector<std::vector<RunRecord>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr error;
  std::mutex error_mutex;
  LogFn safe_log;
  if (log)
    safe_log = [&](const std::string& s) {
      std::lock_guard<std::mutex> lock(log_mutex);
      log(s);
    };

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error) return;
      }
      try {
        slots[i] = run_job(cfg, data[jobs[i].dataset], jobs[i], safe_log);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(cfg.threads, std::max<std::size_t>(jobs.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<RunRecord> out;
  for (auto& s : slots)
    for (auto& r : s) out.push_back(std::move(r));
  return out;
}

inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const LogFn& log = {}) {
  return run_experiment(cfg, prepare_datasets(cfg), log);
}

/// Copy of cfg with the sweep parameter ("p" or "L") set to value.
inline ExperimentConfig with_sweep_value(const ExperimentConfig& cfg, const std::string& param, double value) {
  ExperimentConfig out = cfg;
  if (param == "p") {
    out.drop_rate = value;
  } else if (param == "L") {
    if (value < 2 || value != static_cast<double>(static_cast<std::size_t>(value)))
      throw ConfigError("sweep: L must be an integer >= 2");
    out.train_samples = static_cast<std::size_t>(value);
  } else {
    throw ConfigError("sweep: unknown parameter '" + param + "' (expected p or L)");
  }
  return out;
}

}  // namespace wdrop
