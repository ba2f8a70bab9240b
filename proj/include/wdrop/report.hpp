#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "wdrop/config.hpp"
#include "wdrop/experiment.hpp"
#include "wdrop/metrics.hpp"

namespace wdrop {

inline constexpr std::array<const char*, 6> kMetricNames = {"rmse", "nll", "ece", "ws", "etl", "ks"};

inline double metric_value(const EvalReport& r, const std::string& name) {
  if (name == "rmse") return r.rmse;
  if (name == "nll") return r.mean_nll;
  if (name == "ece") return r.ece;
  if (name == "ws") return r.ws;
  if (name == "etl") return r.etl;
  if (name == "ks") return r.ks;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::size_t count = 0;
};

struct SummaryRow {
  std::string method;
  std::string split;  // train | test | interpolate | extrapolate | interpolate-train | extrapolate-train
  std::string metric;
  SummaryStats stats;
};

/// Linear-interpolation quantile of sorted values (q in [0, 1]).
inline double quantile_sorted(const std::vector<double>& s, double q) {
  if (s.empty()) throw std::invalid_argument("quantile_sorted: empty input");
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

inline SummaryStats summarize(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("summarize: empty input");
  std::sort(v.begin(), v.end());
  SummaryStats s;
  double total = 0.0;
  for (double x : v) total += x;
  s.count = v.size();
  s.mean = total / static_cast<double>(v.size());
  s.median = quantile_sorted(v, 0.5);
  s.q25 = quantile_sorted(v, 0.25);
  s.q75 = quantile_sorted(v, 0.75);
  return s;
}

namespace detail {

// Sum in sorted order so that results do not depend on record order.
inline double order_free_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += x;
  return total / static_cast<double>(v.size());
}

// iid -> iid; pca-extrapolate / label-extrapolate -> extrapolate; etc.
inline std::string split_group(const std::string& label) {
  const auto dash = label.find('-');
  return dash == std::string::npos ? label : label.substr(dash + 1);
}

inline std::string summary_split(const std::string& group, const std::string& side) {
  if (group == "iid") return side;
  return side == "test" ? group : group + "-train";
}

}  // namespace detail

/// Two-stage aggregation. Folds are averaged per (dataset, split label);
/// the pca and label variants of a regime are averaged next; the per-dataset
/// values are then summarized (mean, median, quartiles) across datasets.
/// Rows are sorted by method, split and metric order.
inline std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records) {
  using FoldKey = std::tuple<std::string, std::string, std::string, std::string, std::string>;
  std::map<FoldKey, std::vector<double>> by_label;  // (method, side, dataset, label, metric)
  for (const auto& r : records)
    for (const char* m : kMetricNames)
      by_label[{r.method, r.side, r.dataset, r.split, m}].push_back(metric_value(r.metrics, m));

  using GroupKey = std::tuple<std::string, std::string, std::string, std::string, std::string>;
  std::map<GroupKey, std::vector<double>> by_group;  // (method, side, dataset, group, metric)
  for (const auto& [k, v] : by_label) {
    const auto& [method, side, dataset, label, metric] = k;
    by_group[{method, side, dataset, detail::split_group(label), metric}].push_back(detail::order_free_mean(v));
  }

  using SummaryKey = std::tuple<std::string, std::string, std::size_t>;
  std::map<SummaryKey, std::vector<double>> by_summary;  // (method, split, metric index)
  for (const auto& [k, v] : by_group) {
    const auto& [method, side, dataset, group, metric] = k;
    const auto idx = static_cast<std::size_t>(
        std::find_if(kMetricNames.begin(), kMetricNames.end(), [&](const char* n) { return metric == n; }) -
        kMetricNames.begin());
    by_summary[{method, detail::summary_split(group, side), idx}].push_back(detail::order_free_mean(v));
  }

  std::vector<SummaryRow> rows;
  for (const auto& [k, v] : by_summary) {
    const auto& [method, split, idx] = k;
    rows.push_back({method, split, kMetricNames[idx], summarize(v)});
  }
  return rows;
}

/// Fixed-precision number formatting used by the CSV outputs.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "method,split,metric,mean,median,q25,q75\n";
  for (const auto& r : rows)
    out += r.method + "," + r.split + "," + r.metric + "," + format_number(r.stats.mean) + "," +
           format_number(r.stats.median) + "," + format_number(r.stats.q25) + "," + format_number(r.stats.q75) + "\n";
  return out;
}

/// Plot-ready table: one series per (method, split), x is the sweep value or
/// empty for a plain benchmark.
struct PlotPoint {
  std::string series;
  std::string metric;
  std::string x;
  SummaryStats stats;
};

inline std::vector<PlotPoint> plot_points(const std::vector<SummaryRow>& rows, const std::string& x = {}) {
  std::vector<PlotPoint> out;
  for (const auto& r : rows) out.push_back({r.method + ":" + r.split, r.metric, x, r.stats});
  return out;
}

inline std::string plot_csv(const std::vector<PlotPoint>& points) {
  std::string out = "series,metric,x,mean,q25,median,q75\n";
  for (const auto& p : points)
    out += p.series + "," + p.metric + "," + p.x + "," + format_number(p.stats.mean) + "," +
           format_number(p.stats.q25) + "," + format_number(p.stats.median) + "," + format_number(p.stats.q75) + "\n";
  return out;
}

// JSON mappings.

inline void to_json(nlohmann::json& j, const EvalReport& r) {
  j = {{"n_points", r.n_points}, {"rmse", r.rmse}, {"nll", r.mean_nll}, {"ece", r.ece},
       {"ws", r.ws},             {"etl", r.etl},   {"ks", r.ks},        {"sigma_floor_hits", r.sigma_floor_hits}};
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
  j.at("n_points").get_to(r.n_points);
  j.at("rmse").get_to(r.rmse);
  j.at("nll").get_to(r.mean_nll);
  j.at("ece").get_to(r.ece);
  j.at("ws").get_to(r.ws);
  j.at("etl").get_to(r.etl);
  j.at("ks").get_to(r.ks);
  j.at("sigma_floor_hits").get_to(r.sigma_floor_hits);
}

inline void to_json(nlohmann::json& j, const RunRecord& r) {
  j = {{"dataset", r.dataset}, {"method", r.method}, {"split", r.split},
       {"fold", r.fold},       {"side", r.side},     {"metrics", r.metrics}};
}

inline void from_json(const nlohmann::json& j, RunRecord& r) {
  j.at("dataset").get_to(r.dataset);
  j.at("method").get_to(r.method);
  j.at("split").get_to(r.split);
  j.at("fold").get_to(r.fold);
  j.at("side").get_to(r.side);
  j.at("metrics").get_to(r.metrics);
}

inline void to_json(nlohmann::json& j, const SummaryStats& s) {
  j = {{"mean", s.mean}, {"median", s.median}, {"q25", s.q25}, {"q75", s.q75}, {"count", s.count}};
}

inline void to_json(nlohmann::json& j, const SummaryRow& r) {
  j = {{"method", r.method}, {"split", r.split}, {"metric", r.metric}, {"stats", r.stats}};
}

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : cfg.datasets) {
    nlohmann::json e = {{"kind", d.kind}, {"name", d.display_name()}};
    if (d.generated()) e["n"] = d.n;
    if (d.kind == "noisy-line") e["sigma_true"] = d.sigma_true;
    if (!d.path.empty()) e["path"] = d.path;
    if (!d.target.empty()) e["target"] = d.target;
    ds.push_back(e);
  }
  nlohmann::json methods = nlohmann::json::array();
  for (auto m : cfg.methods) methods.push_back(to_string(m));
  nlohmann::json splits = nlohmann::json::array();
  for (auto s : cfg.splits) splits.push_back(to_string(s));
  nlohmann::json regimes = nlohmann::json::array();
  for (auto r : cfg.regimes) regimes.push_back(to_string(r));
  nlohmann::json j = {{"name", cfg.name},
                      {"datasets", ds},
                      {"methods", methods},
                      {"splits", splits},
                      {"regimes", regimes},
                      {"n_chunks", cfg.n_chunks},
                      {"p", cfg.drop_rate},
                      {"T", cfg.inference_samples},
                      {"lambda", cfg.mc_lambda},
                      {"ensemble_size", cfg.ensemble_size},
                      {"lr", cfg.lr},
                      {"seed", cfg.seed},
                      {"max_folds", cfg.max_folds},
                      {"bins", cfg.bins}};
  // threads and output location do not affect results and are left out so
  // that reports stay byte-identical across machines.
  if (cfg.folds) j["folds"] = *cfg.folds;
  if (cfg.size_class) j["size_class"] = to_string(*cfg.size_class);
  if (cfg.epochs) j["epochs"] = *cfg.epochs;
  if (cfg.batch_size) j["batch_size"] = *cfg.batch_size;
  if (cfg.hidden) j["hidden"] = *cfg.hidden;
  if (cfg.train_samples) j["L"] = *cfg.train_samples;
  return j;
}

inline nlohmann::json report_json(const ExperimentConfig& cfg, const std::vector<RunRecord>& records,
                                  const std::vector<SummaryRow>& summary) {
  return {{"config", config_json(cfg)}, {"reports", records}, {"summary", summary}};
}

inline std::vector<RunRecord> records_from_json(const nlohmann::json& j) {
  return j.at("reports").get<std::vector<RunRecord>>();
}

inline nlohmann::json splits_json(const std::vector<PreparedDataset>& data) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : data)
    for (const auto& p : d.plans)
      out.push_back({{"dataset", d.data.name}, {"split", p.label()}, {"fold", p.fold}, {"train", p.train},
                     {"test", p.test}});
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("I/O error while writing '" + path + "'");
}

}  // namespace wdrop
