#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wdrop/method.hpp"
#include "wdrop/splits.hpp"

namespace wdrop {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where a dataset comes from: a generator or a CSV file.
struct DatasetSpec {
  std::string kind;  // toy-noise | toy-hf | noisy-line | csv
  std::string path;  // csv only
  std::string target;
  std::size_t n = 12000;
  double sigma_true = 1.0;

  bool generated() const { return kind != "csv"; }
  std::string display_name() const;
};

inline std::string DatasetSpec::display_name() const {
  if (generated()) return kind;
  const auto slash = path.find_last_of('/');
  std::string base = path.substr(slash == std::string::npos ? 0 : slash + 1);
  if (base.size() > 4 && base.ends_with(".csv")) base.resize(base.size() - 4);
  return base;
}

/// Training budget per dataset size: small (< 2000 rows) trains 1000 epochs
/// with 10 folds, large 150 epochs with 5 folds, very large (> 100000 rows)
/// additionally uses mini-batches of 500.
enum class SizeClass { small, large, very_large };

inline SizeClass size_class_for(std::size_t n) {
  if (n < 2000) return SizeClass::small;
  if (n <= 100000) return SizeClass::large;
  return SizeClass::very_large;
}

inline SizeClass parse_size_class(const std::string& s) {
  if (s == "small") return SizeClass::small;
  if (s == "large") return SizeClass::large;
  if (s == "very_large" || s == "very-large") return SizeClass::very_large;
  throw ConfigError("unknown size_class '" + s + "' (expected auto, small, large or very_large)");
}

inline std::string to_string(SizeClass c) {
  switch (c) {
    case SizeClass::small: return "small";
    case SizeClass::large: return "large";
    case SizeClass::very_large: return "very_large";
  }
  return "?";
}

struct SweepSpec {
  std::string param;  // "p" or "L"
  std::vector<double> values;
};

/// Declarative experiment description, read from a flat key = value file.
/// Unset optional fields are filled per dataset (size class, toy vs. tabular).
struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<DatasetSpec> datasets;
  std::vector<Method> methods;
  std::vector<SplitKind> splits = {SplitKind::iid_kfold};
  std::vector<Regime> regimes = {Regime::extrapolate};
  std::optional<std::size_t> folds;
  std::size_t n_chunks = 10;
  std::optional<SizeClass> size_class;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::vector<std::size_t>> hidden;
  std::optional<std::size_t> train_samples;  // L
  double drop_rate = 0.1;
  std::size_t inference_samples = 50;
  double mc_lambda = 1e-6;
  std::size_t ensemble_size = 5;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool seed_given = false;  // false when the file has no seed key
  std::size_t max_folds = 0;  // 0 = every fold of every plan
  std::size_t bins = 10;
  std::size_t threads = 1;
  std::string output = "wdrop-out";
  std::optional<SweepSpec> sweep;

  void validate() const {
    if (datasets.empty()) throw ConfigError("config: no datasets listed");
    if (methods.empty()) throw ConfigError("config: no methods listed");
    if (splits.empty()) throw ConfigError("config: no splits listed");
    for (auto s : splits)
      if (s != SplitKind::iid_kfold && regimes.empty()) throw ConfigError("config: pca/label splits need regimes");
    if (n_chunks < 3) throw ConfigError("config: n_chunks must be >= 3");
    if (bins < 2) throw ConfigError("config: bins must be >= 2");
    if (threads == 0) throw ConfigError("config: threads must be >= 1");
    if (folds && *folds < 2) throw ConfigError("config: folds must be >= 2");
    if (sweep) {
      if (sweep->param != "p" && sweep->param != "L")
        throw ConfigError("config: sweep_param must be 'p' or 'L', got '" + sweep->param + "'");
      if (sweep->values.empty()) throw ConfigError("config: sweep_values must not be empty");
    }
    for (const auto& d : datasets) {
      if (d.kind != "toy-noise" && d.kind != "toy-hf" && d.kind != "noisy-line" && d.kind != "csv")
        throw ConfigError("config: unknown dataset kind '" + d.kind + "'");
      if (d.generated() && d.n == 0) throw ConfigError("config: n must be positive");
    }
  }
};

/// Method settings for one dataset, applying the size-class and toy defaults.
inline MethodConfig method_config_for(const ExperimentConfig& cfg, Method m, const DatasetSpec& ds,
                                      std::size_t n_rows) {
  const SizeClass cls = cfg.size_class.value_or(size_class_for(n_rows));
  MethodConfig mc;
  mc.method = m;
  const bool toy = ds.generated();
  mc.hidden = cfg.hidden.value_or(toy ? std::vector<std::size_t>{50, 50} : std::vector<std::size_t>{100, 100});
  mc.train_samples = cfg.train_samples.value_or(toy ? 10 : 5);
  mc.drop_rate = cfg.drop_rate;
  mc.inference_samples = cfg.inference_samples;
  mc.mc_lambda = cfg.mc_lambda;
  mc.ensemble_size = cfg.ensemble_size;
  mc.epochs = cfg.epochs.value_or(cls == SizeClass::small ? 1000 : 150);
  mc.batch_size = cfg.batch_size.value_or(cls == SizeClass::very_large ? 500 : 100);
  mc.lr = cfg.lr;
  mc.seed = cfg.seed;
  return mc;
}

inline std::size_t folds_for(const ExperimentConfig& cfg, std::size_t n_rows) {
  if (cfg.folds) return *cfg.folds;
  const SizeClass cls = cfg.size_class.value_or(size_class_for(n_rows));
  return cls == SizeClass::small ? 10 : 5;
}

namespace detail {

inline std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = strip(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

inline std::size_t to_size(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
    throw ConfigError("config: key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(d);
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

}  // namespace detail

/// Parses the flat key = value format; '#' starts a comment and lists are
/// comma separated. Unknown keys are errors.
inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
  ExperimentConfig cfg;
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::strip(line.substr(0, eq));
    if (kv.count(key)) throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = detail::strip(line.substr(eq + 1));
  }

  std::size_t n_rows = 12000;
  double sigma_true = 1.0;
  std::string target;
  std::vector<std::string> dataset_items;
  for (const auto& [key, v] : kv) {
    if (key == "name") cfg.name = v;
    else if (key == "datasets" || key == "dataset") dataset_items = detail::split_list(v);
    else if (key == "n") n_rows = detail::to_size(key, v);
    else if (key == "sigma_true") sigma_true = detail::to_double(key, v);
    else if (key == "target") target = v;
    else if (key == "methods" || key == "method") {
      cfg.methods.clear();
      for (const auto& m : detail::split_list(v)) {
        try {
          cfg.methods.push_back(parse_method(m));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("config: ") + e.what());
        }
      }
    } else if (key == "splits" || key == "split") {
      cfg.splits.clear();
      for (const auto& s : detail::split_list(v)) {
        try {
          cfg.splits.push_back(parse_split_kind(s));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("config: ") + e.what());
        }
      }
    } else if (key == "regimes" || key == "regime") {
      cfg.regimes.clear();
      for (const auto& s : detail::split_list(v)) {
        try {
          cfg.regimes.push_back(parse_regime(s));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("config: ") + e.what());
        }
      }
    } else if (key == "folds") {
      if (v != "auto") cfg.folds = detail::to_size(key, v);
    } else if (key == "n_chunks") cfg.n_chunks = detail::to_size(key, v);
    else if (key == "size_class") {
      if (v != "auto") cfg.size_class = parse_size_class(v);
    } else if (key == "epochs") {
      if (v != "auto") cfg.epochs = detail::to_size(key, v);
    } else if (key == "batch_size") {
      if (v != "auto") cfg.batch_size = detail::to_size(key, v);
    } else if (key == "hidden") {
      if (v != "auto") {
        std::vector<std::size_t> h;
        for (const auto& s : detail::split_list(v)) h.push_back(detail::to_size(key, s));
        cfg.hidden = h;
      }
    } else if (key == "L") {
      if (v != "auto") cfg.train_samples = detail::to_size(key, v);
    } else if (key == "p") cfg.drop_rate = detail::to_double(key, v);
    else if (key == "T") cfg.inference_samples = detail::to_size(key, v);
    else if (key == "lambda") cfg.mc_lambda = detail::to_double(key, v);
    else if (key == "ensemble_size" || key == "M") cfg.ensemble_size = detail::to_size(key, v);
    else if (key == "lr") cfg.lr = detail::to_double(key, v);
    else if (key == "seed") {
      cfg.seed = detail::to_u64(key, v);
      cfg.seed_given = true;
    }
    else if (key == "max_folds") cfg.max_folds = detail::to_size(key, v);
    else if (key == "bins") cfg.bins = detail::to_size(key, v);
    else if (key == "threads") cfg.threads = detail::to_size(key, v);
    else if (key == "output") cfg.output = v;
    else if (key == "sweep_param") {
      if (!cfg.sweep) cfg.sweep = SweepSpec{};
      cfg.sweep->param = v;
    } else if (key == "sweep_values") {
      if (!cfg.sweep) cfg.sweep = SweepSpec{};
      cfg.sweep->values.clear();
      for (const auto& s : detail::split_list(v)) cfg.sweep->values.push_back(detail::to_double(key, s));
    } else {
      throw ConfigError(origin + ": unknown key '" + key + "'");
    }
  }

  for (const auto& item : dataset_items) {
    DatasetSpec d;
    if (item.rfind("csv:", 0) == 0) {
      d.kind = "csv";
      d.path = item.substr(4);
    } else {
      d.kind = item;
    }
    d.n = n_rows;
    d.sigma_true = sigma_true;
    d.target = target;
    cfg.datasets.push_back(d);
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ExperimentConfig cfg = parse_config(in, path);
  // Relative CSV paths are resolved against the config file's directory.
  const auto slash = path.find_last_of('/');
  if (slash != std::string::npos)
    for (auto& d : cfg.datasets)
      if (d.kind == "csv" && !d.path.empty() && d.path.front() != '/') d.path = path.substr(0, slash + 1) + d.path;
  return cfg;
}

}  // namespace wdrop
