#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wdrop/wdrop.hpp"

namespace wdrop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Raised for bad flag values detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Default seed: WDROP_SEED if set and valid, else 0.
inline std::uint64_t default_seed() {
  const char* env = std::getenv("WDROP_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used == std::string(env).size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string("WDROP_SEED must be an unsigned integer, got '") + env + "'");
}

/// "a:b:n" gives n evenly spaced values from a to b inclusive; otherwise a
/// comma-separated list.
inline std::vector<double> parse_range(const std::string& text, const std::string& flag) {
  auto number = [&](const std::string& s) {
    double v = 0.0;
    if (!wdrop::detail::parse_number(wdrop::detail::trim(s), v))
      throw UsageError(flag + ": '" + s + "' is not a number");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw UsageError(flag + ": expected a:b:n, got '" + text + "'");
    const double a = number(parts[0]), b = number(parts[1]), nd = number(parts[2]);
    if (nd < 1 || nd != static_cast<double>(static_cast<long>(nd)))
      throw UsageError(flag + ": point count must be a positive integer");
    const auto n = static_cast<std::size_t>(nd);
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  } else {
    for (const auto& s : wdrop::detail::split_list(text)) out.push_back(number(s));
  }
  if (out.empty()) throw UsageError(flag + ": empty range");
  return out;
}

inline std::string fmt(double v) { return format_number(v); }

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

inline void ensure_parent(const std::string& file) {
  const auto parent = std::filesystem::path(file).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

inline RegressionDataset generate(const std::string& kind, std::size_t n, double sigma_true, std::uint64_t seed,
                                  bool raw) {
  SeededRng rng(seed);
  if (kind == "toy-noise") return gen_toy_noise(n, rng, !raw);
  if (kind == "toy-hf") return gen_toy_hf(n, rng, !raw);
  if (kind == "noisy-line") return gen_noisy_line(n, sigma_true, rng);
  throw UsageError("--kind must be toy-noise, toy-hf or noisy-line, got '" + kind + "'");
}

inline ExperimentConfig load_bench_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("config file not found: '" + path + "'");
  try {
    return load_config(path);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

/// Writes report.json, summary.csv, plot.csv and splits.json under dir.
inline std::vector<SummaryRow> write_bench_outputs(const std::string& dir, const ExperimentConfig& cfg,
                                                   const std::vector<PreparedDataset>& data,
                                                   const std::vector<RunRecord>& records, const std::string& x = {}) {
  ensure_dir(dir);
  const auto summary = aggregate(records);
  write_text(dir + "/report.json", report_json(cfg, records, summary).dump(2) + "\n");
  write_text(dir + "/summary.csv", summary_csv(summary));
  write_text(dir + "/plot.csv", plot_csv(plot_points(summary, x)));
  write_text(dir + "/splits.json", splits_json(data).dump() + "\n");
  return summary;
}

inline void print_job_matrix(std::ostream& out, const std::vector<JobDescription>& jobs) {
  out << "dataset,split,fold,method,n_train,n_test,epochs,batch_size\n";
  for (const auto& j : jobs)
    out << j.dataset << ',' << j.split << ',' << j.fold << ',' << j.method << ',' << j.n_train << ',' << j.n_test
        << ',' << j.epochs << ',' << j.batch_size << '\n';
}

/// Entry point shared by the executable and the tests. Returns the exit code.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wasserstein dropout: training, evaluation and benchmarks for regression uncertainty", "wdrop"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  std::string gen_kind, gen_out;
  std::size_t gen_n = 1000;
  double gen_sigma = 1.0;
  std::optional<std::uint64_t> gen_seed;
  bool gen_raw = false;
  gen->add_option("--kind", gen_kind, "toy-noise | toy-hf | noisy-line")->required();
  gen->add_option("--n", gen_n, "Number of rows")->check(CLI::PositiveNumber);
  gen->add_option("--sigma-true", gen_sigma, "Noise std of noisy-line")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "Random seed (default: $WDROP_SEED or 0)");
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  gen->add_flag("--raw", gen_raw, "Do not standardize toy-noise / toy-hf");

  // train
  auto* tr = app.add_subcommand("train", "Train one method and save the model as JSON");
  std::string tr_data, tr_kind, tr_target, tr_method = "wdropout", tr_out;
  std::size_t tr_n = 1000;
  double tr_sigma = 1.0;
  std::optional<std::uint64_t> tr_seed;
  MethodConfig tr_cfg;
  bool tr_raw = false, tr_verbose = false;
  auto* tr_src = tr->add_option_group("source", "Training data");
  tr_src->add_option("--data", tr_data, "CSV file (target = last column unless --target)");
  tr_src->add_option("--kind", tr_kind, "Generate toy-noise | toy-hf | noisy-line instead");
  tr_src->require_option(1);
  tr->add_option("--target", tr_target, "Target column name");
  tr->add_option("--n", tr_n, "Rows to generate with --kind")->check(CLI::PositiveNumber);
  tr->add_option("--sigma-true", tr_sigma, "Noise std for --kind noisy-line")->check(CLI::NonNegativeNumber);
  tr->add_option("--method", tr_method, "wdropout | mc | pu | de | pu_de | pu_mc");
  tr->add_option("--hidden", tr_cfg.hidden, "Hidden layer widths")->delimiter(',');
  tr->add_option("--p", tr_cfg.drop_rate, "Dropout rate");
  tr->add_option("--L", tr_cfg.train_samples, "Sub-networks per step (W-dropout)");
  tr->add_option("--T", tr_cfg.inference_samples, "Inference passes");
  tr->add_option("--lambda", tr_cfg.mc_lambda, "MC dropout variance offset");
  tr->add_option("--ensemble-size", tr_cfg.ensemble_size, "Ensemble members");
  tr->add_option("--epochs", tr_cfg.epochs, "Training epochs");
  tr->add_option("--batch-size", tr_cfg.batch_size, "Mini-batch size");
  tr->add_option("--lr", tr_cfg.lr, "Adam learning rate");
  tr->add_option("--seed", tr_seed, "Random seed (default: $WDROP_SEED or 0)");
  tr->add_flag("--raw", tr_raw, "Train on raw values instead of standardized ones");
  tr->add_flag("--verbose", tr_verbose, "Print the loss every 100 epochs");
  tr->add_option("--out", tr_out, "Model JSON path")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Score predictions: metrics as JSON");
  std::string ev_pred, ev_model, ev_data, ev_target, ev_out, ev_pred_out;
  std::size_t ev_bins = 10;
  double ev_q = 0.99;
  std::optional<std::uint64_t> ev_seed;
  auto* ev_src = ev->add_option_group("source", "What to score");
  ev_src->add_option("--predictions", ev_pred, "CSV with columns mu, sigma, y");
  ev_src->add_option("--model", ev_model, "Model JSON written by train");
  ev_src->require_option(1);
  ev->add_option("--data", ev_data, "CSV data to score the model on");
  ev->add_option("--target", ev_target, "Target column name");
  ev->add_option("--bins", ev_bins, "ECE bins")->check(CLI::Range(2, 1000000));
  ev->add_option("--tail-q", ev_q, "ETL quantile")->check(CLI::Range(0.0, 1.0));
  ev->add_option("--seed", ev_seed, "Random seed for sampling passes");
  ev->add_option("--out", ev_out, "Write the JSON report here instead of stdout");
  ev->add_option("--write-predictions", ev_pred_out, "Also write mu, sigma, y as CSV");

  // bench
  auto* be = app.add_subcommand("bench", "Run the experiment described by a config file");
  std::string be_config, be_out;
  std::optional<std::size_t> be_threads;
  std::optional<std::uint64_t> be_seed;
  bool be_dry = false, be_verbose = false;
  be->add_option("--config", be_config, "Config file")->required();
  be->add_option("--out", be_out, "Output directory (overrides the config)");
  be->add_option("--threads", be_threads, "Parallel jobs")->check(CLI::PositiveNumber);
  be->add_option("--seed", be_seed, "Master seed (overrides the config)");
  be->add_flag("--dry-run", be_dry, "Print the job matrix and exit");
  be->add_flag("--verbose", be_verbose, "Print one line per finished job");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Repeat a benchmark for several values of p or L");
  std::string sw_param, sw_values, sw_config, sw_out;
  std::optional<std::size_t> sw_threads;
  std::optional<std::uint64_t> sw_seed;
  bool sw_verbose = false;
  sw->add_option("--param", sw_param, "p | L")->required();
  sw->add_option("--values", sw_values, "Values as a comma list or a:b:n")->required();
  sw->add_option("--config", sw_config, "Config file")->required();
  sw->add_option("--out", sw_out, "Output directory (overrides the config)");
  sw->add_option("--threads", sw_threads, "Parallel jobs")->check(CLI::PositiveNumber);
  sw->add_option("--seed", sw_seed, "Master seed (overrides the config)");
  sw->add_flag("--verbose", sw_verbose, "Print one line per finished job");

  // curves
  auto* cu = app.add_subcommand("curves", "Tabulate WS1, WS2 and ECE of N(mu, sigma^2) against N(0, 1)");
  std::string cu_mu = "0", cu_sigma = "0.05:5:100", cu_out;
  std::size_t cu_bins = 10;
  cu->add_option("--mu-range", cu_mu, "mu values (a:b:n or list)");
  cu->add_option("--sigma-range", cu_sigma, "sigma values (a:b:n or list)");
  cu->add_option("--bins", cu_bins, "ECE bins")->check(CLI::Range(2, 1000000));
  cu->add_option("--out", cu_out, "Output CSV path (stdout if omitted)");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
      err << "run 'wdrop " << sub->get_name() << " --help' for usage\n";
    else
      err << "run 'wdrop --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const std::uint64_t seed = gen_seed ? *gen_seed : default_seed();
      const auto data = generate(gen_kind, gen_n, gen_sigma, seed, gen_raw);
      ensure_parent(gen_out);
      write_csv(data, gen_out);
      out << "wrote " << data.size() << " rows to " << gen_out << "\n";
      return kExitOk;
    }

    if (tr->parsed()) {
      try {
        tr_cfg.method = parse_method(tr_method);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      tr_cfg.seed = tr_seed ? *tr_seed : default_seed();
      try {
        tr_cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      RegressionDataset data = tr_data.empty() ? generate(tr_kind, tr_n, tr_sigma, tr_cfg.seed, true)
                                               : load_csv(tr_data, tr_target);
      SavedModel saved;
      if (!tr_raw) {
        saved.normalizer = fit_normalizer(data);
        data = apply_normalizer(*saved.normalizer, data);
      }
      EpochCallback cb;
      if (tr_verbose)
        cb = [&](std::size_t member, std::size_t epoch, double loss) {
          if ((epoch + 1) % 100 == 0 || epoch == 0)
            err << "member " << member << " epoch " << epoch + 1 << " loss " << fmt(loss) << "\n";
        };
      saved.model = train(tr_cfg, data, SeededRng(tr_cfg.seed).split(0), cb);
      ensure_parent(tr_out);
      save_model(saved, tr_out);
      out << "wrote " << to_string(tr_cfg.method) << " model to " << tr_out << "\n";
      return kExitOk;
    }

    if (ev->parsed()) {
      PredictiveDistribution pred;
      Matrix y;
      if (!ev_pred.empty()) {
        auto table = load_prediction_csv(ev_pred);
        pred = std::move(table.pred);
        y = std::move(table.y);
        if (!table.rejected_lines.empty())
          err << "skipped " << table.rejected_lines.size() << " malformed rows in " << ev_pred << "\n";
      } else {
        if (ev_data.empty()) throw UsageError("eval --model needs --data");
        const SavedModel saved = load_model(ev_model);
        const RegressionDataset data = load_csv(ev_data, ev_target);
        Matrix x = data.features;
        if (saved.normalizer) x = saved.normalizer->apply_features(x);
        SeededRng rng(ev_seed ? *ev_seed : default_seed());
        pred = predict(saved.model, x, rng);
        if (saved.normalizer) {
          pred.mu = saved.normalizer->invert_targets(pred.mu);
          pred.sigma = pred.sigma.array().rowwise() * saved.normalizer->target_std.transpose().array();
        }
        y = data.targets;
      }
      const EvalReport rep = evaluate(pred, y, ev_bins, ev_q);
      nlohmann::json j = rep;
      const std::string text = j.dump(2) + "\n";
      if (!ev_pred_out.empty()) {
        std::string csv = "mu,sigma,y\n";
        for (Eigen::Index i = 0; i < y.rows(); ++i)
          csv += wdrop::detail::format_double(pred.mu(i, 0)) + "," + wdrop::detail::format_double(pred.sigma(i, 0)) +
                 "," + wdrop::detail::format_double(y(i, 0)) + "\n";
        ensure_parent(ev_pred_out);
        write_text(ev_pred_out, csv);
      }
      if (ev_out.empty()) {
        out << text;
      } else {
        ensure_parent(ev_out);
        write_text(ev_out, text);
      }
      return kExitOk;
    }

    if (be->parsed() || sw->parsed()) {
      const bool sweep = sw->parsed();
      ExperimentConfig cfg = load_bench_config(sweep ? sw_config : be_config);
      const auto& seed_flag = sweep ? sw_seed : be_seed;
      if (seed_flag)
        cfg.seed = *seed_flag;
      else if (!cfg.seed_given)
        cfg.seed = default_seed();
      if (const auto& t = sweep ? sw_threads : be_threads) cfg.threads = *t;
      if (const auto& o = sweep ? sw_out : be_out; !o.empty()) cfg.output = o;
      LogFn log;
      if (sweep ? sw_verbose : be_verbose) log = [&](const std::string& s) { err << s << "\n"; };

      if (!sweep) {
        const auto data = prepare_datasets(cfg);
        if (be_dry) {
          print_job_matrix(out, describe_jobs(cfg, data));
          return kExitOk;
        }
        const auto records = run_experiment(cfg, data, log);
        const auto summary = write_bench_outputs(cfg.output, cfg, data, records);
        out << "ran " << records.size() / 2 << " jobs; " << summary.size() << " summary rows in " << cfg.output
            << "/summary.csv\n";
        return kExitOk;
      }

      if (sw_param != "p" && sw_param != "L") throw UsageError("--param must be 'p' or 'L', got '" + sw_param + "'");
      const auto values = parse_range(sw_values, "--values");
      std::vector<PlotPoint> points;
      std::string combined = "value,method,split,metric,mean,median,q25,q75\n";
      for (double v : values) {
        ExperimentConfig c;
        try {
          c = with_sweep_value(cfg, sw_param, v);
          c.validate();
        } catch (const ConfigError& e) {
          throw UsageError(e.what());
        }
        const std::string x = fmt(v);
        const auto data = prepare_datasets(c);
        const auto records = run_experiment(c, data, log);
        const auto summary = write_bench_outputs(cfg.output + "/" + sw_param + "=" + x, c, data, records, x);
        for (const auto& p : plot_points(summary, x)) points.push_back(p);
        for (const auto& r : summary)
          combined += x + "," + r.method + "," + r.split + "," + r.metric + "," + fmt(r.stats.mean) + "," +
                      fmt(r.stats.median) + "," + fmt(r.stats.q25) + "," + fmt(r.stats.q75) + "\n";
        out << sw_param << " = " << x << ": " << records.size() / 2 << " jobs\n";
      }
      write_text(cfg.output + "/sweep_summary.csv", combined);
      write_text(cfg.output + "/plot.csv", plot_csv(points));
      return kExitOk;
    }

    if (cu->parsed()) {
      const auto mus = parse_range(cu_mu, "--mu-range");
      const auto sigmas = parse_range(cu_sigma, "--sigma-range");
      for (double s : sigmas)
        if (s < 0) throw UsageError("--sigma-range: sigma must be >= 0");
      std::string csv = "mu,sigma,ws1,ws2,ece\n";
      for (double mu : mus)
        for (double s : sigmas) {
          const CurvePoint c = analytic_curves(mu, s, cu_bins);
          csv += fmt(mu) + "," + fmt(s) + "," + fmt(c.ws1) + "," + fmt(c.ws2) + "," + fmt(c.ece) + "\n";
        }
      if (cu_out.empty()) {
        out << csv;
      } else {
        ensure_parent(cu_out);
        write_text(cu_out, csv);
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << "error: no subcommand given\n";
  return kExitUsage;
}

}  // namespace wdrop::cli
