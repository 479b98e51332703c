#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "mflow/experiment.hpp"
#include "mflow/io.hpp"

namespace mflow::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::string out_dir = ".";
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
};

RunConfig load(const Globals& g) {
  if (g.config_path.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Runs one experiment and writes its artifacts into `dir`.
std::pair<Experiment, RunOutcome> run_into(const RunConfig& cfg, const std::string& dir) {
  ensure_dir(dir);
  Experiment exp = prepare_experiment(cfg);
  SnapshotSink sink = [&](double t, const ScalarField& w) {
    write_field_csv(join(dir, "w_t" + format_number(t) + ".csv"), w);
  };
  RunOutcome run = run_experiment(exp, cfg.snapshot_every > 0 ? sink : SnapshotSink{});
  write_file_atomic(join(dir, "timeseries.csv"), timeseries_csv(run.records));
  write_file_atomic(join(dir, "summary.json"), dump(summary_json(exp, run)));
  write_file_atomic(join(dir, "timing.json"),
                    dump({{"wall_seconds", run.wall_seconds}, {"steps", run.steps}}));
  return {std::move(exp), std::move(run)};
}

int cmd_run(const Globals& g, std::ostream& out) {
  RunConfig cfg = load(g);
  auto [exp, run] = run_into(cfg, g.out_dir);
  out << "steps " << run.steps << ", records " << run.records.size() << "\n";
  out << "lambda_theory " << format_number(exp.lambda_theory) << "\n";
  if (run.rate) {
    out << "fitted_rate " << format_number(run.rate->fitted_rate) << "\n";
  } else {
    out << "fitted_rate unavailable: " << run.rate_error << "\n";
  }
  return kExitOk;
}

int cmd_verify(const Globals& g, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load(g);
  ensure_dir(g.out_dir);
  Experiment exp = prepare_experiment(cfg);
  auto entries = run_verification(exp);
  auto report = verify_json(entries);
  write_file_atomic(join(g.out_dir, "verify.json"), dump(report));
  std::size_t failed = 0;
  for (const auto& e : entries) {
    out << (e.passed ? "PASS " : "FAIL ") << e.name << "  value=" << format_number(e.value)
        << " threshold=" << format_number(e.threshold) << "\n";
    if (!e.passed) {
      ++failed;
      err << "failed: " << e.name << " (" << e.detail << ")\n";
    }
  }
  out << entries.size() - failed << "/" << entries.size() << " checks passed\n";
  return failed == 0 ? kExitOk : kExitVerifyFailed;
}

int cmd_rate(const Globals& g, const std::string& timeseries, std::optional<double> e_star,
             std::ostream& out) {
  double lambda_theory = 0.0;
  double star = e_star.value_or(0.0);
  if (!g.config_path.empty()) {
    Experiment exp = prepare_experiment(load(g));
    lambda_theory = exp.lambda_theory;
    if (!e_star) star = exp.minimizer.E_star;
  }
  auto records = read_timeseries_csv(timeseries);
  RateReport rep = fit_decay_rate(records, star, lambda_theory);
  ensure_dir(g.out_dir);
  auto j = rate_json(rep);
  write_file_atomic(join(g.out_dir, "rate.json"), dump(j));
  out << dump(j);
  return kExitOk;
}

int cmd_minimizer(const Globals& g, std::ostream& out) {
  Experiment exp = prepare_experiment(load(g));
  ensure_dir(g.out_dir);
  const auto& gibbs = *exp.gibbs;
  nlohmann::json j{{"E_star", exp.minimizer.E_star},
                   {"Z", gibbs.Z},
                   {"Z_raw", gibbs.Z_raw},
                   {"normalized", gibbs.normalized},
                   {"w_star_constant", exp.minimizer.w_star.size() ? exp.minimizer.w_star[0] : 0.0}};
  write_field_csv(join(g.out_dir, "w_star.csv"), exp.minimizer.w_star);
  write_file_atomic(join(g.out_dir, "minimizer.json"), dump(j));
  out << dump(j);
  return kExitOk;
}

RunConfig apply_axis(RunConfig cfg, const std::string& axis, double value) {
  if (axis == "lambda") {
    cfg.lambda = value;
  } else if (axis == "tau") {
    cfg.tau = value;
    cfg.entropy_tau.reset();
  } else {
    // A q sweep only makes sense for the tsallis family.
    cfg.entropy_family = "tsallis";
    cfg.entropy_q = value;
  }
  validate(cfg);
  return cfg;
}

int cmd_sweep(const Globals& g, const std::string& axis, const std::vector<double>& values,
              std::ostream& out) {
  if (axis != "lambda" && axis != "tau" && axis != "q") {
    throw ConfigError("--axis must be lambda, tau or q");
  }
  if (values.empty()) throw ConfigError("--values must list at least one value");
  RunConfig base = load(g);
  std::vector<RunConfig> configs;
  for (double v : values) configs.push_back(apply_axis(base, axis, v));
  ensure_dir(g.out_dir);

  struct Row {
    double lambda_theory = 0.0;
    double fitted = std::nan("");
  };
  std::vector<Row> rows(values.size());
  std::vector<std::exception_ptr> errors(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      try {
        std::string dir = join(g.out_dir, axis + "_" + format_number(values[i]));
        auto [exp, run] = run_into(configs[i], dir);
        rows[i].lambda_theory = exp.lambda_theory;
        if (!run.rate) throw NumericalError("rate fit failed for " + axis + " = " +
                                           format_number(values[i]) + ": " + run.rate_error);
        rows[i].fitted = run.rate->fitted_rate;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(g.jobs, 1, values.size());
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::string csv = "parameter,lambda_theory,fitted_rate,ratio\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    csv += format_number(values[i]) + "," + format_number(rows[i].lambda_theory) + "," +
           format_number(rows[i].fitted) + "," + format_number(rows[i].fitted / rows[i].lambda_theory) +
           "\n";
  }
  write_file_atomic(join(g.out_dir, "sweep.csv"), csv);
  out << csv;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field Langevin flow solver for a linearized two-layer network"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration (.toml-like flat file or .json)");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Parallel sweep entries")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Override the config seed");

  auto* run = app.add_subcommand("run", "Evolve the flow and write timeseries and summary");
  auto* verify = app.add_subcommand("verify", "Check every invariant and write verify.json");
  auto* rate = app.add_subcommand("rate", "Re-fit the decay rate on an existing timeseries.csv");
  std::string timeseries;
  std::optional<double> e_star;
  rate->add_option("--timeseries", timeseries, "Path to timeseries.csv")->required();
  rate->add_option("--e-star", e_star, "Minimal energy (default: from --config, else 0)");
  auto* minimizer = app.add_subcommand("minimizer", "Write the minimizer w* and E*");
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per parameter value");
  std::string axis;
  std::vector<double> values;
  sweep->add_option("--axis", axis, "lambda, tau or q")->required();
  sweep->add_option("--values", values, "Comma-separated values")->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(g, out);
    if (*verify) return cmd_verify(g, out, err);
    if (*rate) return cmd_rate(g, timeseries, e_star, out);
    if (*minimizer) return cmd_minimizer(g, out);
    if (*sweep) return cmd_sweep(g, axis, values, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace mflow::cli
