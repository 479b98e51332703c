#include "mflow/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "mflow/io.hpp"

namespace mflow {

namespace {

Loss make_loss(const std::string& name) {
  if (name == "zero") return Loss::zero();
  return Loss::saturating_squared();
}

Activation make_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh_sigmoid();
  return Activation::arctan_sigmoid();
}

EntropyGenerator make_generator(const RunConfig& cfg) {
  if (cfg.entropy_family == "tsallis") return make_tsallis(cfg.entropy_q, cfg.effective_entropy_tau());
  if (cfg.entropy_family == "nonconvex_probe") return make_nonconvex_probe();
  return make_shannon(cfg.effective_entropy_tau());
}

GridPtr make_grid(const RunConfig& cfg, double envelope) {
  if (!cfg.grid_lo.empty()) return build_grid(cfg.grid_dim, cfg.grid_lo, cfg.grid_hi, cfg.grid_n);
  double radius = cfg.grid_radius.value_or(
      default_box_radius(cfg.lambda, cfg.tau, envelope, cfg.grid_dim));
  std::vector<double> lo(cfg.grid_n.size(), -radius), hi(cfg.grid_n.size(), radius);
  return build_grid(cfg.grid_dim, lo, hi, cfg.grid_n);
}

ScalarField make_initial(const RunConfig& cfg, const GibbsField& gibbs) {
  switch (cfg.initial) {
    case InitialKind::uniform:
      return ScalarField(gibbs.grid, 1.0);
    case InitialKind::file:
      return read_field_csv(cfg.resolve(cfg.initial_path), gibbs.grid);
    case InitialKind::gaussian:
      break;
  }
  // Density of N(mean, stdev^2) in dx divided by the Gibbs weight, assembled
  // in log space and shifted so the largest value is 1.
  const double stdev = cfg.initial_stdev.value_or(std::sqrt(cfg.tau / cfg.lambda));
  ScalarField logw = sample_field(gibbs.grid, [&](std::span<const double> x) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      double dx = x[k] - cfg.initial_mean[k];
      r2 += dx * dx;
    }
    return -0.5 * r2 / (stdev * stdev);
  });
  for (std::size_t i = 0; i < logw.size(); ++i) logw[i] += gibbs.V[i] / gibbs.tau;
  double top = *std::max_element(logw.values.begin(), logw.values.end());
  for (double& v : logw.values) v = std::exp(v - top);
  return logw;
}

template <class F>
VerifyEntry guarded(const std::string& name, F&& body) {
  try {
    VerifyEntry e = body();
    e.name = name;
    return e;
  } catch (const std::exception& ex) {
    VerifyEntry e;
    e.name = name;
    e.passed = false;
    e.detail = std::string("error: ") + ex.what();
    return e;
  }
}

VerifyEntry at_most(double value, double threshold, std::string detail = {}) {
  return {"", value <= threshold, value, threshold, std::move(detail)};
}

}  // namespace

Experiment prepare_experiment(const RunConfig& cfg) {
  validate(cfg);
  std::optional<Dataset> data;
  if (cfg.dataset_path != "none") data = read_dataset_csv(cfg.resolve(cfg.dataset_path), cfg.bounds);
  Loss loss = make_loss(cfg.loss);
  Activation act = make_activation(cfg.activation);
  double envelope = data ? loss.bound() * data->total_mass() : 0.0;

  GridPtr grid = make_grid(cfg, envelope);
  GibbsField gibbs = data ? build_potential(*data, loss, act, cfg.lambda, cfg.tau, grid)
                          : build_quadratic_potential(cfg.lambda, cfg.tau, grid);
  if (cfg.normalize_gamma) gibbs = normalize_gibbs(std::move(gibbs));
  auto gibbs_ptr = std::make_shared<const GibbsField>(std::move(gibbs));
  auto op = std::make_shared<const WeightedOperator>(assemble_operator(grid, gibbs_ptr->gamma));
  EntropyGenerator gen = make_generator(cfg);

  Experiment exp{cfg,     std::move(data), loss, act, gen, gibbs_ptr, op,
                 make_initial(cfg, *gibbs_ptr), 0.0, 0.0, {}};
  exp.M_used = cfg.use_envelope_M ? gibbs_ptr->M_envelope : gibbs_ptr->M;
  exp.lambda_theory = lambda_rate(cfg.lambda, cfg.tau, exp.M_used);
  exp.minimizer = compute_minimizer(*gibbs_ptr, gen);
  return exp;
}

RunOutcome run_experiment(const Experiment& exp, const SnapshotSink& snapshot) {
  auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  FlowState state = init_state(exp.gibbs, exp.w0);
  out.w0_max = *std::max_element(state.w.values.begin(), state.w.values.end());

  const std::size_t every = exp.config.snapshot_every;
  auto observer = [&](double t, const ScalarField& w) {
    if (snapshot && every > 0 && out.records.size() % every == 0) snapshot(t, w);
    out.records.push_back(make_record(t, w, *exp.gibbs, exp.gen));
  };
  EvolveResult res = evolve(state, exp.config.solver, *exp.op, observer);
  out.steps = res.steps;
  out.final_state = std::move(res.state);
  out.positivity_warning = res.positivity_warning;

  out.min_w = std::numeric_limits<double>::infinity();
  out.max_w = -std::numeric_limits<double>::infinity();
  for (const auto& r : out.records) {
    out.max_mass_error = std::max(out.max_mass_error, std::abs(r.mass - 1.0));
    out.min_w = std::min(out.min_w, r.w_min);
    out.max_w = std::max(out.max_w, r.w_max);
  }
  try {
    out.rate = fit_decay_rate(out.records, exp.minimizer.E_star, exp.lambda_theory);
  } catch (const NumericalError& e) {
    out.rate_error = e.what();
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

nlohmann::json rate_json(const RateReport& rep) {
  return {{"fitted_rate", rep.fitted_rate},
          {"lambda_theory", rep.lambda_theory},
          {"E_star", rep.E_star},
          {"fit_window", {rep.t_lo, rep.t_hi}},
          {"fit_residual", rep.fit_residual}};
}

nlohmann::json summary_json(const Experiment& exp, const RunOutcome& out) {
  const auto& g = *exp.gibbs;
  nlohmann::json j;
  j["lambda"] = g.lambda;
  j["tau"] = g.tau;
  j["M_grid"] = g.M;
  j["M_envelope"] = g.M_envelope;
  j["M"] = exp.M_used;
  j["Z"] = g.Z;
  j["Z_raw"] = g.Z_raw;
  j["Z_bound"] = gibbs_mass_bound(g.M, g.lambda, g.tau, g.grid->dim());
  j["normalized"] = g.normalized;
  j["lambda_theory"] = exp.lambda_theory;
  j["E_star"] = exp.minimizer.E_star;
  j["entropy"] = {{"family", exp.gen.name()},
                  {"q", exp.config.entropy_family == "tsallis" ? exp.gen.q() : 1.0},
                  {"tau", exp.config.effective_entropy_tau()}};
  if (out.rate) {
    j["fitted_rate"] = out.rate->fitted_rate;
    j["fit_residual"] = out.rate->fit_residual;
    j["fit_window"] = {out.rate->t_lo, out.rate->t_hi};
  } else {
    j["fitted_rate"] = nullptr;
    j["fit_residual"] = nullptr;
    j["fit_error"] = out.rate_error;
  }
  j["steps"] = out.steps;
  j["records"] = out.records.size();
  j["conservation"] = {{"max_mass_error", out.max_mass_error},
                       {"min_w", out.min_w},
                       {"max_w", out.max_w},
                       {"w0_max", out.w0_max}};
  j["positivity_warning"] = out.positivity_warning;
  return j;
}

std::string timeseries_csv(const std::vector<EnergyRecord>& records) {
  std::string out = "t,energy,fisher,mass,w_min,w_max\n";
  for (const auto& r : records) {
    out += format_number(r.t) + "," + format_number(r.energy) + "," + format_number(r.fisher) + "," +
           format_number(r.mass) + "," + format_number(r.w_min) + "," + format_number(r.w_max) + "\n";
  }
  return out;
}

std::vector<EnergyRecord> read_timeseries_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open timeseries '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("timeseries '" + path + "' is empty");
  auto header = split_csv_line(line);
  const std::vector<std::string> expected{"t", "energy", "fisher", "mass", "w_min", "w_max"};
  if (header != expected) throw InvalidInput("timeseries header must be " + std::string("t,energy,fisher,mass,w_min,w_max"));
  std::vector<EnergyRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    auto cells = split_csv_line(line);
    std::string ctx = "timeseries row " + std::to_string(row);
    if (cells.size() != expected.size()) throw InvalidInput(ctx + ": wrong column count");
    EnergyRecord r;
    r.t = parse_csv_number(cells[0], ctx);
    r.energy = parse_csv_number(cells[1], ctx);
    r.fisher = parse_csv_number(cells[2], ctx);
    r.mass = parse_csv_number(cells[3], ctx);
    r.w_min = parse_csv_number(cells[4], ctx);
    r.w_max = parse_csv_number(cells[5], ctx);
    records.push_back(r);
  }
  return records;
}

std::vector<VerifyEntry> run_verification(const Experiment& exp, const RunOutcome* run) {
  std::vector<VerifyEntry> out;
  const auto& gen = exp.gen;
  const auto& gibbs = *exp.gibbs;
  const auto& op = *exp.op;
  const auto& grid = *gibbs.grid;
  const std::size_t samples = std::max<std::size_t>(exp.config.verify_samples, 1);
  std::mt19937_64 rng(exp.config.seed);

  // Generator assumptions.
  auto assumptions = check_assumptions(gen);
  for (const auto& c : assumptions.checks) {
    out.push_back({"entropy." + c.name, c.passed, c.margin, 0.0, c.note});
  }

  out.push_back(guarded("entropy.psi_reconstruction", [&] {
    std::uniform_real_distribution<double> expo(-6.0, 4.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      double s = std::pow(10.0, expo(rng));
      double phi = gen.phi(s);
      double rebuilt = s * psi_decompose(gen, s) + gen.phi_at_0();
      double scale = std::max({std::abs(phi), std::abs(gen.phi_at_0()), 1e-300});
      worst = std::max(worst, std::abs(rebuilt - phi) / scale);
    }
    return at_most(worst, 1e-12, "max relative reconstruction error");
  }));

  out.push_back(guarded("entropy.psi_monotone", [&] {
    std::uniform_real_distribution<double> unit(0.0, 100.0);
    double violations = 0;
    for (int k = 0; k < 1000; ++k) {
      double a = k == 0 ? 0.0 : unit(rng), b = unit(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (!(psi_decompose(gen, a) < psi_decompose(gen, b))) ++violations;
    }
    return at_most(violations, 0.0, "pairs with psi(s) >= psi(t) for s < t");
  }));

  out.push_back(guarded("entropy.fenchel_young", [&] {
    std::uniform_real_distribution<double> sd(0.0, 20.0), rd(-5.0, 5.0);
    double worst_gap = 0.0, worst_eq = 0.0;
    for (int k = 0; k < 200; ++k) {
      double s = sd(rng), r = rd(rng);
      worst_gap = std::min(worst_gap, gen.phi(s) + legendre_conjugate(gen, r) - s * r);
      double slope = gen.phi1(s);
      double eq = gen.phi(s) + legendre_conjugate(gen, slope) - s * slope;
      worst_eq = std::max(worst_eq, std::abs(eq) / std::max(1.0, std::abs(s * slope)));
    }
    double value = std::max(-worst_gap, worst_eq);
    return at_most(value, 1e-8, "max(violation of s r <= phi(s) + phi*(r), equality gap at r = phi'(s))");
  }));

  if (gen.conjugate_closed_form(0.0)) {
    out.push_back(guarded("entropy.conjugate_closed_form", [&] {
      double worst = 0.0;
      for (int k = 0; k <= 100; ++k) {
        double r = -5.0 + 0.1 * k;
        double exact = *gen.conjugate_closed_form(r);
        worst = std::max(worst, std::abs(legendre_conjugate(gen, r) - exact) / std::max(1.0, std::abs(exact)));
      }
      return at_most(worst, 1e-8, "numeric vs closed-form conjugate on [-5, 5]");
    }));
  }

  // Model.
  out.push_back(guarded("model.derivatives", [&] {
    std::vector<double> s, a, b;
    std::uniform_real_distribution<double> wide(-10.0, 10.0);
    for (int k = 0; k < 200; ++k) {
      s.push_back(wide(rng));
      a.push_back(wide(rng));
      b.push_back(wide(rng));
    }
    double worst = std::max(activation_derivative_error(exp.act, s), loss_derivative_error(exp.loss, a, b));
    return at_most(worst, 1e-6, "activation and loss derivative vs central differences");
  }));

  // Potential.
  out.push_back(guarded("potential.M_envelope", [&] {
    double worst = gibbs.M;
    if (exp.data) {
      std::vector<double> x(static_cast<std::size_t>(grid.dim()));
      for (int k = 0; k < 1000; ++k) {
        for (int c = 0; c < grid.dim(); ++c) {
          std::uniform_real_distribution<double> coord(grid.lo(c), grid.hi(c));
          x[static_cast<std::size_t>(c)] = coord(rng);
        }
        worst = std::max(worst, std::abs(generalization_error(x, *exp.data, exp.loss, exp.act)));
      }
    }
    return at_most(worst, gibbs.M_envelope, "largest |generalization error| over nodes and 1000 random points");
  }));

  out.push_back(guarded("potential.gibbs_finiteness", [&] {
    return at_most(gibbs.Z_raw, gibbs_mass_bound(gibbs.M, gibbs.lambda, gibbs.tau, grid.dim()),
                   "unnormalized Gibbs mass vs exp(M/tau)(2 pi tau/lambda)^(d/2)");
  }));

  if (exp.data) {
    out.push_back(guarded("potential.gradient", [&] {
      const auto d = static_cast<std::size_t>(grid.dim());
      auto V = [&](std::vector<double> x) {
        double r2 = 0.0;
        for (double c : x) r2 += c * c;
        return generalization_error(x, *exp.data, exp.loss, exp.act) + 0.5 * gibbs.lambda * r2;
      };
      std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
      double worst = 0.0;
      for (int k = 0; k < 100; ++k) {
        std::size_t node = pick(rng);
        auto x = grid.node_coords(node);
        for (std::size_t c = 0; c < d; ++c) {
          double h = 1e-5 * std::max(1.0, std::abs(x[c]));
          auto xp = x, xm = x;
          xp[c] += h;
          xm[c] -= h;
          double fd = (V(xp) - V(xm)) / (2 * h);
          double exact = gibbs.gradV[c][node];
          worst = std::max(worst, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
        }
      }
      return at_most(worst, 1e-5, "analytic gradV vs central differences");
    }));
  }

  if (gibbs.normalized) {
    out.push_back(guarded("potential.normalization", [&] {
      return at_most(std::abs(integrate(gibbs.gamma) - 1.0), 1e-10, "|integral of gamma - 1|");
    }));
  }

  // Operator.
  {
    std::normal_distribution<double> normal(0.0, 1.0);
    auto random_vec = [&] {
      std::vector<double> v(grid.size());
      for (double& c : v) c = normal(rng);
      return v;
    };
    const std::size_t draws = std::min<std::size_t>(samples, 100);
    out.push_back(guarded("grid.operator_kernel", [&] {
      std::vector<double> ones(grid.size(), 1.0), g1(grid.size());
      op.apply(ones, g1);
      double worst = 0.0;
      for (double v : g1) worst = std::max(worst, std::abs(v));
      return at_most(worst, 0.0, "max |G 1|");
    }));
    out.push_back(guarded("grid.operator_symmetry", [&] {
      double worst = 0.0;
      std::vector<double> gw(grid.size()), gv(grid.size());
      for (std::size_t k = 0; k < draws; ++k) {
        auto w = random_vec(), v = random_vec();
        op.apply(w, gw);
        op.apply(v, gv);
        double scale = std::sqrt(op.inner(w, w) * op.inner(v, v)) + std::sqrt(op.inner(gw, gw) * op.inner(v, v));
        worst = std::max(worst, std::abs(op.inner(gw, v) - op.inner(w, gv)) / scale);
      }
      return at_most(worst, 1e-12, "relative |<Gw,v> - <w,Gv>|");
    }));
    out.push_back(guarded("grid.operator_sign", [&] {
      double worst = -std::numeric_limits<double>::infinity();
      std::vector<double> gw(grid.size());
      for (std::size_t k = 0; k < draws; ++k) {
        auto w = random_vec();
        op.apply(w, gw);
        worst = std::max(worst, op.inner(gw, w));
      }
      return at_most(worst, 0.0, "max <Gw,w>");
    }));
    out.push_back(guarded("grid.summation_by_parts", [&] {
      double worst = 0.0;
      std::vector<double> gw(grid.size());
      for (std::size_t k = 0; k < draws; ++k) {
        auto w = random_vec(), v = random_vec();
        op.apply(w, gw);
        double form = op.dirichlet_form(w, v);
        double scale = std::sqrt(op.dirichlet_form(w, w) * op.dirichlet_form(v, v));
        worst = std::max(worst, std::abs(-op.inner(gw, v) - form) / scale);
      }
      return at_most(worst, 1e-12, "relative |<-Gw,v> - edge form|");
    }));
  }

  // Flow.
  RunOutcome local;
  if (!run) {
    local = run_experiment(exp);
    run = &local;
  }
  out.push_back(at_most(run->max_mass_error, 10.0 * exp.config.solver.linear_tol,
                        "max |gamma-mass - 1| over records vs 10 linear_tol"));
  out.back().name = "solver.mass";
  out.push_back({"solver.positivity", run->min_w >= -1e-12, run->min_w, -1e-12, "min w over records"});
  {
    double bound = run->w0_max * (1.0 + 1e-10);
    out.push_back(at_most(run->max_w, bound, "max w over records vs max w0 (1 + 1e-10)"));
    out.back().name = "solver.max_principle";
  }
  if (run->records.size() >= 3) {
    auto diss = dissipation_check(run->records, 10.0 * exp.config.solver.linear_tol);
    out.push_back(at_most(diss.max_rel_error, 0.05, "max relative |dE/dt + fisher| / fisher"));
    out.back().name = "analysis.dissipation_identity";
    out.push_back({"analysis.energy_monotone", diss.monotone, diss.max_increase,
                   10.0 * exp.config.solver.linear_tol, "largest record-to-record energy increase"});
  }
  if (run->rate) {
    out.push_back({"analysis.rate_bound", run->rate->fitted_rate >= 0.95 * exp.lambda_theory,
                   run->rate->fitted_rate, 0.95 * exp.lambda_theory, "fitted rate vs 0.95 Lambda"});
  } else {
    out.push_back({"analysis.rate_bound", false, 0.0, 0.95 * exp.lambda_theory, run->rate_error});
  }

  // Functional inequalities on random densities.
  std::vector<ScalarField> densities;
  for (std::size_t k = 0; k < samples; ++k) densities.push_back(random_smooth_density(gibbs, rng));

  if (gibbs.normalized) {
    out.push_back(guarded("analysis.sobolev_bound", [&] {
      double worst = 0.0;
      for (const auto& w : densities) {
        if (auto ratio = sobolev_ratio(w, gibbs, gen)) worst = std::max(worst, *ratio);
      }
      return at_most(worst, sobolev_bound(gibbs), "largest energy/fisher vs exp(2M/tau) tau/(2 lambda)");
    }));
  } else {
    out.push_back({"analysis.sobolev_bound", true, 0.0, 0.0, "skipped: needs normalized gamma"});
  }

  out.push_back(guarded("analysis.minimizer", [&] {
    const auto& m = exp.minimizer;
    double at_star = energy(m.w_star, gibbs, gen);
    double worst = std::abs(at_star - m.E_star);
    for (const auto& w : densities) worst = std::max(worst, m.E_star - energy(w, gibbs, gen));
    auto e = at_most(worst, 1e-10, "max(E* - energy(w), |energy(w*) - E*|)");
    return e;
  }));

  out.push_back(guarded("analysis.duality", [&] {
    double worst = -std::numeric_limits<double>::infinity();
    double worst_eq = 0.0;
    for (std::size_t k = 0; k < std::min<std::size_t>(samples, 50); ++k) {
      const auto& w = densities[k];
      double e = energy(w, gibbs, gen);
      auto S = random_test_function(gibbs.grid, rng);
      worst = std::max(worst, duality_lower_bound(S, w, gibbs, gen) - e);
      ScalarField slope(gibbs.grid);
      for (std::size_t i = 0; i < w.size(); ++i) slope[i] = gen.phi1(w[i]);
      worst_eq = std::max(worst_eq, std::abs(duality_lower_bound(slope, w, gibbs, gen) - e));
    }
    bool ok = worst <= 1e-10 && worst_eq <= 1e-8;
    return VerifyEntry{"", ok, std::max(worst, worst_eq), 1e-10,
                       "max(lower bound - energy) [<= 1e-10]; equality gap at S = phi'(w) " +
                           format_number(worst_eq) + " [<= 1e-8]"};
  }));

  return out;
}

nlohmann::json verify_json(const std::vector<VerifyEntry>& entries) {
  nlohmann::json list = nlohmann::json::array();
  bool all = true;
  for (const auto& e : entries) {
    all = all && e.passed;
    list.push_back({{"name", e.name},
                    {"passed", e.passed},
                    {"value", e.value},
                    {"threshold", e.threshold},
                    {"margin", e.threshold - e.value},
                    {"detail", e.detail}});
  }
  return {{"all_passed", all}, {"checks", list}};
}

}  // namespace mflow
