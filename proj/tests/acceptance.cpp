// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: mflow_acceptance [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mflow/experiment.hpp"
#include "mflow/io.hpp"
#include "support.hpp"

using namespace mflow;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Every run made by the suite, for the conservation criterion.
struct RunLog {
  std::string label;
  double mass_error, min_w, max_w, w0_max;
};
std::vector<RunLog> g_runs;

struct Completed {
  Experiment exp;
  RunOutcome run;
  double seconds;
};

Completed complete(const std::string& label, const RunConfig& cfg) {
  auto start = std::chrono::steady_clock::now();
  Experiment exp = prepare_experiment(cfg);
  RunOutcome run = run_experiment(exp);
  double secs = seconds_since(start);
  g_runs.push_back({label, run.max_mass_error, run.min_w, run.max_w, run.w0_max});
  return {std::move(exp), std::move(run), secs};
}

// Lazily computed shared runs.
const Completed& fixture1() {
  static Completed c = complete("ou_shannon", testing::ou_config());
  return c;
}

const Completed& fixture2() {
  static Completed c = complete("three_atoms_2d", testing::three_atom_config(101));
  return c;
}

const EnergyRecord* record_at(const std::vector<EnergyRecord>& records, double t) {
  for (const auto& r : records) {
    if (std::abs(r.t - t) < 1e-9) return &r;
  }
  return nullptr;
}

Verdict c1_ou_rate() {
  const auto& f = fixture1();
  if (!f.run.rate) return {false, "fit failed: " + f.run.rate_error};
  double rate = f.run.rate->fitted_rate;
  bool ok = rate >= 1.9 && rate <= 2.1 && f.seconds < 60.0;
  return {ok, "fitted_rate=" + num(rate) + " in [1.9, 2.1], lambda_theory=" + num(f.exp.lambda_theory) +
                  ", runtime " + num(f.seconds) + " s < 60 s"};
}

Verdict c2_ou_energy() {
  const auto& f = fixture1();
  const auto& rec = f.run.records;
  double e0 = rec.front().energy;
  bool ok = std::abs(e0 - 0.125) <= 1e-3;
  std::string detail = "E(0)=" + num(e0) + " (0.125 +- 1e-3)";
  for (double t : {0.5, 1.0, 2.0}) {
    const auto* r = record_at(rec, t);
    if (!r) return {false, "no record at t=" + num(t)};
    double exact = ou_oracle(0.5, 1.0, 1.0, t).energy_shannon;
    double rel = std::abs(r->energy - exact) / exact;
    ok = ok && rel <= 0.02;
    detail += ", t=" + num(t) + " rel.err " + num(rel);
  }
  return {ok, detail + " (<= 2%)"};
}

Verdict c4_dissipation() {
  auto rep = dissipation_check(fixture1().run.records);
  return {rep.max_rel_error <= 0.05,
          "max relative |dE/dt + fisher| / fisher = " + num(rep.max_rel_error) + " (<= 5%)"};
}

Verdict c5_sobolev() {
  std::size_t violations = 0, draws = 0;
  std::string detail;
  for (const Completed* f : {&fixture1(), &fixture2()}) {
    const auto& gibbs = *f->exp.gibbs;
    std::mt19937_64 rng(f->exp.config.seed + 500);
    double bound = sobolev_bound(gibbs), worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      auto w = random_smooth_density(gibbs, rng);
      if (auto r = sobolev_ratio(w, gibbs, f->exp.gen)) {
        ++draws;
        worst = std::max(worst, *r);
        if (*r > bound) ++violations;
      }
    }
    detail += "d=" + std::to_string(gibbs.grid->dim()) + " max ratio " + num(worst) + " <= " + num(bound) + "; ";
  }
  // Gaussian translates saturate the bound for the pure quadratic potential.
  const auto& g1 = *fixture1().exp.gibbs;
  auto sh = make_shannon(1.0);
  double worst_sharp = 0.0;
  for (double m : {0.25, 0.5, 1.0}) {
    std::vector<double> m0{m};
    auto w = ou_relative_density(g1.grid, m0, 1.0, 1.0, 0.0);
    double ratio = sobolev_ratio(w, g1, sh).value_or(0.0);
    worst_sharp = std::max(worst_sharp, std::abs(ratio - 0.5) / 0.5);
  }
  bool ok = violations == 0 && draws >= 190 && worst_sharp <= 0.02;
  return {ok, detail + std::to_string(violations) + " violations in " + std::to_string(draws) +
                  " draws; translates rel.dev from tau/(2 lambda) " + num(worst_sharp) + " (<= 2%)"};
}

Verdict c6_tsallis() {
  bool ok = true;
  std::string detail;
  for (double q : {1.5, 2.0, 3.0}) {
    RunConfig cfg = testing::ou_config();
    cfg.entropy_family = "tsallis";
    cfg.entropy_q = q;
    auto f = complete("ou_tsallis_q" + num(q), cfg);
    double rate = f.run.rate ? f.run.rate->fitted_rate : 0.0;
    bool pass = f.run.rate && rate >= 0.95 * f.exp.lambda_theory;
    ok = ok && pass;
    detail += "q=" + num(q) + " rate " + num(rate) + "; ";
  }
  return {ok, detail + "each >= 0.95 * 2"};
}

Verdict c7_three_atoms() {
  const auto& f = fixture2();
  if (!f.run.rate) return {false, "fit failed: " + f.run.rate_error};
  const auto& gibbs = *f.exp.gibbs;
  auto est = estimate_M(*f.exp.data, f.exp.loss, f.exp.act, *gibbs.grid);
  double lambda_theory = lambda_rate(gibbs.lambda, gibbs.tau, est.grid_max);
  double l1 = l1_distance(f.run.final_state.w, f.exp.minimizer.w_star, gibbs.gamma);
  bool ok = f.run.rate->fitted_rate >= 0.95 * lambda_theory && l1 <= 1e-2 && f.seconds < 600.0 &&
            gibbs.grid->size() == 101 * 101;
  return {ok, "M=" + num(est.grid_max) + ", Lambda=" + num(lambda_theory) + ", fitted_rate=" +
                  num(f.run.rate->fitted_rate) + " (>= 0.95 Lambda), L1(w(T), w*)=" + num(l1) +
                  " (<= 1e-2), runtime " + num(f.seconds) + " s"};
}

Verdict c8_minimizer() {
  bool ok = true;
  double worst = -1e300;
  bool exact = true;
  for (const Completed* f : {&fixture1(), &fixture2()}) {
    const auto& gibbs = *f->exp.gibbs;
    for (const auto& gen : {make_shannon(1.0), make_tsallis(2.0, 1.0), make_tsallis(1.5, 1.0)}) {
      auto m = compute_minimizer(gibbs, gen);
      exact = exact && energy(m.w_star, gibbs, gen) == m.E_star;
      std::mt19937_64 rng(f->exp.config.seed + 800);
      for (int k = 0; k < 50; ++k) {
        double gap = m.E_star - energy(random_smooth_density(gibbs, rng), gibbs, gen);
        worst = std::max(worst, gap);
      }
    }
  }
  ok = worst <= 1e-10 && exact;
  return {ok, "max(E* - energy(w)) = " + num(worst) + " (<= 1e-10); energy(w*) == E* " +
                  (exact ? "exactly" : "NOT exactly")};
}

Verdict c9_duality() {
  double worst = -1e300, worst_eq = 0.0;
  for (const Completed* f : {&fixture1(), &fixture2()}) {
    const auto& gibbs = *f->exp.gibbs;
    for (const auto& gen : {make_shannon(1.0), make_tsallis(2.0, 1.0)}) {
      std::mt19937_64 rng(f->exp.config.seed + 900);
      auto w = random_smooth_density(gibbs, rng);
      double e = energy(w, gibbs, gen);
      for (int k = 0; k < 50; ++k) {
        auto S = random_test_function(gibbs.grid, rng);
        worst = std::max(worst, duality_lower_bound(S, w, gibbs, gen) - e);
      }
      ScalarField slope(gibbs.grid);
      for (std::size_t i = 0; i < w.size(); ++i) slope[i] = gen.phi1(w[i]);
      worst_eq = std::max(worst_eq, std::abs(duality_lower_bound(slope, w, gibbs, gen) - e));
    }
  }
  bool ok = worst <= 1e-10 && worst_eq <= 1e-8;
  return {ok, "max(bound - energy) = " + num(worst) + " (<= 1e-10); equality gap at S = phi'(w) " +
                  num(worst_eq) + " (<= 1e-8)"};
}

Verdict c10_entropy() {
  std::vector<EntropyGenerator> gens{make_shannon(1.0), make_shannon(0.5), make_tsallis(1.5, 1.0),
                                     make_tsallis(2.0, 1.0), make_tsallis(3.0, 2.0)};
  bool phi1_zero = true;
  double recon = 0.0;
  std::size_t non_monotone = 0, pairs = 0;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> expo(-6.0, 4.0);
  for (const auto& g : gens) {
    phi1_zero = phi1_zero && g.phi(1.0) == 0.0;
    for (int k = 0; k < 1000; ++k) {
      double s = std::pow(10.0, expo(rng)), t = std::pow(10.0, expo(rng));
      double scale = std::max(std::abs(g.phi(s)), std::abs(g.phi_at_0()));
      recon = std::max(recon, std::abs(s * psi_decompose(g, s) + g.phi_at_0() - g.phi(s)) / scale);
      if (s == t) continue;
      ++pairs;
      if (!(psi_decompose(g, std::min(s, t)) < psi_decompose(g, std::max(s, t)))) ++non_monotone;
    }
  }
  // Conjugates against independent closed forms.
  auto sh = make_shannon(1.0);
  auto t2 = make_tsallis(2.0, 1.0);
  double conj = 0.0;
  for (double r = -6.0; r <= 4.0; r += 0.05) {
    conj = std::max(conj, std::abs(legendre_conjugate(sh, r) - std::expm1(r)) / std::max(1.0, std::expm1(r)));
    double exact = r >= -2.0 ? r + r * r / 4.0 : -1.0;
    conj = std::max(conj, std::abs(legendre_conjugate(t2, r) - exact) / std::max(1.0, std::abs(exact)));
  }
  // Finiteness margin on the fixtures.
  double margin = 1e300;
  for (const Completed* f : {&fixture1(), &fixture2()}) {
    const auto& gb = *f->exp.gibbs;
    margin = std::min(margin, gibbs_mass_bound(gb.M, gb.lambda, gb.tau, gb.grid->dim()) - gb.Z_raw);
  }
  bool ok = phi1_zero && recon <= 1e-12 && non_monotone == 0 && pairs >= 1000 && conj <= 1e-8 && margin >= 0.0;
  return {ok, std::string("phi(1)=0 ") + (phi1_zero ? "exact" : "NOT exact") + "; psi reconstruction " + num(recon) +
                  " (<= 1e-12); " + std::to_string(non_monotone) + " non-monotone of " + std::to_string(pairs) +
                  " pairs; conjugate error " + num(conj) + " (<= 1e-8); min finiteness margin " + num(margin)};
}

/// L1(gamma) error against the exact OU density at t = 1.
double ou_error(std::size_t n, double dt, TimeScheme scheme) {
  RunConfig cfg = testing::ou_config(n, dt, 1.0);
  cfg.solver.scheme = scheme;
  cfg.solver.record_every = 1000000;
  auto f = complete("ou_n" + std::to_string(n) + "_dt" + num(dt), cfg);
  std::vector<double> m0{0.5};
  auto exact = ou_relative_density(f.exp.gibbs->grid, m0, 1.0, 1.0, 1.0);
  return l1_distance(f.run.final_state.w, exact, f.exp.gibbs->gamma);
}

Verdict c11_convergence() {
  std::vector<double> eh, et;
  for (std::size_t n : {101, 201, 401}) eh.push_back(ou_error(n, 1e-4, TimeScheme::crank_nicolson));
  for (double dt : {4e-3, 2e-3, 1e-3}) et.push_back(ou_error(3201, dt, TimeScheme::implicit_euler));
  double oh = std::min(std::log2(eh[0] / eh[1]), std::log2(eh[1] / eh[2]));
  double ot = std::min(std::log2(et[0] / et[1]), std::log2(et[1] / et[2]));
  bool ok = oh >= 1.8 && ot >= 0.9;
  return {ok, "h errors " + num(eh[0]) + ", " + num(eh[1]) + ", " + num(eh[2]) + " order " + num(oh) +
                  " (>= 1.8); dt errors " + num(et[0]) + ", " + num(et[1]) + ", " + num(et[2]) + " order " +
                  num(ot) + " (>= 0.9)"};
}

Verdict c3_conservation() {
  double mass = 0.0, min_w = 1e300, max_excess = -1e300;
  std::string worst;
  for (const auto& r : g_runs) {
    mass = std::max(mass, r.mass_error);
    min_w = std::min(min_w, r.min_w);
    double excess = r.max_w / r.w0_max - 1.0;
    if (excess > max_excess) {
      max_excess = excess;
      worst = r.label;
    }
  }
  bool ok = !g_runs.empty() && mass <= 1e-8 && min_w >= -1e-12 && max_excess <= 1e-10;
  return {ok, std::to_string(g_runs.size()) + " runs: max |mass - 1| " + num(mass) + " (<= 1e-8), min w " +
                  num(min_w) + " (>= -1e-12), max w / max w0 - 1 = " + num(max_excess) + " (<= 1e-10)"};
}

}  // namespace

int main(int argc, char** argv) {
  // Criterion 3 summarizes every run the others made, so it goes last.
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, c1_ou_rate},     {2, c2_ou_energy},  {4, c4_dissipation}, {5, c5_sobolev},
      {6, c6_tsallis},     {7, c7_three_atoms}, {8, c8_minimizer},  {9, c9_duality},
      {10, c10_entropy},   {11, c11_convergence}, {3, c3_conservation}};
  const std::map<int, std::string> names{
      {1, "OU rate reproduction"},      {2, "OU energy values"},        {3, "conservation suite"},
      {4, "dissipation identity"},      {5, "phi-Sobolev bound"},       {6, "Tsallis rate bound"},
      {7, "nontrivial potential"},      {8, "minimizer certificate"},   {9, "duality certificate"},
      {10, "entropy unit suite"},       {11, "discretization convergence"}};

  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  std::map<int, std::pair<Verdict, double>> results;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id) && id != 3) continue;
    auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    results[id] = {v, seconds_since(start)};
  }

  int failed = 0;
  for (const auto& [id, entry] : results) {
    const auto& [v, secs] = entry;
    if (!v.passed) ++failed;
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, v.passed ? "PASS" : "FAIL", names.at(id).c_str(),
                v.detail.c_str(), secs);
  }
  std::printf("%zu criteria, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}
