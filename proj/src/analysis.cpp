#include "mflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mflow {

namespace {

double clamp_density(double v) {
  if (v < -kNegativeTolerance || !std::isfinite(v)) {
    throw InvalidInput("density has a negative or non-finite node value");
  }
  return v < 0.0 ? 0.0 : v;
}

// Random unit direction in R^d scaled to a modulus drawn from [kmin, kmax].
std::vector<double> random_wave(int d, double kmin, double kmax, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> modulus(kmin, kmax);
  std::vector<double> k(static_cast<std::size_t>(d));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& c : k) {
      c = normal(rng);
      norm += c * c;
    }
  } while (norm < 1e-12);
  double scale = modulus(rng) / std::sqrt(norm);
  for (double& c : k) c *= scale;
  return k;
}

struct Wave {
  std::vector<double> k;
  double amplitude;
  double phase;
};

std::vector<Wave> random_waves(int d, std::size_t count, double amp, double kmin, double kmax,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<Wave> waves;
  for (std::size_t i = 0; i < count; ++i) {
    Wave w;
    w.k = random_wave(d, kmin, kmax, rng);
    w.amplitude = amp * unit(rng);
    w.phase = phase(rng);
    waves.push_back(std::move(w));
  }
  return waves;
}

double sum_waves(const std::vector<Wave>& waves, std::span<const double> x) {
  double s = 0.0;
  for (const auto& w : waves) {
    double arg = w.phase;
    for (std::size_t c = 0; c < x.size(); ++c) arg += w.k[c] * x[c];
    s += w.amplitude * std::sin(arg);
  }
  return s;
}

}  // namespace

double energy(const ScalarField& w, const GibbsField& gibbs, const EntropyGenerator& gen) {
  require_same_grid(w, gibbs.gamma);
  auto weights = w.grid->node_weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sum += weights[i] * gibbs.gamma[i] * gen.phi(clamp_density(w[i]));
  }
  return sum;
}

double fisher(const ScalarField& w, const GibbsField& gibbs, const EntropyGenerator& gen) {
  require_same_grid(w, gibbs.gamma);
  const auto& g = *w.grid;
  double sum = 0.0;
  g.for_each_edge([&](std::size_t i, std::size_t j, int axis, double measure) {
    double a = clamp_density(w[i]), b = clamp_density(w[j]);
    double slope = (b - a) / g.h(axis);
    double gamma_e = std::sqrt(gibbs.gamma[i]) * std::sqrt(gibbs.gamma[j]);
    sum += gamma_e * gen.phi2(0.5 * (a + b)) * slope * slope * measure;
  });
  return sum;
}

EnergyRecord make_record(double t, const ScalarField& w, const GibbsField& gibbs,
                         const EntropyGenerator& gen) {
  EnergyRecord r;
  r.t = t;
  r.energy = energy(w, gibbs, gen);
  r.fisher = fisher(w, gibbs, gen);
  r.mass = integrate(w, gibbs.gamma);
  auto [lo, hi] = std::minmax_element(w.values.begin(), w.values.end());
  r.w_min = *lo;
  r.w_max = *hi;
  return r;
}

DissipationReport dissipation_check(std::span<const EnergyRecord> records, double tolerance) {
  if (records.size() < 3) throw InvalidInput("dissipation check needs at least 3 records");
  DissipationReport rep;
  rep.max_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < records.size(); ++k) {
    double inc = records[k].energy - records[k - 1].energy;
    rep.max_increase = std::max(rep.max_increase, inc);
    if (inc > tolerance) rep.monotone = false;
  }
  for (std::size_t k = 1; k + 1 < records.size(); ++k) {
    double dt = records[k + 1].t - records[k - 1].t;
    if (!(dt > 0.0)) continue;
    double dEdt = (records[k + 1].energy - records[k - 1].energy) / dt;
    double f = records[k].fisher;
    double gap = std::abs(dEdt + f);
    double rel = 0.0;
    if (f > 1e-14) {
      rel = gap / f;
    } else if (gap > 1e-14) {
      rel = std::numeric_limits<double>::infinity();
    }
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = k;
    }
  }
  return rep;
}

double lambda_rate(double lambda, double tau, double M) {
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  if (!(M >= 0.0)) throw InvalidInput("M must be nonnegative");
  return 2.0 * lambda / tau * std::exp(-2.0 * M / tau);
}

std::optional<double> sobolev_ratio(const ScalarField& w, const GibbsField& gibbs,
                                    const EntropyGenerator& gen) {
  if (!gibbs.normalized) throw InvalidInput("sobolev_ratio needs a normalized Gibbs field");
  double f = fisher(w, gibbs, gen);
  if (f < 1e-14) return std::nullopt;
  return energy(w, gibbs, gen) / f;
}

double sobolev_bound(const GibbsField& gibbs) {
  return std::exp(2.0 * gibbs.M / gibbs.tau) * gibbs.tau / (2.0 * gibbs.lambda);
}

Minimizer compute_minimizer(const GibbsField& gibbs, const EntropyGenerator& gen) {
  Minimizer m;
  if (gibbs.normalized) {
    m.w_star = ScalarField(gibbs.grid, 1.0);
    m.E_star = gen.phi(1.0);
  } else {
    double level = 1.0 / gibbs.Z;
    m.w_star = ScalarField(gibbs.grid, level);
    m.E_star = gibbs.Z * gen.phi(level);
  }
  return m;
}

double duality_lower_bound(const ScalarField& S, const ScalarField& w, const GibbsField& gibbs,
                           const EntropyGenerator& gen) {
  require_same_grid(S, gibbs.gamma);
  require_same_grid(w, gibbs.gamma);
  auto weights = w.grid->node_weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double m = weights[i] * gibbs.gamma[i];
    sum += m * (S[i] * w[i] - legendre_conjugate(gen, S[i]));
  }
  return sum;
}

OuSolution ou_oracle(double m0, double lambda, double tau, double t) {
  if (!(lambda > 0.0) || !(tau > 0.0)) throw InvalidInput("lambda and tau must be positive");
  double m = m0 * std::exp(-lambda * t / tau);
  return {m, 0.5 * lambda * m * m};
}

ScalarField ou_relative_density(const GridPtr& grid, std::span<const double> m0, double lambda,
                                double tau, double t) {
  if (m0.size() != static_cast<std::size_t>(grid->dim())) {
    throw InvalidInput("OU mean must have one entry per axis");
  }
  const double decay = std::exp(-lambda * t / tau);
  const double kappa = lambda / tau;
  return sample_field(grid, [&](std::span<const double> x) {
    double e = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      double m = m0[k] * decay;
      e += kappa * (m * x[k] - 0.5 * m * m);
    }
    return std::exp(e);
  });
}

RateReport fit_decay_rate(std::span<const EnergyRecord> records, double E_star,
                          double lambda_theory) {
  std::size_t above = 0;
  for (const auto& r : records) above += r.energy > E_star ? 1 : 0;
  if (above < 10) {
    throw NumericalError("fit_decay_rate: only " + std::to_string(above) +
                         " records lie above E_star (need 10)");
  }
  const double initial = records.front().energy - E_star;
  if (!(initial > 0.0)) throw NumericalError("fit_decay_rate: initial energy is not above E_star");

  std::vector<double> ts, ys;
  for (const auto& r : records) {
    double excess = r.energy - E_star;
    double rel = excess / initial;
    if (excess > 0.0 && rel >= 1e-6 && rel <= 0.5) {
      ts.push_back(r.t);
      ys.push_back(std::log(excess));
    }
  }
  if (ts.size() < 3) {
    throw NumericalError("fit_decay_rate: only " + std::to_string(ts.size()) +
                         " records fall in the fit window (need 3)");
  }
  const double n = static_cast<double>(ts.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tm += ts[i];
    ym += ys[i];
  }
  tm /= n;
  ym /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - tm) * (ts[i] - tm);
    sty += (ts[i] - tm) * (ys[i] - ym);
  }
  if (!(stt > 0.0)) throw NumericalError("fit_decay_rate: fit window spans zero time");
  double slope = sty / stt;
  double intercept = ym - slope * tm;
  double ss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double e = ys[i] - (intercept + slope * ts[i]);
    ss += e * e;
  }
  RateReport rep;
  rep.fitted_rate = -slope;
  rep.lambda_theory = lambda_theory;
  rep.E_star = E_star;
  rep.t_lo = ts.front();
  rep.t_hi = ts.back();
  rep.fit_residual = std::sqrt(ss / n);
  rep.points_used = ts.size();
  return rep;
}

ScalarField random_smooth_density(const GibbsField& gibbs, std::mt19937_64& rng) {
  auto waves = random_waves(gibbs.grid->dim(), 3, 0.6, 0.7, 2.0, rng);
  ScalarField w = sample_field(gibbs.grid, [&](std::span<const double> x) {
    return std::exp(sum_waves(waves, x));
  });
  double mass = integrate(w, gibbs.gamma);
  for (double& v : w.values) v /= mass;
  return w;
}

ScalarField random_test_function(const GridPtr& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double offset = unit(rng);
  auto waves = random_waves(grid->dim(), 3, 1.0, 0.3, 3.0, rng);
  return sample_field(grid, [&](std::span<const double> x) { return offset + sum_waves(waves, x); });
}

double l1_distance(const ScalarField& a, const ScalarField& b, const ScalarField& gamma) {
  require_same_grid(a, b);
  require_same_grid(a, gamma);
  ScalarField diff(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = std::abs(a[i] - b[i]);
  return integrate(diff, gamma);
}

}  // namespace mflow
