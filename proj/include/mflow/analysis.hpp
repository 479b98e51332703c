#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mflow/entropy.hpp"
#include "mflow/grid.hpp"
#include "mflow/potential.hpp"

namespace mflow {

/// Node values in [-kNegativeTolerance, 0) are treated as zero by the
/// functionals below; anything more negative is rejected.
inline constexpr double kNegativeTolerance = 1e-12;

struct EnergyRecord {
  double t = 0.0;
  double energy = 0.0;
  double fisher = 0.0;
  double mass = 0.0;
  double w_min = 0.0;
  double w_max = 0.0;
};

struct RateReport {
  double fitted_rate = 0.0;
  double lambda_theory = 0.0;
  double E_star = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double fit_residual = 0.0;
  std::size_t points_used = 0;
};

/// Integral of phi(w) against gamma.
double energy(const ScalarField& w, const GibbsField& gibbs, const EntropyGenerator& gen);

/// Sum over grid edges of gamma_e phi''(w_mid) ((w_j - w_i) / h)^2 times the
/// edge measure, with w_mid the endpoint average. Uses the same edge measures
/// and conductances as the diffusion operator, so that dE/dt = -fisher holds
/// to second order along the discrete flow.
double fisher(const ScalarField& w, const GibbsField& gibbs, const EntropyGenerator& gen);

EnergyRecord make_record(double t, const ScalarField& w, const GibbsField& gibbs,
                         const EntropyGenerator& gen);

struct DissipationReport {
  /// max |dE/dt + fisher| / fisher over interior records.
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  /// Largest record-to-record energy increase (<= 0 when monotone).
  double max_increase = 0.0;
  bool monotone = true;
};

/// Compares the central-difference dE/dt with -fisher at interior records.
/// `tolerance` bounds the allowed energy increase for the monotonicity flag.
DissipationReport dissipation_check(std::span<const EnergyRecord> records,
                                    double tolerance = 1e-11);

/// 2 lambda / tau * exp(-2 M / tau)
double lambda_rate(double lambda, double tau, double M);

/// energy / fisher on a normalized Gibbs field; nullopt when fisher < 1e-14.
std::optional<double> sobolev_ratio(const ScalarField& w, const GibbsField& gibbs,
                                    const EntropyGenerator& gen);

/// exp(2M / tau) tau / (2 lambda), the upper bound for sobolev_ratio.
double sobolev_bound(const GibbsField& gibbs);

struct Minimizer {
  ScalarField w_star;
  double E_star = 0.0;
};

/// w* = 1/Z (1 when normalized) and E* = Z phi(1/Z) (0 when normalized).
Minimizer compute_minimizer(const GibbsField& gibbs, const EntropyGenerator& gen);

/// <S, w>_gamma - integral of phi*(S) against gamma; a lower bound on energy(w).
double duality_lower_bound(const ScalarField& S, const ScalarField& w, const GibbsField& gibbs,
                           const EntropyGenerator& gen);

struct OuSolution {
  double mean = 0.0;
  double energy_shannon = 0.0;
};

/// Closed-form flow for the pure quadratic potential started from a
/// Gaussian translate N(m0, tau/lambda): the mean decays as exp(-lambda t / tau)
/// and the shannon energy is lambda m(t)^2 / 2.
OuSolution ou_oracle(double m0, double lambda, double tau, double t);

/// Relative density of N(m(t), tau/lambda) with respect to N(0, tau/lambda),
/// m(t) = m0 exp(-lambda t / tau) per axis.
ScalarField ou_relative_density(const GridPtr& grid, std::span<const double> m0, double lambda,
                                double tau, double t);

/// Least-squares slope of ln(E - E*) over records whose relative excess
/// (E - E*)/(E(0) - E*) lies in [1e-6, 0.5]. Throws NumericalError with
/// fewer than 10 records above E* or fewer than 3 in the window.
RateReport fit_decay_rate(std::span<const EnergyRecord> records, double E_star,
                          double lambda_theory);

/// Smooth positive density with unit gamma-mass: exp of a random sum of
/// three plane waves with amplitudes in [-0.6, 0.6] and wave numbers of
/// modulus in [0.7, 2.0], divided by its gamma-mass.
ScalarField random_smooth_density(const GibbsField& gibbs, std::mt19937_64& rng);

/// Bounded random test function: a random sum of plane waves with
/// amplitudes in [-1, 1] plus a constant in [-1, 1].
ScalarField random_test_function(const GridPtr& grid, std::mt19937_64& rng);

/// L1(gamma) distance between two fields.
double l1_distance(const ScalarField& a, const ScalarField& b, const ScalarField& gamma);

}  // namespace mflow
