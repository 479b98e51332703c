#include "mflow/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mflow {

namespace {

void refresh_gamma(GibbsField& f) {
  for (std::size_t i = 0; i < f.V.size(); ++i) f.gamma[i] = std::exp(-f.V[i] / f.tau);
  f.Z = integrate(f.gamma);
}

}  // namespace

GibbsField build_potential(const Dataset& data, const Loss& loss, const Activation& act,
                           double lambda, double tau, const GridPtr& grid) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be positive");
  if (!grid) throw InvalidInput("potential needs a grid");
  const auto d = static_cast<std::size_t>(grid->dim());
  if (d != data.param_dim()) {
    throw InvalidInput("grid dimension " + std::to_string(d) + " does not match parameter dimension " +
                       std::to_string(data.param_dim()));
  }

  GibbsField f;
  f.grid = grid;
  f.lambda = lambda;
  f.tau = tau;
  f.V = ScalarField(grid);
  f.gamma = ScalarField(grid);
  f.gradV.assign(d, ScalarField(grid));

  std::vector<double> x(d), g(d);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid->size(); ++i) {
    grid->node_coords(i, x);
    double err = generalization_error(x, data, loss, act);
    worst = std::max(worst, std::abs(err));
    generalization_error_gradient(x, data, loss, act, g);
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      r2 += x[k] * x[k];
      f.gradV[k][i] = g[k] + lambda * x[k];
    }
    f.V[i] = err + 0.5 * lambda * r2;
  }
  f.M = worst;
  f.M_envelope = loss.bound() * data.total_mass();
  refresh_gamma(f);
  f.Z_raw = f.Z;
  f.normalized = false;
  if (!(f.Z > 0.0) || !std::isfinite(f.Z)) throw NumericalError("Gibbs mass is not positive and finite");
  return f;
}

GibbsField build_quadratic_potential(double lambda, double tau, const GridPtr& grid) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be positive");
  if (!grid) throw InvalidInput("potential needs a grid");
  const auto d = static_cast<std::size_t>(grid->dim());
  GibbsField f;
  f.grid = grid;
  f.lambda = lambda;
  f.tau = tau;
  f.V = ScalarField(grid);
  f.gamma = ScalarField(grid);
  f.gradV.assign(d, ScalarField(grid));
  std::vector<double> x(d);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    grid->node_coords(i, x);
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      r2 += x[k] * x[k];
      f.gradV[k][i] = lambda * x[k];
    }
    f.V[i] = 0.5 * lambda * r2;
  }
  refresh_gamma(f);
  f.Z_raw = f.Z;
  return f;
}

MEstimate estimate_M(const Dataset& data, const Loss& loss, const Activation& act,
                     const Grid& grid) {
  MEstimate m;
  std::vector<double> x(static_cast<std::size_t>(grid.dim()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.node_coords(i, x);
    m.grid_max = std::max(m.grid_max, std::abs(generalization_error(x, data, loss, act)));
  }
  m.envelope = loss.bound() * data.total_mass();
  return m;
}

GibbsField normalize_gibbs(GibbsField field) {
  if (!(field.Z > 0.0)) throw InvalidInput("cannot normalize a Gibbs field without mass");
  double shift = field.tau * std::log(field.Z);
  for (double& v : field.V.values) v += shift;
  refresh_gamma(field);
  field.normalized = true;
  return field;
}

double gibbs_mass_bound(double M, double lambda, double tau, int dim) {
  return std::exp(M / tau) * std::pow(2.0 * std::numbers::pi * tau / lambda, 0.5 * dim);
}

double default_box_radius(double lambda, double tau, double M, int dim, double tail) {
  // Union bound over the 2d half-spaces of the Gaussian envelope.
  const double sigma = std::sqrt(tau / lambda);
  auto outside = [&](double r) {
    return gibbs_mass_bound(M, lambda, tau, dim) * dim * std::erfc(r / (std::sqrt(2.0) * sigma));
  };
  double lo = 0.0, hi = sigma;
  while (outside(hi) > tail) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (outside(mid) > tail ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace mflow
