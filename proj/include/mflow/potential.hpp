#pragma once

#include <vector>

#include "mflow/grid.hpp"
#include "mflow/model.hpp"

namespace mflow {

/// Grid samples of the linearized potential V(x) = E[l(h_x(Z), Y)] + lambda/2 |x|^2
/// and of the Gibbs weight gamma = exp(-V / tau).
struct GibbsField {
  GridPtr grid;
  ScalarField V;
  /// Analytic gradient of V, one field per axis.
  std::vector<ScalarField> gradV;
  ScalarField gamma;
  /// Current integral of gamma over the box.
  double Z = 0.0;
  /// Integral of gamma before any normalization shift.
  double Z_raw = 0.0;
  /// Largest generalization error over the grid nodes.
  double M = 0.0;
  /// Certified global bound ||l||_inf * mass(D).
  double M_envelope = 0.0;
  double lambda = 0.0;
  double tau = 0.0;
  bool normalized = false;
};

struct MEstimate {
  double grid_max = 0.0;
  double envelope = 0.0;
};

/// Fills V, gradV, gamma and Z on `grid`. The grid dimension must equal the
/// dataset's parameter dimension.
GibbsField build_potential(const Dataset& data, const Loss& loss, const Activation& act,
                           double lambda, double tau, const GridPtr& grid);

/// V(x) = lambda/2 |x|^2, the potential with no data term (M = 0).
GibbsField build_quadratic_potential(double lambda, double tau, const GridPtr& grid);

/// max(0, max over nodes |generalization_error|) together with the envelope.
MEstimate estimate_M(const Dataset& data, const Loss& loss, const Activation& act,
                     const Grid& grid);

/// Shifts V by tau ln Z so that gamma integrates to one; gradV is untouched.
GibbsField normalize_gibbs(GibbsField field);

/// exp(M / tau) (2 pi tau / lambda)^(d/2), the Gaussian-integral bound on Z_raw.
double gibbs_mass_bound(double M, double lambda, double tau, int dim);

/// Smallest radius R for which the Gaussian-envelope tail of gamma outside
/// [-R, R]^d is below `tail`.
double default_box_radius(double lambda, double tau, double M, int dim, double tail = 1e-10);

}  // namespace mflow
