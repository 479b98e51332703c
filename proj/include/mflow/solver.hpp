#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "mflow/grid.hpp"
#include "mflow/potential.hpp"

namespace mflow {

enum class TimeScheme { implicit_euler, crank_nicolson };
enum class Preconditioner { none, jacobi };

struct SolverConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  TimeScheme scheme = TimeScheme::implicit_euler;
  double linear_tol = 1e-12;
  std::size_t max_linear_iters = 10000;
  std::size_t record_every = 10;
  Preconditioner preconditioner = Preconditioner::jacobi;
};

void validate(const SolverConfig& cfg);

/// Linear solve failed to reach the requested tolerance.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, double residual, std::size_t iterations)
      : NumericalError(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// Relative density w = d mu / d gamma at time t.
struct FlowState {
  double t = 0.0;
  ScalarField w;
  std::shared_ptr<const GibbsField> gibbs;
};

struct StepInfo {
  std::size_t iterations = 0;
  /// Preconditioned residual norm relative to the right-hand side.
  double residual = 0.0;
  /// Set when a crank-nicolson step produced a negative node value.
  bool positivity_warning = false;
};

/// Rescales a nonnegative w0 to unit gamma-mass. Rejects negative entries,
/// zero mass, or a grid different from the Gibbs field's.
FlowState init_state(std::shared_ptr<const GibbsField> gibbs, const ScalarField& w0);

/// One time step of dw/dt = G w.
///
/// implicit-euler solves (I - dt G) w+ = w; crank-nicolson solves
/// (I - dt/2 G) w+ = (I + dt/2 G) w. Both systems are symmetric positive
/// definite in the gamma inner product and are solved by conjugate gradients
/// on the equivalent symmetric form (D + theta dt K) w+ = D b, with D the
/// gamma node masses and K the graph Laplacian. `dt_override` > 0 replaces
/// cfg.dt for this step. Throws SolverError on non-convergence.
FlowState step(const FlowState& state, const SolverConfig& cfg, const WeightedOperator& op,
               StepInfo* info = nullptr, double dt_override = 0.0);

using Observer = std::function<void(double t, const ScalarField& w)>;

struct EvolveResult {
  FlowState state;
  std::size_t steps = 0;
  std::size_t observer_calls = 0;
  std::size_t max_linear_iters_used = 0;
  bool positivity_warning = false;
};

/// Steps to cfg.t_final, calling `observer` at t = 0, after every
/// cfg.record_every steps, and at the final time (once). When t_final is not
/// a multiple of dt the last step is shortened.
EvolveResult evolve(const FlowState& state, const SolverConfig& cfg, const WeightedOperator& op,
                    const Observer& observer = {});

/// Number of steps evolve takes for cfg.
std::size_t step_count(const SolverConfig& cfg);

}  // namespace mflow
