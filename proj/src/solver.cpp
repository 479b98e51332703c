#include "mflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mflow {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct CgResult {
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Preconditioned CG for (D + c K) x = b; x holds the initial guess on entry.
CgResult conjugate_gradient(const WeightedOperator& op, double c, std::span<const double> b,
                            std::span<double> x, const SolverConfig& cfg) {
  const auto mass = op.node_mass();
  const std::size_t n = b.size();
  std::vector<double> inv_diag(n, 1.0);
  if (cfg.preconditioner == Preconditioner::jacobi) {
    auto diag = op.laplacian_diagonal();
    for (std::size_t i = 0; i < n; ++i) inv_diag[i] = 1.0 / (mass[i] + c * diag[i]);
  }
  std::vector<double> r(n), z(n), p(n), ap(n);
  auto apply_system = [&](std::span<const double> v, std::span<double> out) {
    op.apply_laplacian(v, out);
    for (std::size_t i = 0; i < n; ++i) out[i] = mass[i] * v[i] + c * out[i];
  };

  double norm_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) norm_b += b[i] * b[i] * inv_diag[i];
  norm_b = std::sqrt(norm_b);
  CgResult res;
  if (norm_b == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }

  apply_system(x, ap);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = b[i] - ap[i];
    z[i] = inv_diag[i] * r[i];
  }
  p = z;
  double rz = dot(r, z);
  for (;;) {
    res.residual = std::sqrt(std::max(rz, 0.0)) / norm_b;
    if (res.residual <= cfg.linear_tol) {
      res.converged = true;
      return res;
    }
    if (res.iterations >= cfg.max_linear_iters) return res;
    apply_system(p, ap);
    double alpha = rz / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      z[i] = inv_diag[i] * r[i];
    }
    double rz_next = dot(r, z);
    double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    ++res.iterations;
  }
}

}  // namespace

void validate(const SolverConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InvalidInput("solver dt must be positive");
  if (!(cfg.t_final >= 0.0) || !std::isfinite(cfg.t_final)) {
    throw InvalidInput("solver t_final must be nonnegative");
  }
  if (!(cfg.linear_tol > 0.0)) throw InvalidInput("solver linear_tol must be positive");
  if (cfg.max_linear_iters == 0) throw InvalidInput("solver max_linear_iters must be positive");
  if (cfg.record_every == 0) throw InvalidInput("solver record_every must be positive");
}

FlowState init_state(std::shared_ptr<const GibbsField> gibbs, const ScalarField& w0) {
  if (!gibbs) throw InvalidInput("flow state needs a Gibbs field");
  ScalarField gamma = gibbs->gamma;
  require_same_grid(w0, gamma);
  for (double v : w0.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidInput("initial density must be finite and nonnegative");
    }
  }
  double mass = integrate(w0, gamma);
  if (!(mass > 0.0)) throw InvalidInput("initial density has zero gamma-mass");
  FlowState s;
  s.gibbs = std::move(gibbs);
  s.w = ScalarField(s.gibbs->grid, w0.values);
  for (double& v : s.w.values) v /= mass;
  return s;
}

FlowState step(const FlowState& state, const SolverConfig& cfg, const WeightedOperator& op,
               StepInfo* info, double dt_override) {
  const double dt = dt_override > 0.0 ? dt_override : cfg.dt;
  const auto mass = op.node_mass();
  const std::size_t n = state.w.size();
  if (n != mass.size()) throw InvalidInput("state does not match operator grid");

  const bool cn = cfg.scheme == TimeScheme::crank_nicolson;
  const double theta_dt = cn ? 0.5 * dt : dt;
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = mass[i] * state.w[i];
  if (cn) {
    std::vector<double> kw(n);
    op.apply_laplacian(state.w.values, kw);
    for (std::size_t i = 0; i < n; ++i) b[i] -= theta_dt * kw[i];
  }

  FlowState next{state.t + dt, state.w, state.gibbs};
  auto cg = conjugate_gradient(op, theta_dt, b, next.w.values, cfg);
  if (!cg.converged) {
    throw SolverError("linear solve did not converge in " + std::to_string(cg.iterations) +
                          " iterations (relative residual " + std::to_string(cg.residual) + ")",
                      cg.residual, cg.iterations);
  }
  // The exact solution conserves sum(mass * w) because K annihilates
  // constants; a constant shift removes the part of the CG residual that
  // would otherwise let the mass drift by ~linear_tol per step.
  double before = 0.0, after = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    before += mass[i] * state.w[i];
    after += mass[i] * next.w[i];
    total += mass[i];
  }
  const double shift = (before - after) / total;
  for (double& v : next.w.values) v += shift;
  if (info) {
    info->iterations = cg.iterations;
    info->residual = cg.residual;
    info->positivity_warning =
        cn && std::any_of(next.w.values.begin(), next.w.values.end(), [](double v) { return v < 0.0; });
  }
  return next;
}

std::size_t step_count(const SolverConfig& cfg) {
  if (cfg.t_final <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(cfg.t_final / cfg.dt - 1e-9));
}

EvolveResult evolve(const FlowState& state, const SolverConfig& cfg, const WeightedOperator& op,
                    const Observer& observer) {
  validate(cfg);
  EvolveResult out;
  out.state = state;
  const double t0 = state.t;
  auto notify = [&](const FlowState& s) {
    if (observer) observer(s.t, s.w);
    ++out.observer_calls;
  };
  notify(out.state);

  const std::size_t total = step_count(cfg);
  for (std::size_t k = 1; k <= total; ++k) {
    const bool last = k == total;
    double dt = last ? cfg.t_final - cfg.dt * static_cast<double>(k - 1) : cfg.dt;
    StepInfo info;
    out.state = step(out.state, cfg, op, &info, dt);
    out.state.t = last ? t0 + cfg.t_final : t0 + cfg.dt * static_cast<double>(k);
    out.max_linear_iters_used = std::max(out.max_linear_iters_used, info.iterations);
    out.positivity_warning = out.positivity_warning || info.positivity_warning;
    if (k % cfg.record_every == 0 || last) notify(out.state);
  }
  out.steps = total;
  return out;
}

}  // namespace mflow
