#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mflow/errors.hpp"

namespace mflow {

enum class EntropyFamily { shannon, tsallis, custom };

/// Convex generator phi of a Csiszar-type entropy, with phi' and phi''.
/// Immutable after construction.
class EntropyGenerator {
 public:
  struct Functions {
    std::function<double(double)> phi;
    std::function<double(double)> phi1;
    std::function<double(double)> phi2;
    double phi_at_0 = 0.0;
    /// phi'(0+); -infinity when the slope is unbounded.
    double phi1_at_0 = 0.0;
    /// phi2 arguments are clamped from below to this value.
    double domain_floor = 0.0;
    /// Optional exact (phi(s) - phi(0)) / s for s > 0, avoiding cancellation.
    std::function<double(double)> psi;
  };

  /// A generator from user-supplied functions, e.g. test probes. No
  /// closed-form conjugate is attached.
  static EntropyGenerator custom(std::string name, Functions fns);

  EntropyFamily family() const { return family_; }
  const std::string& name() const { return name_; }
  /// Tsallis index; 1 for shannon, NaN for custom generators.
  double q() const { return q_; }
  double tau() const { return tau_; }
  double domain_floor() const { return fns_.domain_floor; }

  double phi(double s) const { return fns_.phi(s); }
  double phi1(double s) const { return fns_.phi1(s); }
  double phi2(double s) const { return fns_.phi2(s < fns_.domain_floor ? fns_.domain_floor : s); }
  double phi_at_0() const { return fns_.phi_at_0; }
  double phi1_at_0() const { return fns_.phi1_at_0; }
  const std::function<double(double)>& psi_exact() const { return fns_.psi; }

  /// Closed-form phi*(r) for the shannon and tsallis families.
  std::optional<double> conjugate_closed_form(double r) const;

 private:
  friend EntropyGenerator make_shannon(double tau);
  friend EntropyGenerator make_tsallis(double q, double tau);

  EntropyGenerator(EntropyFamily family, std::string name, double q, double tau, Functions fns);

  EntropyFamily family_;
  std::string name_;
  double q_;
  double tau_;
  Functions fns_;
};

/// phi(s) = tau (s ln s - s + 1).
EntropyGenerator make_shannon(double tau);

/// phi(s) = tau / (q - 1) (s^q - 1 - q (s - 1)), q > 1.
EntropyGenerator make_tsallis(double q, double tau);

/// The non-convex function -(s - 1)^2 wearing a generator's interface. Exists
/// so the assumption checks have something to reject.
EntropyGenerator make_nonconvex_probe();

/// psi(s) = (phi(s) - phi(0)) / s for s > 0 and phi'(0+) at s = 0, so that
/// phi(s) = s psi(s) + phi(0). May return -infinity at s = 0.
double psi_decompose(const EntropyGenerator& gen, double s);

/// phi*(r) = sup_{s >= 0} { s r - phi(s) }, evaluated numerically on all of R.
///
/// The supremand is concave, so the maximizer is the root of phi'(s) = r,
/// found by bisection after an expanding bracket; r <= phi'(0+) puts the
/// maximizer on the boundary s = 0. If phi' turns out non-monotone on the
/// bracket the routine falls back to golden-section search on the supremand.
/// Throws NumericalError when no finite bracket exists.
double legendre_conjugate(const EntropyGenerator& gen, double r);

struct AssumptionCheck {
  std::string name;
  bool passed = false;
  /// Worst observed value of the checked quantity (sign convention per check).
  double margin = 0.0;
  std::string note;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  std::vector<double> smoothness_grid;
  std::vector<double> positivity_grid;
  std::vector<double> convexity_grid;
  std::vector<double> growth_grid;

  bool all_passed() const;
  const AssumptionCheck* find(const std::string& name) const;
};

/// Sampled checks of smoothness (P1), phi(1) = 0 (P2), positivity and strict
/// convexity (P3), and superlinear growth (P4). Failures become report
/// entries; nothing throws.
AssumptionReport check_assumptions(const EntropyGenerator& gen);

}  // namespace mflow
