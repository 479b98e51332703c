#include "mflow/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace mflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFloor = 1e-12;

std::vector<double> logspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

double golden_section_max(const std::function<double(double)>& g, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double gc = g(c), gd = g(d);
  for (int it = 0; it < 400 && (b - a) > 1e-15 * std::max(1.0, b); ++it) {
    if (gc > gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - inv_phi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + inv_phi * (b - a);
      gd = g(d);
    }
  }
  return std::max({g(0.5 * (a + b)), g(lo), gc, gd});
}

}  // namespace

EntropyGenerator::EntropyGenerator(EntropyFamily family, std::string name, double q, double tau,
                                   Functions fns)
    : family_(family), name_(std::move(name)), q_(q), tau_(tau), fns_(std::move(fns)) {}

EntropyGenerator EntropyGenerator::custom(std::string name, Functions fns) {
  if (!fns.phi || !fns.phi1 || !fns.phi2) {
    throw InvalidInput("custom generator needs phi, phi' and phi''");
  }
  return EntropyGenerator(EntropyFamily::custom, std::move(name),
                          std::numeric_limits<double>::quiet_NaN(), 1.0, std::move(fns));
}

EntropyGenerator make_shannon(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("shannon generator needs tau > 0");
  EntropyGenerator::Functions f;
  f.phi = [tau](double s) { return s > 0.0 ? tau * (s * std::log(s) - s + 1.0) : tau; };
  f.phi1 = [tau](double s) { return s > 0.0 ? tau * std::log(s) : -kInf; };
  f.phi2 = [tau](double s) { return tau / s; };
  f.psi = [tau](double s) { return tau * (std::log(s) - 1.0); };
  f.phi_at_0 = tau;
  f.phi1_at_0 = -kInf;
  f.domain_floor = kFloor;
  return EntropyGenerator(EntropyFamily::shannon, "shannon", 1.0, tau, std::move(f));
}

EntropyGenerator make_tsallis(double q, double tau) {
  if (!(q > 1.0) || !std::isfinite(q)) throw InvalidInput("tsallis generator needs q > 1");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInput("tsallis generator needs tau > 0");
  EntropyGenerator::Functions f;
  const double c = tau / (q - 1.0);
  f.phi = [c, q](double s) { return c * (std::pow(s, q) - 1.0 - q * (s - 1.0)); };
  f.phi1 = [c, q](double s) { return c * q * (std::pow(s, q - 1.0) - 1.0); };
  f.phi2 = [tau, q](double s) { return tau * q * std::pow(s, q - 2.0); };
  f.psi = [c, q](double s) { return c * (std::pow(s, q - 1.0) - q); };
  f.phi_at_0 = tau;
  f.phi1_at_0 = -c * q;
  f.domain_floor = q < 2.0 ? kFloor : 0.0;
  return EntropyGenerator(EntropyFamily::tsallis, "tsallis", q, tau, std::move(f));
}

EntropyGenerator make_nonconvex_probe() {
  EntropyGenerator::Functions f;
  f.phi = [](double s) { return -(s - 1.0) * (s - 1.0); };
  f.phi1 = [](double s) { return -2.0 * (s - 1.0); };
  f.phi2 = [](double) { return -2.0; };
  f.phi_at_0 = -1.0;
  f.phi1_at_0 = 2.0;
  return EntropyGenerator::custom("nonconvex_probe", std::move(f));
}

std::optional<double> EntropyGenerator::conjugate_closed_form(double r) const {
  switch (family_) {
    case EntropyFamily::shannon:
      return tau_ * std::expm1(r / tau_);
    case EntropyFamily::tsallis: {
      double base = 1.0 + r * (q_ - 1.0) / (tau_ * q_);
      if (base <= 0.0) return -tau_;
      double s = std::pow(base, 1.0 / (q_ - 1.0));
      return s * r - phi(s);
    }
    case EntropyFamily::custom:
      break;
  }
  return std::nullopt;
}

double psi_decompose(const EntropyGenerator& gen, double s) {
  if (!(s >= 0.0)) throw InvalidInput("psi_decompose needs s >= 0");
  if (s == 0.0) return gen.phi1_at_0();
  if (gen.psi_exact()) return gen.psi_exact()(s);
  return (gen.phi(s) - gen.phi_at_0()) / s;
}

double legendre_conjugate(const EntropyGenerator& gen, double r) {
  if (!std::isfinite(r)) throw InvalidInput("legendre_conjugate needs finite r");
  auto supremand = [&](double s) { return s * r - gen.phi(s); };
  if (r <= gen.phi1_at_0()) return -gen.phi_at_0();

  double lo = 0.0, hi = 1.0;
  int doublings = 0;
  while (!(gen.phi1(hi) >= r)) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 1100 || !std::isfinite(hi)) {
      throw NumericalError("legendre_conjugate: cannot bracket phi'(s) = " + std::to_string(r));
    }
  }

  bool monotone = true;
  double d_lo = lo > 0.0 ? gen.phi1(lo) : gen.phi1_at_0();
  double d_hi = gen.phi1(hi);
  for (int it = 0; it < 300 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    double d_mid = gen.phi1(mid);
    if (d_mid < d_lo || d_mid > d_hi) {
      monotone = false;
      break;
    }
    if (d_mid < r) {
      lo = mid;
      d_lo = d_mid;
    } else {
      hi = mid;
      d_hi = d_mid;
    }
  }
  if (!monotone) {
    double top = 1.0;
    while (supremand(2.0 * top) >= supremand(top)) {
      top *= 2.0;
      if (!std::isfinite(top)) {
        throw NumericalError("legendre_conjugate: supremand unbounded at r = " + std::to_string(r));
      }
    }
    return golden_section_max(supremand, 0.0, 2.0 * top);
  }
  double s = 0.5 * (lo + hi);
  return std::max({supremand(s), supremand(lo), supremand(hi), -gen.phi_at_0()});
}

bool AssumptionReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* AssumptionReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

AssumptionReport check_assumptions(const EntropyGenerator& gen) {
  AssumptionReport report;

  // P1: derivative consistency on (0, inf).
  report.smoothness_grid = logspace(1e-3, 1e3, 61);
  {
    double worst = 0.0;
    for (double s : report.smoothness_grid) {
      double h = 1e-4 * s;
      double fd1 = (gen.phi(s + h) - gen.phi(s - h)) / (2 * h);
      double fd2 = (gen.phi1(s + h) - gen.phi1(s - h)) / (2 * h);
      double scale1 = std::abs(gen.phi1(s)) + std::abs(gen.phi(s)) / s + 1.0;
      double scale2 = std::abs(gen.phi2(s)) + 1.0;
      worst = std::max(worst, std::abs(fd1 - gen.phi1(s)) / scale1);
      worst = std::max(worst, std::abs(fd2 - gen.phi2(s)) / scale2);
    }
    AssumptionCheck c{"P1_smoothness", worst <= 1e-6, worst, ""};
    double at_floor = gen.phi2(std::max(gen.domain_floor(), 1e-12));
    if (std::abs(at_floor) > 1e6 * std::max(std::abs(gen.phi2(1.0)), 1e-300)) {
      c.note = "phi'' unbounded near 0; evaluated with domain floor " +
               std::to_string(gen.domain_floor());
    }
    report.checks.push_back(std::move(c));
  }

  // P2
  {
    double v = gen.phi(1.0);
    report.checks.push_back({"P2_normalization", v == 0.0, std::abs(v), ""});
  }

  // P3 positivity
  {
    auto& grid = report.positivity_grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(0.01 * i);
    for (double s : logspace(2.0, 1e4, 81)) grid.push_back(s);
    double lowest = kInf;
    for (double s : grid) lowest = std::min(lowest, gen.phi(s));
    report.checks.push_back({"P3_positivity", lowest >= 0.0, lowest, ""});
  }

  // P3 strict convexity through second divided differences.
  {
    auto& grid = report.convexity_grid;
    grid.push_back(0.0);
    for (double s : logspace(1e-3, 1e4, 141)) grid.push_back(s);
    double lowest = kInf;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
      double a = grid[i - 1], b = grid[i], c = grid[i + 1];
      double fa = a == 0.0 ? gen.phi_at_0() : gen.phi(a);
      double dd = ((gen.phi(c) - gen.phi(b)) / (c - b) - (gen.phi(b) - fa) / (b - a)) / (c - a);
      lowest = std::min(lowest, dd);
    }
    report.checks.push_back({"P3_strict_convexity", lowest > 0.0, lowest, ""});
  }

  // P4 superlinearity witness: phi(s)/s increasing along decades.
  {
    auto& grid = report.growth_grid;
    for (int k = 1; k <= 6; ++k) grid.push_back(std::pow(10.0, k));
    double lowest = kInf;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      lowest = std::min(lowest, gen.phi(grid[i]) / grid[i] - gen.phi(grid[i - 1]) / grid[i - 1]);
    }
    report.checks.push_back({"P4_superlinearity", lowest > 0.0, lowest, ""});
  }
  return report;
}

}  // namespace mflow
