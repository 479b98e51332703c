#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "mflow/analysis.hpp"
#include "mflow/solver.hpp"

using namespace mflow;

namespace {

std::shared_ptr<const GibbsField> ou_gibbs(std::size_t n = 401, bool normalized = true) {
  auto f = build_quadratic_potential(1.0, 1.0, build_cube_grid(1, 6.0, n));
  return std::make_shared<const GibbsField>(normalized ? normalize_gibbs(f) : f);
}

std::vector<EnergyRecord> synthetic(double amplitude, double rate, double e_star, int count, double dt) {
  std::vector<EnergyRecord> r;
  for (int k = 0; k < count; ++k) {
    double t = k * dt;
    r.push_back({t, amplitude * std::exp(-rate * t) + e_star, amplitude * rate * std::exp(-rate * t), 1.0, 0.0, 1.0});
  }
  return r;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("energy values") {
  auto gibbs = ou_gibbs();
  auto sh = make_shannon(1.0);
  CHECK(energy(ScalarField(gibbs->grid, 1.0), *gibbs, sh) == 0.0);

  std::vector<double> m{0.5};
  auto w = ou_relative_density(gibbs->grid, m, 1.0, 1.0, 0.0);
  CHECK(std::abs(energy(w, *gibbs, sh) - 0.125) < 1e-4);

  ScalarField neg(gibbs->grid, 1.0);
  neg[3] = -1e-6;
  CHECK_THROWS_AS(energy(neg, *gibbs, sh), InvalidInput);
  neg[3] = -1e-13;
  CHECK(std::isfinite(energy(neg, *gibbs, sh)));
}

TEST_CASE("tsallis two energy is the gamma variance") {
  auto gibbs = ou_gibbs();
  auto t2 = make_tsallis(2.0, 1.0);
  // g = x has zero gamma-mean by symmetry.
  ScalarField g(gibbs->grid), w(gibbs->grid);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = gibbs->grid->coord(0, i);
  const double a = 0.1;
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = 1.0 + a * g[i] / 7.0;
  ScalarField gg(gibbs->grid);
  for (std::size_t i = 0; i < g.size(); ++i) gg[i] = g[i] * g[i] / 49.0;
  CHECK(energy(w, *gibbs, t2) == doctest::Approx(a * a * integrate(gg, gibbs->gamma)).epsilon(1e-12));
}

TEST_CASE("fisher of Gaussian translates") {
  auto gibbs = ou_gibbs();
  auto sh = make_shannon(1.0);
  CHECK(fisher(ScalarField(gibbs->grid, 2.0), *gibbs, sh) == 0.0);
  std::vector<double> m{0.5};
  auto w = ou_relative_density(gibbs->grid, m, 1.0, 1.0, 0.0);
  double ratio = fisher(w, *gibbs, sh) / energy(w, *gibbs, sh);
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.02));
  auto s = sobolev_ratio(w, *gibbs, sh);
  REQUIRE(s.has_value());
  CHECK(*s == doctest::Approx(0.5).epsilon(0.02));
  CHECK_FALSE(sobolev_ratio(ScalarField(gibbs->grid, 1.0), *gibbs, sh).has_value());
  CHECK_THROWS_AS(sobolev_ratio(w, *ou_gibbs(401, false), sh), InvalidInput);
}

TEST_CASE("fisher converges under refinement") {
  auto sh = make_shannon(1.0);
  std::vector<double> m{0.5};
  auto value = [&](std::size_t n) {
    auto gibbs = ou_gibbs(n);
    return fisher(ou_relative_density(gibbs->grid, m, 1.0, 1.0, 0.0), *gibbs, sh);
  };
  // Exact fisher of the translate is lambda m^2 = 0.25.
  double e1 = std::abs(value(101) - 0.25), e2 = std::abs(value(201) - 0.25);
  CHECK(std::log2(e1 / e2) >= 1.0);
}

TEST_CASE("rate formula") {
  CHECK(lambda_rate(1.0, 1.0, 0.0) == 2.0);
  CHECK(lambda_rate(1.0, 1.0, std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lambda_rate(2.0, 0.5, 0.0) == 8.0);
  CHECK_THROWS_AS(lambda_rate(0.0, 1.0, 0.0), InvalidInput);
  CHECK_THROWS_AS(lambda_rate(1.0, 0.0, 0.0), InvalidInput);
}

TEST_CASE("minimizer") {
  auto gibbs = ou_gibbs();
  for (const auto& gen : {make_shannon(1.0), make_tsallis(2.0, 1.0)}) {
    auto m = compute_minimizer(*gibbs, gen);
    CHECK(m.E_star == 0.0);
    for (double v : m.w_star.values) CHECK(v == 1.0);
  }
  // Z = 2 on a half-weight field.
  auto g = build_cube_grid(1, 1.0, 5);
  GibbsField half = build_quadratic_potential(1.0, 1.0, g);
  for (double& v : half.gamma.values) v = 1.0;
  half.Z = integrate(half.gamma);
  CHECK(half.Z == 2.0);
  auto m = compute_minimizer(half, make_tsallis(2.0, 1.0));
  CHECK(m.E_star == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(energy(m.w_star, half, make_tsallis(2.0, 1.0)) == m.E_star);
}

TEST_CASE("duality bound") {
  auto gibbs = ou_gibbs(201);
  auto sh = make_shannon(1.0);
  std::mt19937_64 rng(3);
  auto w = random_smooth_density(*gibbs, rng);
  double e = energy(w, *gibbs, sh);
  CHECK(std::abs(duality_lower_bound(ScalarField(gibbs->grid, 0.0), w, *gibbs, sh)) < 1e-12);
  ScalarField slope(gibbs->grid);
  for (std::size_t i = 0; i < w.size(); ++i) slope[i] = sh.phi1(w[i]);
  CHECK(duality_lower_bound(slope, w, *gibbs, sh) == doctest::Approx(e).epsilon(1e-8));
  for (int k = 0; k < 20; ++k) {
    CHECK(duality_lower_bound(random_test_function(gibbs->grid, rng), w, *gibbs, sh) <= e + 1e-10);
  }
}

TEST_CASE("OU oracle") {
  auto a = ou_oracle(0.5, 1.0, 1.0, 0.0);
  CHECK(a.mean == 0.5);
  CHECK(a.energy_shannon == doctest::Approx(0.125));
  auto b = ou_oracle(0.5, 1.0, 1.0, 100.0);
  CHECK(b.mean == doctest::Approx(0.0));
  CHECK(b.energy_shannon == doctest::Approx(0.0));
  CHECK(ou_oracle(0.8, 2.0, 1.0, std::log(2.0) / 2.0).mean == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("decay fit") {
  auto exact = synthetic(0.3, 1.7, 0.05, 400, 0.01);
  auto rep = fit_decay_rate(exact, 0.05, 1.0);
  CHECK(rep.fitted_rate == doctest::Approx(1.7).epsilon(1e-6));
  CHECK(rep.lambda_theory == 1.0);
  CHECK(rep.t_lo < rep.t_hi);

  auto few = synthetic(0.3, 1.7, 0.0, 5, 0.01);
  CHECK_THROWS_AS(fit_decay_rate(few, 0.0, 1.0), NumericalError);
}

TEST_CASE("dissipation check") {
  std::vector<EnergyRecord> still(5, EnergyRecord{0, 0, 0, 1, 1, 1});
  for (int k = 0; k < 5; ++k) still[k].t = 0.1 * k;
  auto rep = dissipation_check(still);
  CHECK(rep.max_rel_error == 0.0);
  CHECK(rep.monotone);

  auto decaying = synthetic(1.0, 2.0, 0.0, 200, 1e-3);
  CHECK(dissipation_check(decaying).max_rel_error < 1e-5);
  decaying[50].energy += 0.1;
  CHECK_FALSE(dissipation_check(decaying).monotone);
}

TEST_CASE("property: random densities have unit mass and respect the bounds") {
  auto gibbs = ou_gibbs(201);
  auto sh = make_shannon(1.0);
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k) {
    auto w = random_smooth_density(*gibbs, rng);
    CHECK(integrate(w, gibbs->gamma) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(energy(w, *gibbs, sh) >= 0.0);
    CHECK(fisher(w, *gibbs, sh) >= 0.0);
    if (auto r = sobolev_ratio(w, *gibbs, sh)) CHECK(*r <= sobolev_bound(*gibbs));
  }
}

TEST_CASE("L1 distance") {
  auto gibbs = ou_gibbs(101);
  CHECK(l1_distance(ScalarField(gibbs->grid, 1.0), ScalarField(gibbs->grid, 3.0), gibbs->gamma) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

}
