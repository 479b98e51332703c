#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mflow/entropy.hpp"

using namespace mflow;

TEST_SUITE("entropy") {

TEST_CASE("shannon values") {
  auto g = make_shannon(1.0);
  CHECK(g.phi(1.0) == 0.0);
  CHECK(g.phi(std::numbers::e) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(make_shannon(2.0).phi_at_0() == 2.0);
  CHECK(make_shannon(2.0).phi(1e-300) == doctest::Approx(2.0));
  CHECK_THROWS_AS(make_shannon(0.0), InvalidInput);
}

TEST_CASE("tsallis values") {
  auto g = make_tsallis(2.0, 1.0);
  CHECK(g.phi(1.0) == 0.0);
  CHECK(g.phi(3.0) == doctest::Approx(4.0));
  CHECK(g.phi(0.0) == doctest::Approx(1.0));
  CHECK(g.phi_at_0() == doctest::Approx(1.0));
  CHECK(make_tsallis(3.0, 2.0).phi(2.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(make_tsallis(1.0, 1.0), InvalidInput);
  CHECK_THROWS_AS(make_tsallis(2.0, -1.0), InvalidInput);
}

TEST_CASE("psi decomposition") {
  auto t2 = make_tsallis(2.0, 1.0);
  CHECK(psi_decompose(t2, 3.0) == doctest::Approx(1.0));
  CHECK(psi_decompose(t2, 0.0) == doctest::Approx(-2.0));
  auto sh = make_shannon(1.0);
  CHECK(psi_decompose(sh, std::exp(2.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::isinf(psi_decompose(sh, 0.0)));
}

TEST_CASE("numeric conjugate against known values") {
  auto sh = make_shannon(1.0);
  CHECK(std::abs(legendre_conjugate(sh, 0.0)) < 1e-12);
  CHECK(legendre_conjugate(sh, 1.0) == doctest::Approx(1.718281828459045).epsilon(1e-10));
  auto t2 = make_tsallis(2.0, 1.0);
  CHECK(legendre_conjugate(t2, 2.0) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(legendre_conjugate(t2, -4.0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(legendre_conjugate(t2, 1.0) == doctest::Approx(1.25).epsilon(1e-10));
}

TEST_CASE("closed-form conjugates match the numeric one") {
  for (double q : {1.5, 2.0, 3.0}) {
    for (double tau : {0.5, 1.0, 2.0}) {
      auto g = make_tsallis(q, tau);
      for (double r = -5.0; r <= 5.0; r += 0.25) {
        double exact = *g.conjugate_closed_form(r);
        CHECK(legendre_conjugate(g, r) == doctest::Approx(exact).epsilon(1e-8));
      }
    }
  }
  auto sh = make_shannon(1.0);
  for (double r = -5.0; r <= 5.0; r += 0.25) {
    CHECK(*sh.conjugate_closed_form(r) == doctest::Approx(std::expm1(r)).epsilon(1e-14));
  }
  auto t2 = make_tsallis(2.0, 1.0);
  CHECK(*t2.conjugate_closed_form(-3.0) == -1.0);
  CHECK(*t2.conjugate_closed_form(1.0) == doctest::Approx(1.25));
}

TEST_CASE("assumption checks") {
  auto sh = check_assumptions(make_shannon(1.0));
  CHECK(sh.all_passed());
  REQUIRE(sh.find("P1_smoothness") != nullptr);
  CHECK(!sh.find("P1_smoothness")->note.empty());

  CHECK(check_assumptions(make_tsallis(2.0, 1.0)).all_passed());
  CHECK(check_assumptions(make_tsallis(1.5, 0.5)).all_passed());

  auto probe = check_assumptions(make_nonconvex_probe());
  CHECK_FALSE(probe.all_passed());
  CHECK_FALSE(probe.find("P3_strict_convexity")->passed);
}

TEST_CASE("tsallis approaches shannon as q tends to one") {
  for (double tau : {0.5, 1.0, 3.0}) {
    auto sh = make_shannon(tau);
    auto ts = make_tsallis(1.0 + 1e-4, tau);
    for (double s = 0.1; s <= 10.0; s += 0.05) {
      CHECK(std::abs(ts.phi(s) - sh.phi(s)) <= 0.01 * tau);
    }
  }
}

TEST_CASE("custom generators have no closed-form conjugate") {
  EntropyGenerator::Functions f;
  f.phi = [](double s) { return (s - 1) * (s - 1); };
  f.phi1 = [](double s) { return 2 * (s - 1); };
  f.phi2 = [](double) { return 2.0; };
  f.phi_at_0 = 1.0;
  f.phi1_at_0 = -2.0;
  auto g = EntropyGenerator::custom("square", f);
  CHECK_FALSE(g.conjugate_closed_form(1.0).has_value());
  CHECK(legendre_conjugate(g, 1.0) == doctest::Approx(1.25).epsilon(1e-10));
}

TEST_CASE("property: psi reconstruction and monotonicity on random samples") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> expo(-6.0, 4.0);
  for (const auto& g : {make_shannon(1.0), make_shannon(0.3), make_tsallis(1.5, 1.0), make_tsallis(3.0, 2.0)}) {
    for (int k = 0; k < 1000; ++k) {
      double s = std::pow(10.0, expo(rng));
      double t = std::pow(10.0, expo(rng));
      double scale = std::max(std::abs(g.phi(s)), std::abs(g.phi_at_0()));
      CHECK(std::abs(s * psi_decompose(g, s) + g.phi_at_0() - g.phi(s)) <= 1e-12 * scale);
      if (s < t) CHECK(psi_decompose(g, s) < psi_decompose(g, t));
      if (t < s) CHECK(psi_decompose(g, t) < psi_decompose(g, s));
    }
  }
}

TEST_CASE("property: Fenchel-Young inequality") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> sd(0.0, 20.0), rd(-5.0, 5.0);
  for (const auto& g : {make_shannon(1.0), make_tsallis(2.0, 1.0), make_tsallis(1.5, 2.0)}) {
    for (int k = 0; k < 200; ++k) {
      double s = sd(rng), r = rd(rng);
      CHECK(s * r <= g.phi(s) + *g.conjugate_closed_form(r) + 1e-10 * (1.0 + std::abs(s * r)));
    }
  }
}

}
