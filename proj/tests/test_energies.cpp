#include <cmath>

#include "doctest.h"
#include "pkslab/energies.hpp"

using namespace pkslab;

namespace {

const SelfSimilarProfile& profile(double alpha) { return *ProfileCache::global().get(alpha); }

Field2D gaussian(const Grid2D& g, double m, double t = 1.0) {
  return Field2D::from_function(
      g, [=](double x, double y) { return m / (4.0 * kPi * t) * std::exp(-(x * x + y * y) / (4.0 * t)); });
}

Field2D dilate(const SelfSimilarProfile& p, const Grid2D& g, double lambda) {
  const RadialInterpolant G(p.r, p.G, Interpolation::quintic_spline);
  return Field2D::from_function(g, [&](double x, double y) { return lambda * lambda * G(lambda * std::hypot(x, y)); });
}

// f(r) cos(n theta) from a table on the profile grid
Field2D angular(const SelfSimilarProfile& p, const Grid2D& g, const BasisFunction& b) {
  const RadialInterpolant f(p.r, b.values, Interpolation::quintic_spline, b.n % 2 ? -1 : 1);
  return Field2D::from_function(g, [&](double x, double y) {
    const double r = std::hypot(x, y);
    return r == 0.0 ? (b.n == 0 ? f(0.0) : 0.0) : f(r) * std::cos(b.n * std::atan2(y, x));
  });
}

}  // namespace

TEST_CASE("free energy of nothing is zero") {
  const Grid2D g{64, 8.0, {}};
  const auto e = free_energy_similarity(Field2D::zeros(g));
  CHECK(e.value == 0.0);
  CHECK(e.entropy == 0.0);
  CHECK(e.interaction == 0.0);
  CHECK(free_energy_physical(Field2D::zeros(g)).value == 0.0);
}

TEST_CASE("Gaussian closed forms") {
  const Grid2D g{256, 24.0, {}};
  const double m = 3.0;
  const auto e = free_energy_similarity(gaussian(g, m));
  CHECK(e.entropy == doctest::Approx(m * (std::log(m) - std::log(4.0 * kPi) - 1.0)).epsilon(1e-10));
  CHECK(e.moment == doctest::Approx(m).epsilon(1e-10));
  // |xi - zeta|^2 / 8 is exponential for independent standard Gaussians
  const double inter = m * m / (4.0 * kPi) * 0.5 * (std::log(8.0) - 0.57721566490153286);
  CHECK(e.interaction == doctest::Approx(inter).epsilon(1e-8));
  CHECK(e.value == doctest::Approx(e.entropy + e.moment + e.interaction));
  CHECK(e.to_json().at("moment").get<double>() == e.moment);
}

TEST_CASE("negative densities are rejected") {
  const Grid2D g{64, 8.0, {}};
  const Field2D w = gaussian(g, 1.0) - gaussian(g, 2.0, 0.5);
  CHECK_THROWS_AS(free_energy_similarity(w), NegativeDensity);
  CHECK_THROWS_AS(free_energy_physical(w), NegativeDensity);
}

TEST_CASE("profiles minimize the similarity free energy among dilations") {
  const Grid2D g{256, 24.0, {}};
  for (double a : {2.0 * kPi, 4.0 * kPi, 6.0 * kPi}) {
    const auto& p = profile(a);
    const double e0 = free_energy_similarity(dilate(p, g, 1.0)).value;
    for (double lambda : {0.8, 0.95, 1.05, 1.25}) {
      CAPTURE(a);
      CAPTURE(lambda);
      CHECK(e0 < free_energy_similarity(dilate(p, g, lambda)).value);
    }
  }
}

TEST_CASE("physical free energy scaling") {
  const Grid2D g{256, 24.0, {}};
  const double m = 5.0, lambda = 2.0;
  auto bump = [&](double s) {
    return Field2D::from_function(g, [=](double x, double y) {
      const double X = x / s, Y = y / s;
      return m / (s * s) * (std::exp(-(X * X + 2 * Y * Y)) + 0.5 * std::exp(-((X - 1) * (X - 1) + Y * Y) / 0.3));
    });
  };
  const Field2D u = bump(1.0), ul = bump(lambda);
  const double M = u.mass();
  const double predicted = free_energy_physical(u).value - 2.0 * M * std::log(lambda) +
                           M * M / (4.0 * kPi) * std::log(lambda);
  CHECK(free_energy_physical(ul).value == doctest::Approx(predicted).epsilon(1e-8));
}

TEST_CASE("linearized energy") {
  const auto& p = profile(4.0 * kPi);
  const Grid2D g{256, 16.0, {}};
  const auto dG = p.dG();
  const RadialInterpolant dGr(p.r, dG, Interpolation::quintic_spline, -1);
  const Field2D f = Field2D::from_function(g, [&](double x, double y) {
    const double r = std::hypot(x, y);
    return r == 0.0 ? 0.0 : dGr(r) * x / r;
  });

  SUBCASE("zero") {
    const auto e = linearized_energy(Field2D::zeros(g), p);
    CHECK(e.F == 0.0);
    CHECK(e.D == 0.0);
  }
  SUBCASE("translation mode decays at rate 1 in energy") {
    const auto e = linearized_energy(f, p);
    CHECK(e.F > 0.0);
    CHECK(e.D > 0.0);
    // f(tau) = e^{-tau/2} f gives dF/dtau = -F, hence D = F
    CHECK(e.D == doctest::Approx(e.F).epsilon(1e-6));
  }
  SUBCASE("quadratic") {
    const auto e1 = linearized_energy(f, p);
    const auto e3 = linearized_energy(f * 3.0, p);
    CHECK(e3.F == doctest::Approx(9.0 * e1.F).epsilon(1e-12));
    CHECK(e3.D == doctest::Approx(9.0 * e1.D).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(linearized_energy(gaussian(g, 1.0), p), MeanNotZero);
    // odd in x; the unpaired column x = -L is dropped so the mean vanishes
    const Field2D heavy = Field2D::from_function(
        g, [&](double x, double y) { return x == g.x(0) ? 0.0 : x * std::exp(-(x * x + y * y) / 16.0); });
    CHECK_THROWS_AS(linearized_energy(heavy, p), DivisionUnderflow);
  }
}

TEST_CASE("coercivity constant") {
  CHECK_THROWS_AS(coercivity_constant(profile(kPi), 7), InvalidArgument);
  const auto c4 = coercivity_constant(profile(4.0 * kPi));
  CHECK(c4.C > 0.0);
  CHECK(c4.C < 1.0);
  for (double q : c4.element_quotients) CHECK(q >= 0.0);

  SUBCASE("vanishes linearly at small mass") {
    const double c1 = coercivity_constant(profile(0.1)).C;
    const double c2 = coercivity_constant(profile(0.2)).C;
    const double c4s = coercivity_constant(profile(0.4)).C;
    CHECK(c2 / c1 == doctest::Approx(2.0).epsilon(0.05));
    CHECK(c4s / c2 == doctest::Approx(2.0).epsilon(0.05));
  }
  SUBCASE("increases along the mass ladder") {
    double prev = 0.0;
    for (double a : {kPi, 2.0 * kPi, 4.0 * kPi, 6.0 * kPi}) {
      const double c = coercivity_constant(profile(a)).C;
      CHECK(c > prev);
      prev = c;
    }
  }
  SUBCASE("coercivity inequality on the basis in 2D") {
    const auto& p = profile(4.0 * kPi);
    const Grid2D g{512, 32.0, {}};
    const Field2D G = profile_on_grid(p, g);
    for (const auto& b : coercivity_basis(p, 12)) {
      const Field2D f = angular(p, g, b);
      double q = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (G.values()[i] >= kProfileFloor * p.G.front()) q += f.values()[i] * f.values()[i] / G.values()[i];
      q *= g.cell_area();
      CAPTURE(b.n);
      CAPTURE(b.k);
      CHECK((1.0 - c4.C) * q <= 2.0 * linearized_energy(f, p).F);
    }
  }
}
