#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/expint.hpp>

#include "doctest.h"
#include "pkslab/fields.hpp"

using namespace pkslab;

namespace {

// Heat kernel at time t with mass m: m e^{-r^2/4t} / (4 pi t).
double gaussian(double x, double y, double t, double m = 1.0) {
  return m * std::exp(-(x * x + y * y) / (4.0 * t)) / (4.0 * kPi * t);
}

// Exact potential of the unit-mass heat kernel at time t:
// c(r) = -(1/2pi) (log r + E1(r^2/4t)/2).
double gaussian_potential(double r, double t) {
  if (r == 0.0) return -(std::log(2.0 * std::sqrt(t)) - 0.5 * 0.57721566490153286) / (2.0 * kPi);
  return -(std::log(r) + 0.5 * boost::math::expint(1, r * r / (4.0 * t))) / (2.0 * kPi);
}

Grid2D grid(int n = 128, double L = 16.0) { return Grid2D{n, L, {0.0, 0.0}}; }

double rel_l2(const Field2D& a, const Field2D& b) {
  return norm_lpm(a - b, {2.0, 0.0}) / norm_lpm(b, {2.0, 0.0});
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid2D({12, 1.0, {}}).validate(), InvalidArgument);
  CHECK_THROWS_AS(Grid2D({100, 1.0, {}}).validate(), InvalidArgument);
  CHECK_THROWS_AS(Grid2D({64, -1.0, {}}).validate(), InvalidArgument);
  CHECK_NOTHROW(Grid2D({16, 1.0, {}}).validate());
  std::vector<double> bad(16 * 16, 0.0);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Field2D(Grid2D{16, 1.0, {}}, bad), NanDetected);
}

TEST_CASE("weighted norms") {
  const Grid2D g = grid();
  const Field2D zero = Field2D::zeros(g);
  CHECK(norm_lpm(zero, {1.0, 0.0}) == 0.0);
  CHECK(norm_lpm(zero, {std::numeric_limits<double>::infinity(), 5.0}) == 0.0);

  const double alpha = 3.7;
  const Field2D G = Field2D::from_function(g, [](double x, double y) { return gaussian(x, y, 1.0); });
  CHECK(norm_lpm(G * alpha, {1.0, 0.0}) == doctest::Approx(alpha).epsilon(1e-12));
  // int G^2 = (4 pi)^-2 int e^{-r^2/2} = 1/(8 pi)
  CHECK(norm_lpm(G, {2.0, 0.0}) == doctest::Approx(1.0 / std::sqrt(8.0 * kPi)).epsilon(1e-12));
  CHECK(norm_lpm(G, {std::numeric_limits<double>::infinity(), 0.0}) ==
        doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-12));
  CHECK_THROWS_AS(norm_lpm(G, {0.5, 0.0}), InvalidArgument);

  double prev = 0.0;
  for (double m : {0.0, 1.0, 2.0, 5.0}) {
    const double v = norm_lpm(G, {2.0, m});
    CHECK(v > prev);
    prev = v;
  }

  // The radial version agrees with the 2D one for a radial function.
  RadialField rg{uniform_radial_nodes(20.0, 2001), {}};
  for (double r : rg.nodes) rg.values.push_back(gaussian(r, 0.0, 1.0));
  for (double p : {1.0, 4.0 / 3.0, 2.0})
    CHECK(norm_lpm(rg, {p, 5.0}) == doctest::Approx(norm_lpm(G, {p, 5.0})).epsilon(1e-9));
}

TEST_CASE("radial quadrature is fourth order") {
  // int_0^R r e^{-r^2} dr = (1 - e^{-R^2})/2
  auto error = [](int points) {
    const auto r = uniform_radial_nodes(3.0, points);
    std::vector<double> F;
    for (double x : r) F.push_back(x * std::exp(-x * x));
    const double I = cumulative_integral(F, r[1], -1).back();
    return std::abs(I - 0.5 * (1.0 - std::exp(-9.0)));
  };
  const double e1 = error(101), e2 = error(201);
  CHECK(std::log2(e1 / e2) > 3.7);
  CHECK(e2 < 1e-8);
}

TEST_CASE("radial Poisson against Gauss law") {
  RadialField zero{uniform_radial_nodes(20.0, 1001), std::vector<double>(1001, 0.0)};
  const RadialPotential z = poisson_radial(zero);
  for (double c : z.potential.values) CHECK(c == 0.0);

  RadialField g{uniform_radial_nodes(20.0, 2001), {}};
  for (double r : g.nodes) g.values.push_back(gaussian(r, 0.0, 1.0));
  const RadialPotential p = poisson_radial(g);
  double worst_slope = 0.0, worst_value = 0.0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    const double r = g.nodes[i];
    const double expected = -(1.0 - std::exp(-r * r / 4.0)) / (2.0 * kPi * r);
    worst_slope = std::max(worst_slope, std::abs(p.derivative[i] - expected));
    worst_value = std::max(worst_value, std::abs(p.potential.values[i] - gaussian_potential(r, 1.0)));
  }
  CHECK(worst_slope < 1e-10);
  CHECK(worst_value < 1e-10);

  RadialField bad = g;
  std::swap(bad.nodes[5], bad.nodes[6]);
  CHECK_THROWS_AS(poisson_radial(bad), InvalidArgument);
}

TEST_CASE("free-space Poisson") {
  const Grid2D g = grid(128, 20.0);
  const Field2D zero = Field2D::zeros(g);
  CHECK(poisson_free_space(zero).max_abs() == 0.0);

  const Field2D u = Field2D::from_function(g, [](double x, double y) { return gaussian(x, y, 1.0); });
  const PoissonResult res = solve_poisson(u, {1e-8, true, true});

  SUBCASE("potential matches the closed form everywhere in the box") {
    double worst = 0.0;
    for (int iy = 0; iy < g.n; ++iy)
      for (int ix = 0; ix < g.n; ++ix)
        worst = std::max(worst, std::abs(res.potential(ix, iy) -
                                         gaussian_potential(std::hypot(g.x(ix), g.y(iy)), 1.0)));
    CHECK(worst < 1e-10);
  }
  SUBCASE("radial derivative obeys Gauss law") {
    double worst = 0.0;
    for (int iy = 0; iy < g.n; ++iy)
      for (int ix = 0; ix < g.n; ++ix) {
        const double x = g.x(ix), y = g.y(iy), r = std::hypot(x, y);
        if (r < 1e-12) continue;
        const double dr = (res.dx(ix, iy) * x + res.dy(ix, iy) * y) / r;
        worst = std::max(worst, std::abs(-dr - (1.0 - std::exp(-r * r / 4.0)) / (2.0 * kPi * r)));
      }
    CHECK(worst < 1e-10);
  }
  SUBCASE("discrete Laplacian recovers -u") {
    const Field2D lap = fd_laplacian(res.potential);
    // compare on the region the stencil covers
    std::vector<double> diff(g.size(), 0.0), ref(g.size(), 0.0);
    for (int iy = 4; iy < g.n - 4; ++iy)
      for (int ix = 4; ix < g.n - 4; ++ix) {
        diff[iy * g.n + ix] = lap(ix, iy) + u(ix, iy);
        ref[iy * g.n + ix] = u(ix, iy);
      }
    CHECK(norm_lpm(Field2D(g, diff), {2.0, 0.0}) / norm_lpm(Field2D(g, ref), {2.0, 0.0}) < 1e-6);
  }
  SUBCASE("cross-check with the radial solver") {
    RadialField rg{uniform_radial_nodes(24.0, 4001), {}};
    for (double r : rg.nodes) rg.values.push_back(gaussian(r, 0.0, 1.0));
    const RadialPotential rp = poisson_radial(rg);
    double worst = 0.0, scale = 0.0;
    const double h = rg.spacing();
    for (int iy = 0; iy < g.n; ++iy)
      for (int ix = 0; ix < g.n; ++ix) {
        const double r = std::hypot(g.x(ix), g.y(iy));
        const std::size_t i = static_cast<std::size_t>(r / h);
        const double w = r / h - i;
        const double cr = (1 - w) * rp.potential.values[i] + w * rp.potential.values[i + 1];
        if (w > 1e-9) continue;  // exact node hits only, avoiding interpolation error
        worst = std::max(worst, std::abs(res.potential(ix, iy) - cr));
        scale = std::max(scale, std::abs(cr));
      }
    CHECK(worst / scale < 1e-6);
  }
}

TEST_CASE("far field of a narrow unit bump") {
  const Grid2D g = grid(256, 8.0);
  const Field2D u = Field2D::from_function(g, [](double x, double y) { return gaussian(x, y, 0.01); });
  const Field2D c = poisson_free_space(u);
  for (int ix : {g.n / 2 + 80, g.n - 1}) {
    const double r = std::hypot(g.x(ix), g.y(g.n / 2));
    CHECK(std::abs(c(ix, g.n / 2) + std::log(r) / (2.0 * kPi)) < 1e-10);
  }
}

TEST_CASE("support overflow is rejected") {
  const Grid2D g = grid(64, 4.0);
  const Field2D u = Field2D::from_function(g, [](double x, double y) { return gaussian(x - 3.0, y, 0.1); });
  CHECK_THROWS_AS(poisson_free_space(u), SupportOverflow);
}

TEST_CASE("Poisson solve is linear") {
  const Grid2D g = grid(128, 16.0);
  const Field2D a = Field2D::from_function(g, [](double x, double y) { return gaussian(x - 0.5, y, 0.5); });
  const Field2D b = Field2D::from_function(g, [](double x, double y) { return x * gaussian(x, y + 0.3, 0.4); });
  const Field2D lhs = poisson_free_space(a * 2.0 + b * -3.0);
  const Field2D rhs = poisson_free_space(a) * 2.0 + poisson_free_space(b) * -3.0;
  CHECK((lhs - rhs).max_abs() < 1e-13 * rhs.max_abs() * 10);
}

TEST_CASE("mode-1 radial potential matches the 2D solve") {
  const Grid2D g = grid(128, 12.0);
  auto radial = [](double r) { return r * std::exp(-r * r / 2.0); };
  const Field2D f = Field2D::from_function(g, [&](double x, double y) {
    const double r = std::hypot(x, y);
    return r > 0 ? radial(r) * x / r : 0.0;
  });
  const Field2D c = poisson_free_space(f);
  RadialField rf{uniform_radial_nodes(12.0, 1025), {}};
  for (double r : rf.nodes) rf.values.push_back(radial(r));
  const ModePotential psi = poisson_radial_mode(1, rf);
  // along the positive x axis cos(theta) = 1; every 16th radial node is a grid point
  double worst = 0.0;
  for (int ix = g.n / 2 + 1; ix < g.n; ++ix) {
    const double r = g.x(ix);
    const std::size_t i = static_cast<std::size_t>(std::lround(r / rf.spacing()));
    worst = std::max(worst, std::abs(c(ix, g.n / 2) - psi.potential[i]));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("heat semigroup") {
  const Grid2D g = grid(128, 8.0);
  const Field2D f = Field2D::from_function(g, [](double x, double y) {
    return gaussian(x - 0.7, y, 0.3) + 0.5 * gaussian(x + 1.0, y - 0.4, 0.1);
  });
  CHECK_THROWS_AS(heat_apply(f, 0.0), InvalidArgument);
  const Field2D a = heat_apply(f, 0.2);
  CHECK(a.mass() == doctest::Approx(f.mass()).epsilon(1e-14));
  const Field2D b = heat_apply(heat_apply(f, 0.05), 0.15);
  CHECK((a - b).max_abs() < 1e-15 * 100 * a.max_abs());

  // narrow unit bump: sup -> 1/(4 pi t) as the bump width -> 0
  const Grid2D fine = grid(256, 4.0);
  const double t = 0.1;
  double prev_gap = 1.0;
  for (double eps : {0.02, 0.005, 0.001}) {
    const Field2D bump = Field2D::from_function(fine, [eps](double x, double y) { return gaussian(x, y, eps); });
    const Field2D h = heat_apply(bump * (1.0 / bump.mass()), t);
    const double gap = std::abs(h.max() * 4.0 * kPi * t - 1.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 0.011);
}

TEST_CASE("Gagliardo-Nirenberg ratio stays bounded") {
  // ||f||_3^3 <= C ||f||_1 ||grad f||_2^2 in 2D; the ratio is dilation invariant.
  const Grid2D g = grid(256, 8.0);
  double lo = 1e300, hi = 0.0;
  for (double t : {0.1, 0.3, 1.0})
    for (double shift : {0.0, 1.0}) {
      const Field2D f = Field2D::from_function(g, [&](double x, double y) {
        return gaussian(x - shift, y, t) + 0.3 * gaussian(x + shift, y + 0.5, 0.5 * t);
      });
      const Field2D fx = spectral_dx(f), fy = spectral_dy(f);
      const double grad2 = std::pow(norm_lpm(fx, {2, 0}), 2) + std::pow(norm_lpm(fy, {2, 0}), 2);
      const double ratio = std::pow(norm_lpm(f, {3, 0}), 3) / (norm_lpm(f, {1, 0}) * grad2);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  CHECK(std::isfinite(hi));
  CHECK(hi / lo < 10.0);
}

TEST_CASE("field serialization is bit exact") {
  const Grid2D g{32, 2.5, {0.25, -1.0}};
  const Field2D f = Field2D::from_function(g, [](double x, double y) { return std::sin(3 * x) * std::exp(y) / 7.0; });
  std::stringstream bin;
  write_field_binary(f, bin);
  const Field2D fb = read_field_binary(bin);
  std::stringstream csv;
  write_field_csv(f, csv);
  const Field2D fc = read_field_csv(csv);
  CHECK(fb.grid() == g);
  CHECK(fc.grid() == g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(fb.values()[i] == f.values()[i]);
    CHECK(fc.values()[i] == f.values()[i]);
  }
  std::stringstream broken("{\"n\": 32");
  CHECK_THROWS_AS(read_field_binary(broken), IoError);
}

TEST_CASE("trigonometric evaluation reproduces grid samples") {
  const Grid2D g = grid(64, 10.0);
  const Field2D f = Field2D::from_function(g, [](double x, double y) { return gaussian(x - 0.3, y, 0.8); });
  std::vector<double> xs, ys;
  for (int i = 0; i < g.n; ++i) {
    xs.push_back(g.x(i));
    ys.push_back(g.y(i));
  }
  const Field2D same = evaluate_trigonometric(f, g, xs, ys);
  CHECK((same - f).max_abs() < 1e-14);
  // off-grid points: spectral accuracy for a resolved Gaussian
  std::vector<double> off(16), offy(16);
  for (int i = 0; i < 16; ++i) {
    off[i] = -2.9 + 0.371 * i;
    offy[i] = 1.3 - 0.213 * i;
  }
  const Field2D e = evaluate_trigonometric(f, Grid2D{16, 1.0, {}}, off, offy);
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < 16; ++i)
      CHECK(std::abs(e(i, j) - gaussian(off[i] - 0.3, offy[j], 0.8)) < 1e-10);
}
