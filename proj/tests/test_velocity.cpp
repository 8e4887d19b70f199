#include <cmath>

#include "doctest.h"
#include "pkslab/velocity.hpp"

using namespace pkslab;

namespace {

double oseen_speed(double alpha, double r, double t) {
  return alpha / (2.0 * kPi * r) * (1.0 - std::exp(-r * r / (4.0 * t)));
}

}  // namespace

TEST_CASE("Oseen vortex velocity") {
  const Grid2D g{256, 12.0, {}};
  const double alpha = 2.5, t = 0.5;
  const Field2D w = Field2D::from_function(
      g, [&](double x, double y) { return alpha / (4.0 * kPi * t) * std::exp(-(x * x + y * y) / (4.0 * t)); });
  const VelocityField v = velocity_nse(w);
  double err = 0.0, ref = 0.0;
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double x = g.x(ix), y = g.y(iy), r = std::hypot(x, y);
      if (r == 0.0 || r > 6.0) continue;
      const double s = oseen_speed(alpha, r, t);
      err = std::max(err, std::hypot(v.vx(ix, iy) + s * y / r, v.vy(ix, iy) - s * x / r));
      ref = std::max(ref, s);
    }
  CHECK(err / ref <= 1e-8);
  // counterclockwise for positive circulation
  CHECK(v.vy(g.n / 2 + 10, g.n / 2) > 0.0);
}

TEST_CASE("chemotactic velocity points into the aggregate") {
  const Grid2D g{256, 12.0, {}};
  const double m = 4.0 * kPi, t = 0.5;
  const Field2D u = Field2D::from_function(
      g, [&](double x, double y) { return m / (4.0 * kPi * t) * std::exp(-(x * x + y * y) / (4.0 * t)); });
  const VelocityField v = velocity_pks(u);
  const VelocityField w = velocity_nse(u);
  double err = 0.0;
  for (int iy = 0; iy < g.n; iy += 3)
    for (int ix = 0; ix < g.n; ix += 3) {
      const double x = g.x(ix), y = g.y(iy), r = std::hypot(x, y);
      if (r == 0.0 || r > 6.0) continue;
      err = std::max(err, std::abs(v.vx(ix, iy) + oseen_speed(m, r, t) * x / r));
      // rotating the Biot-Savart field by -90 degrees gives the gradient
      err = std::max(err, std::abs(v.vx(ix, iy) - w.vy(ix, iy) * -1.0));
    }
  CHECK(err <= 1e-8);
  CHECK(velocity(Model::pks, u).vx.values()[5] == v.vx.values()[5]);
}

TEST_CASE("Biot-Savart velocity is divergence free") {
  const Grid2D g{256, 12.0, {}};
  const Field2D w = Field2D::from_function(g, [](double x, double y) {
    return std::exp(-((x - 1) * (x - 1) + y * y)) - 0.7 * std::exp(-(x * x + (y - 1.2) * (y - 1.2)) / 0.6);
  });
  const VelocityField v = velocity_nse(w);
  CHECK(divergence(v).max_abs() <= 1e-10 * v.max_speed());
  const VelocityField c = velocity_pks(w);
  CHECK(norm_lpm(divergence(c) + w, {2.0, 0.0}) <= 1e-8 * norm_lpm(w, {2.0, 0.0}));
}

TEST_CASE("velocity laws are linear") {
  const Grid2D g{128, 10.0, {}};
  const Field2D a = Field2D::from_function(g, [](double x, double y) { return std::exp(-(x * x + 2 * y * y)); });
  const Field2D b = Field2D::from_function(g, [](double x, double y) { return x * std::exp(-(x * x + y * y)); });
  for (Model m : {Model::pks, Model::nse}) {
    const VelocityField s = velocity(m, a * 2.0 + b * -3.0);
    const VelocityField va = velocity(m, a), vb = velocity(m, b);
    CHECK((s.vx - (va.vx * 2.0 + vb.vx * -3.0)).max_abs() <= 1e-13 * s.max_speed() * 10);
    CHECK((s.vy - (va.vy * 2.0 + vb.vy * -3.0)).max_abs() <= 1e-13 * s.max_speed() * 10);
  }
  const VelocityField z = velocity_pks(Field2D::zeros(g));
  CHECK(z.max_speed() == 0.0);
}

TEST_CASE("far field is the point-vortex law") {
  const Grid2D g{256, 40.0, {}};
  const double alpha = 1.3;
  const Field2D w = Field2D::from_function(g, [&](double x, double y) {
    return alpha / (4.0 * kPi * 0.3) * std::exp(-((x - 0.5) * (x - 0.5) + y * y) / (1.2));
  });
  const VelocityField v = velocity_nse(w);
  // |x| = 18 from the center
  const int ix = g.n / 2 + static_cast<int>(std::lround(18.0 / g.spacing()));
  const double r = g.x(ix) - 0.5;
  CHECK(v.vy(ix, g.n / 2) == doctest::Approx(alpha / (2.0 * kPi * r)).epsilon(1e-6));
}

TEST_CASE("support overflow propagates") {
  const Grid2D g{64, 4.0, {}};
  const Field2D u = Field2D::from_function(g, [](double x, double) { return std::exp(-(x - 3) * (x - 3)); });
  CHECK_THROWS_AS(velocity_pks(u), SupportOverflow);
}
