#include "pkslab/velocity.hpp"

#include <algorithm>
#include <cmath>

namespace pkslab {

double VelocityField::max_speed() const {
  double m = 0.0;
  const auto a = vx.values(), b = vy.values();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::hypot(a[i], b[i]));
  return m;
}

VelocityField velocity_pks(const Field2D& u, double tail_tolerance) {
  PoissonResult p = solve_poisson(u, {tail_tolerance, false, true, true});
  return {std::move(p.dx), std::move(p.dy), std::move(p.laplacian)};
}

VelocityField velocity_nse(const Field2D& omega, double tail_tolerance) {
  // Psi = -c with -Delta c = omega, so grad^perp Psi = (-d_y Psi, d_x Psi) = (d_y c, -d_x c).
  PoissonResult p = solve_poisson(omega, {tail_tolerance, false, true});
  // d_x d_y c - d_y d_x c vanishes identically in Fourier space
  return {std::move(p.dy), p.dx * -1.0, Field2D::zeros(omega.grid())};
}

VelocityField velocity(Model model, const Field2D& density, double tail_tolerance) {
  return model == Model::pks ? velocity_pks(density, tail_tolerance) : velocity_nse(density, tail_tolerance);
}

Field2D divergence(const VelocityField& v) {
  if (!v.div.empty()) return v.div;
  return spectral_dx(v.vx) + spectral_dy(v.vy);
}

}  // namespace pkslab
