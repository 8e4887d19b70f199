#include "pkslab/energies.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/special_functions/laguerre.hpp>

namespace pkslab {

nlohmann::json EnergyReport::to_json() const {
  return {{"value", value}, {"entropy", entropy}, {"moment", moment}, {"interaction", interaction}, {"finite", finite}};
}

namespace {

constexpr double kEntropyFloor = 1e-30;

void check_density(const Field2D& w) {
  if (w.min() < -1e-10 * std::max(w.max(), 0.0)) {
    std::ostringstream msg;
    msg << "density has minimum " << w.min() << " against maximum " << w.max();
    throw NegativeDensity(msg.str());
  }
}

EnergyReport energy(const Field2D& w, bool with_moment) {
  check_density(w);
  EnergyReport e;
  if (w.max_abs() == 0.0) return e;
  const Grid2D& g = w.grid();
  const double area = g.cell_area();
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double v = w(ix, iy);
      if (v > kEntropyFloor) e.entropy += v * std::log(v);
      if (with_moment) {
        const double x = g.x(ix), y = g.y(iy);
        e.moment += 0.25 * std::max(v, 0.0) * (x * x + y * y);
      }
    }
  e.entropy *= area;
  e.moment *= area;
  const Field2D c = poisson_free_space(w);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += w.values()[i] * c.values()[i];
  e.interaction = -0.5 * s * area;
  e.value = e.entropy + e.moment + e.interaction;
  e.finite = std::isfinite(e.value);
  return e;
}

}  // namespace

EnergyReport free_energy_similarity(const Field2D& w) { return energy(w, true); }
EnergyReport free_energy_physical(const Field2D& u) { return energy(u, false); }

Field2D profile_on_grid(const SelfSimilarProfile& p, const Grid2D& grid) {
  const RadialInterpolant G(p.r, p.G, Interpolation::quintic_spline);
  return Field2D::from_function(grid, [&](double x, double y) { return G(std::hypot(x, y)); });
}

LinearizedEnergy linearized_energy(const Field2D& f, const SelfSimilarProfile& p, const EnergyFloor& cut) {
  const Grid2D& g = f.grid();
  const double scale = norm_lpm(f, {1.0, 0.0});
  if (scale == 0.0) return {};
  if (std::abs(f.mass()) > 1e-8 * scale) {
    std::ostringstream msg;
    msg << "perturbation has mass " << f.mass() << " (L1 " << scale << ")";
    throw MeanNotZero(msg.str());
  }
  const Field2D G = profile_on_grid(p, g);
  const ProfileVelocity Q(p);  // grad c_alpha = Q(rho) xi

  const double floor = cut.floor * p.G.front();
  const double fmax = f.max_abs();
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix)
      if (G(ix, iy) < floor && std::abs(f(ix, iy)) > cut.vanish * fmax) {
        std::ostringstream msg;
        msg << "perturbation " << f(ix, iy) << " where the profile is " << G(ix, iy) << " at (" << g.x(ix) << ", "
            << g.y(iy) << ")";
        throw DivisionUnderflow(msg.str());
      }
  PoissonResult pot = solve_poisson(f, {1e-8, true, true});
  const Field2D fx = spectral_dx(f), fy = spectral_dy(f);

  // Flux components below the derivative round-off carry no information but
  // get divided by G down to the floor, so they are dropped.
  const double noise = 1e-13 * std::max(fx.max_abs(), fy.max_abs());
  auto clip = [noise](double v) { return std::abs(v) < noise ? 0.0 : v; };

  const double area = g.cell_area();
  double quad = 0.0, inter = 0.0, diss = 0.0;
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double v = f(ix, iy), Gv = G(ix, iy);
      inter += v * pot.potential(ix, iy);
      if (Gv < floor) continue;
      const double x = g.x(ix), y = g.y(iy);
      const double qv = Q(std::hypot(x, y)) - 0.5;  // grad log G = (q - 1/2) xi
      const double jx = clip(fx(ix, iy) - v * qv * x - Gv * pot.dx(ix, iy));
      const double jy = clip(fy(ix, iy) - v * qv * y - Gv * pot.dy(ix, iy));
      quad += v * v / Gv;
      diss += (jx * jx + jy * jy) / Gv;
    }
  return {0.5 * (quad - inter) * area, diss * area};
}

std::vector<BasisFunction> coercivity_basis(const SelfSimilarProfile& p, int size, int max_mode) {
  if (size < 8) throw InvalidArgument("coercivity basis needs at least 8 functions per mode");
  if (max_mode < 0) throw InvalidArgument("max mode must be >= 0");
  std::vector<BasisFunction> out;
  const std::size_t N = p.r.size();
  for (int n = 0; n <= max_mode; ++n) {
    std::vector<BasisFunction> mode;
    for (int k = 0; k < size; ++k) {
      BasisFunction b{n, k, std::vector<double>(N)};
      for (std::size_t i = 0; i < N; ++i) {
        const double r = p.r[i];
        b.values[i] = p.G[i] * std::pow(r, n) * boost::math::laguerre(k, n, r * r / 4.0);
      }
      mode.push_back(std::move(b));
    }
    if (n == 0) {
      const double m0 = radial_mass({p.r, mode[0].values});
      for (int k = 1; k < size; ++k) {
        const double s = radial_mass({p.r, mode[k].values}) / m0;
        for (std::size_t i = 0; i < N; ++i) mode[k].values[i] -= s * mode[0].values[i];
      }
      mode.erase(mode.begin());
    }
    for (auto& b : mode) out.push_back(std::move(b));
  }
  return out;
}

CoercivityResult coercivity_constant(const SelfSimilarProfile& p, int size, int max_mode) {
  if (!(p.alpha > 0.0 && p.alpha < kCriticalMass)) throw OutOfRange("coercivity needs alpha in (0, 8 pi)");
  const auto basis = coercivity_basis(p, size, max_mode);
  const std::size_t N = p.r.size();
  CoercivityResult res;
  res.basis_size = static_cast<int>(basis.size());
  auto integrate = [&](const std::vector<double>& v) { return radial_mass({p.r, v}); };
  for (int n = 0; n <= max_mode; ++n) {
    std::vector<const BasisFunction*> mode;
    for (const auto& b : basis)
      if (b.n == n) mode.push_back(&b);
    const int m = static_cast<int>(mode.size());
    std::vector<std::vector<double>> psi;
    for (const auto* b : mode) psi.push_back(poisson_radial_mode(n, {p.r, b->values}).potential);
    Eigen::MatrixXd K(m, m), M(m, m);
    std::vector<double> tmp(N);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j) {
        for (std::size_t k = 0; k < N; ++k) tmp[k] = p.G[k] > 0.0 ? mode[i]->values[k] * mode[j]->values[k] / p.G[k] : 0.0;
        M(i, j) = M(j, i) = integrate(tmp);
        for (std::size_t k = 0; k < N; ++k) tmp[k] = 0.5 * (mode[i]->values[k] * psi[j][k] + mode[j]->values[k] * psi[i][k]);
        K(i, j) = K(j, i) = integrate(tmp);
      }
    for (int i = 0; i < m; ++i) res.element_quotients.push_back(K(i, i) / M(i, i));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenFailure("coercivity eigenproblem failed for mode " + std::to_string(n));
    res.per_mode.push_back(es.eigenvalues().maxCoeff());
  }
  res.C = *std::max_element(res.per_mode.begin(), res.per_mode.end());
  return res;
}

}  // namespace pkslab
