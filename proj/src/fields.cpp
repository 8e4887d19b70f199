#include "pkslab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "pkslab/spectral.hpp"

namespace pkslab {

using spectral::cplx;

// ---------------------------------------------------------------------------
// Grid2D / Field2D

void Grid2D::validate() const {
  if (n < 16 || (n & (n - 1)) != 0)
    throw InvalidArgument("grid size must be a power of two >= 16, got " + std::to_string(n));
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw InvalidArgument("grid half width must be positive");
  if (!std::isfinite(center.x) || !std::isfinite(center.y))
    throw InvalidArgument("grid center must be finite");
}

Field2D::Field2D(Grid2D grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.size())
    throw InvalidArgument("field sample count does not match grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw NanDetected("field contains non-finite samples");
}

Field2D Field2D::zeros(const Grid2D& grid) {
  return Field2D(grid, std::vector<double>(grid.size(), 0.0));
}

Field2D Field2D::from_function(const Grid2D& grid,
                               const std::function<double(double, double)>& f) {
  grid.validate();
  std::vector<double> v(grid.size());
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = 0; ix < grid.n; ++ix)
      v[static_cast<std::size_t>(iy) * grid.n + ix] = f(grid.x(ix), grid.y(iy));
  return Field2D(grid, std::move(v));
}

double Field2D::mass() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s * grid_.cell_area();
}

double Field2D::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field2D::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field2D::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Field2D Field2D::operator+(const Field2D& other) const {
  if (!(grid_ == other.grid_)) throw InvalidArgument("field grids differ");
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += other.values_[i];
  return Field2D(grid_, std::move(v));
}

Field2D Field2D::operator-(const Field2D& other) const {
  if (!(grid_ == other.grid_)) throw InvalidArgument("field grids differ");
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= other.values_[i];
  return Field2D(grid_, std::move(v));
}

Field2D Field2D::operator*(double s) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= s;
  return Field2D(grid_, std::move(v));
}

// ---------------------------------------------------------------------------
// RadialField

void RadialField::validate() const {
  if (nodes.size() < 2) throw InvalidArgument("radial field needs at least two nodes");
  if (nodes.size() != values.size()) throw InvalidArgument("radial nodes/values size mismatch");
  if (nodes.front() != 0.0) throw InvalidArgument("radial nodes must start at r = 0");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw InvalidArgument("radial nodes must be strictly increasing");
  for (double v : values)
    if (!std::isfinite(v)) throw NanDetected("radial field contains non-finite samples");
}

bool RadialField::uniform() const {
  if (nodes.size() < 4 || nodes.front() != 0.0) return false;
  const double h = nodes[1] - nodes[0];
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (std::abs(nodes[i] - i * h) > 1e-9 * h * nodes.size()) return false;
  return true;
}

std::vector<double> uniform_radial_nodes(double r_max, int points) {
  if (points < 4 || !(r_max > 0.0)) throw InvalidArgument("need >= 4 radial points and r_max > 0");
  std::vector<double> r(points);
  for (int i = 0; i < points; ++i) r[i] = r_max * i / (points - 1);
  return r;
}

// ---------------------------------------------------------------------------
// Norms

void WeightedNormSpec::validate() const {
  if (!(p >= 1.0)) throw InvalidArgument("norm exponent must be >= 1");
  if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidArgument("weight exponent must be >= 0");
}

double norm_lpm(const Field2D& f, const WeightedNormSpec& spec) {
  spec.validate();
  const Grid2D& g = f.grid();
  const bool sup = std::isinf(spec.p);
  double acc = 0.0;
  for (int iy = 0; iy < g.n; ++iy) {
    const double y = g.y(iy);
    for (int ix = 0; ix < g.n; ++ix) {
      const double x = g.x(ix);
      const double w = spec.m == 0.0 ? 1.0 : std::pow(1.0 + x * x + y * y, 0.5 * spec.m);
      const double v = std::abs(w * f(ix, iy));
      if (sup)
        acc = std::max(acc, v);
      else
        acc += std::pow(v, spec.p);
    }
  }
  if (sup) return acc;
  return std::pow(acc * g.cell_area(), 1.0 / spec.p);
}

double norm_lpm(const RadialField& f, const WeightedNormSpec& spec) {
  spec.validate();
  f.validate();
  if (std::isinf(spec.p)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double r = f.nodes[i];
      acc = std::max(acc, std::pow(1.0 + r * r, 0.5 * spec.m) * std::abs(f.values[i]));
    }
    return acc;
  }
  RadialField integrand{f.nodes, std::vector<double>(f.size())};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = f.nodes[i];
    integrand.values[i] = std::pow(std::pow(1.0 + r * r, 0.5 * spec.m) * std::abs(f.values[i]), spec.p);
  }
  return std::pow(radial_mass(integrand), 1.0 / spec.p);
}

// ---------------------------------------------------------------------------
// Radial quadrature

std::vector<double> cumulative_integral(std::span<const double> F, double h, int parity) {
  const std::size_t n = F.size();
  std::vector<double> I(n, 0.0);
  if (n < 4) {
    for (std::size_t i = 1; i < n; ++i) I[i] = I[i - 1] + 0.5 * h * (F[i - 1] + F[i]);
    return I;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double piece;
    if (i + 2 < n) {
      const double left = i == 0 ? parity * F[1] : F[i - 1];
      piece = h / 24.0 * (-left + 13.0 * F[i] + 13.0 * F[i + 1] - F[i + 2]);
    } else {
      piece = h / 24.0 * (F[i - 2] - 5.0 * F[i - 1] + 19.0 * F[i] + 9.0 * F[i + 1]);
    }
    I[i + 1] = I[i] + piece;
  }
  return I;
}

std::vector<double> cumulative_trapezoid(std::span<const double> F,
                                         std::span<const double> nodes) {
  std::vector<double> I(F.size(), 0.0);
  for (std::size_t i = 1; i < F.size(); ++i)
    I[i] = I[i - 1] + 0.5 * (nodes[i] - nodes[i - 1]) * (F[i - 1] + F[i]);
  return I;
}

namespace {

// int_0^{r_i} F for F with the given parity, choosing the quadrature by grid.
std::vector<double> cumulative(const RadialField& shape, std::span<const double> F, int parity) {
  if (shape.uniform()) return cumulative_integral(F, shape.spacing(), parity);
  return cumulative_trapezoid(F, shape.nodes);
}

}  // namespace

double radial_moment(const RadialField& f, int k) {
  f.validate();
  std::vector<double> F(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) F[i] = f.values[i] * std::pow(f.nodes[i], k + 1);
  const int parity = (k + 1) % 2 == 0 ? 1 : -1;
  return 2.0 * kPi * cumulative(f, F, parity).back();
}

double radial_mass(const RadialField& f) { return radial_moment(f, 0); }

// ---------------------------------------------------------------------------
// Radial Poisson

RadialPotential poisson_radial(const RadialField& g) {
  g.validate();
  const std::size_t n = g.size();
  std::vector<double> F(n);
  for (std::size_t i = 0; i < n; ++i) F[i] = g.values[i] * g.nodes[i];
  std::vector<double> M = cumulative(g, F, -1);
  for (double& m : M) m *= 2.0 * kPi;

  std::vector<double> dc(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) dc[i] = -M[i] / (2.0 * kPi * g.nodes[i]);
  const std::vector<double> C = cumulative(g, dc, -1);
  const double r_end = g.nodes.back();
  const double c_end = -M.back() / (2.0 * kPi) * std::log(r_end);
  RadialPotential out;
  out.potential.nodes = g.nodes;
  out.potential.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.potential.values[i] = c_end - (C.back() - C[i]);
  out.derivative = std::move(dc);
  out.enclosed_mass = std::move(M);
  return out;
}

ModePotential poisson_radial_mode(int n, const RadialField& f) {
  if (n < 0) throw InvalidArgument("angular mode must be >= 0");
  if (n == 0) {
    RadialPotential p = poisson_radial(f);
    return {std::move(p.potential.values), std::move(p.derivative)};
  }
  f.validate();
  const std::size_t N = f.size();
  std::vector<double> Fin(N), Fout(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double r = f.nodes[i];
    Fin[i] = std::pow(r, n + 1) * f.values[i];
    // s^(1-n) f(s) -> 0 at the origin for a regular mode-n function.
    Fout[i] = r > 0.0 ? std::pow(r, 1 - n) * f.values[i] : 0.0;
  }
  const std::vector<double> Iin = cumulative(f, Fin, -1);
  const std::vector<double> J = cumulative(f, Fout, -1);
  ModePotential out;
  out.potential.assign(N, 0.0);
  out.derivative.assign(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const double r = f.nodes[i];
    const double Iout = J.back() - J[i];
    if (r == 0.0) {
      out.derivative[i] = n == 1 ? 0.5 * Iout : 0.0;
      continue;
    }
    out.potential[i] = (std::pow(r, -n) * Iin[i] + std::pow(r, n) * Iout) / (2.0 * n);
    out.derivative[i] = 0.5 * (-std::pow(r, -n - 1) * Iin[i] + std::pow(r, n - 1) * Iout);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Free-space Poisson on the doubled domain

namespace {

// Ratio of the truncation radius to L. Sources live in [-L/2, L/2]^2, so
// source-target separations stay below 1.5*sqrt(2)*L ~ 2.12 L while the
// nearest periodic image on the 4L doubled period sits beyond 2.5 L.
constexpr double kTruncationRatio = 2.3;

// Fourier transform of -(1/2pi) log|x| restricted to |x| < R.
double truncated_log_kernel_hat(double k, double R) {
  const double x = k * R;
  if (x < 1e-6) {
    return R * R / 4.0 - R * R * std::log(R) / 2.0 +
           k * k * (std::pow(R, 4) * std::log(R) / 16.0 - std::pow(R, 4) / 64.0);
  }
  return (1.0 - std::cyl_bessel_j(0.0, x)) / (k * k) - R * std::log(R) * std::cyl_bessel_j(1.0, x) / k;
}

struct KernelTable {
  std::vector<double> hat;
  std::vector<double> kx, ky;  // odd-derivative wavenumbers on the doubled grid
};

const KernelTable& kernel_table(int n, double L) {
  thread_local std::map<std::pair<int, double>, KernelTable> cache;
  const auto key = std::make_pair(n, L);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const int m = 2 * n;
  const int half = m / 2 + 1;
  const double period = 4.0 * L;
  const double R = kTruncationRatio * L;
  KernelTable t;
  t.kx = spectral::wavenumbers(m, period, true, true);
  t.ky = spectral::wavenumbers(m, period, false, true);
  const auto kx_full = spectral::wavenumbers(m, period, true, false);
  const auto ky_full = spectral::wavenumbers(m, period, false, false);
  t.hat.resize(static_cast<std::size_t>(m) * half);
  for (int iy = 0; iy < m; ++iy)
    for (int ix = 0; ix < half; ++ix) {
      const double k = std::hypot(kx_full[ix], ky_full[iy]);
      t.hat[static_cast<std::size_t>(iy) * half + ix] = truncated_log_kernel_hat(k, R);
    }
  return cache.emplace(key, std::move(t)).first->second;
}

Field2D crop(const Grid2D& g, const std::vector<double>& padded) {
  const int n = g.n, m = 2 * n;
  std::vector<double> v(g.size());
  for (int iy = 0; iy < n; ++iy)
    std::copy_n(padded.begin() + static_cast<std::ptrdiff_t>(iy) * m, n,
                v.begin() + static_cast<std::ptrdiff_t>(iy) * n);
  return Field2D(g, std::move(v));
}

}  // namespace

double tail_fraction(const Field2D& u) {
  const Grid2D& g = u.grid();
  double total = 0.0, outside = 0.0;
  const double q = 0.5 * g.half_width;
  for (int iy = 0; iy < g.n; ++iy) {
    const double dy = std::abs(g.y(iy) - g.center.y);
    for (int ix = 0; ix < g.n; ++ix) {
      const double dx = std::abs(g.x(ix) - g.center.x);
      const double a = std::abs(u(ix, iy));
      total += a;
      if (dx > q || dy > q) outside += a;
    }
  }
  return total > 0.0 ? outside / total : 0.0;
}

PoissonResult solve_poisson(const Field2D& u, const PoissonOptions& opts) {
  const Grid2D& g = u.grid();
  const double tail = tail_fraction(u);
  if (tail > opts.tail_tolerance) {
    std::ostringstream msg;
    msg << "mass fraction " << tail << " outside the central half box exceeds " << opts.tail_tolerance;
    throw SupportOverflow(msg.str());
  }
  const int n = g.n, m = 2 * n, half = m / 2 + 1;
  const KernelTable& table = kernel_table(n, g.half_width);
  spectral::Fft2D& fft = spectral::fft(m);

  std::vector<double> padded(static_cast<std::size_t>(m) * m, 0.0);
  const auto src = u.values();
  for (int iy = 0; iy < n; ++iy)
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(iy) * n, n,
                padded.begin() + static_cast<std::ptrdiff_t>(iy) * m);
  // Samples times cell area approximate the continuous transform; the inverse
  // transform supplies 1/(m^2) and the period^2 / (m h)^2 factors cancel.
  std::vector<cplx> uhat(fft.spectral_size());
  fft.forward(padded, uhat);
  const double area = g.cell_area();
  const double period_area = 16.0 * g.half_width * g.half_width;
  const double scale = area * (static_cast<double>(m) * m) / period_area;
  for (std::size_t i = 0; i < uhat.size(); ++i) uhat[i] *= table.hat[i] * scale;

  PoissonResult out;
  std::vector<cplx> work(uhat.size());
  if (opts.potential) {
    fft.inverse(uhat, padded);
    out.potential = crop(g, padded);
  }
  if (opts.gradient) {
    for (int iy = 0; iy < m; ++iy)
      for (int ix = 0; ix < half; ++ix) {
        const std::size_t k = static_cast<std::size_t>(iy) * half + ix;
        work[k] = cplx(0.0, table.kx[ix]) * uhat[k];
      }
    fft.inverse(work, padded);
    out.dx = crop(g, padded);
    for (int iy = 0; iy < m; ++iy)
      for (int ix = 0; ix < half; ++ix) {
        const std::size_t k = static_cast<std::size_t>(iy) * half + ix;
        work[k] = cplx(0.0, table.ky[iy]) * uhat[k];
      }
    fft.inverse(work, padded);
    out.dy = crop(g, padded);
  }
  if (opts.laplacian) {
    // divergence of the gradient in the same doubled-domain calculus
    for (int iy = 0; iy < m; ++iy)
      for (int ix = 0; ix < half; ++ix) {
        const std::size_t k = static_cast<std::size_t>(iy) * half + ix;
        work[k] = -(table.kx[ix] * table.kx[ix] + table.ky[iy] * table.ky[iy]) * uhat[k];
      }
    fft.inverse(work, padded);
    out.laplacian = crop(g, padded);
  }
  return out;
}

Field2D poisson_free_space(const Field2D& u, double tail_tolerance) {
  PoissonOptions opts;
  opts.tail_tolerance = tail_tolerance;
  return solve_poisson(u, opts).potential;
}

// ---------------------------------------------------------------------------
// Periodic spectral operators

namespace {

template <class Multiplier>
Field2D apply_multiplier(const Field2D& f, Multiplier&& mult) {
  const Grid2D& g = f.grid();
  const int n = g.n, half = n / 2 + 1;
  spectral::Fft2D& fft = spectral::fft(n);
  std::vector<cplx> hat(fft.spectral_size());
  fft.forward(f.values(), hat);
  const double period = 2.0 * g.half_width;
  const auto kx = spectral::wavenumbers(n, period, true, false);
  const auto ky = spectral::wavenumbers(n, period, false, false);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < half; ++ix) {
      const std::size_t k = static_cast<std::size_t>(iy) * half + ix;
      hat[k] *= mult(ix, iy, kx[ix], ky[iy]);
    }
  std::vector<double> out(g.size());
  fft.inverse(hat, out);
  return Field2D(g, std::move(out));
}

}  // namespace

Field2D heat_apply(const Field2D& f, double t) {
  if (!(t > 0.0)) throw InvalidArgument("heat time must be positive");
  return apply_multiplier(f, [t](int, int, double kx, double ky) {
    return cplx(std::exp(-t * (kx * kx + ky * ky)), 0.0);
  });
}

Field2D spectral_dx(const Field2D& f) {
  const int n = f.n();
  return apply_multiplier(f, [n](int ix, int, double kx, double) {
    return ix == n / 2 ? cplx(0.0) : cplx(0.0, kx);
  });
}

Field2D spectral_dy(const Field2D& f) {
  const int n = f.n();
  return apply_multiplier(f, [n](int, int iy, double, double ky) {
    return iy == n / 2 ? cplx(0.0) : cplx(0.0, ky);
  });
}

Field2D spectral_laplacian(const Field2D& f) {
  return apply_multiplier(f, [](int, int, double kx, double ky) {
    return cplx(-(kx * kx + ky * ky), 0.0);
  });
}

Field2D fd_laplacian(const Field2D& f) {
  static constexpr double c[5] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
  const Grid2D& g = f.grid();
  const int n = g.n;
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  std::vector<double> out(g.size(), 0.0);
  for (int iy = 4; iy < n - 4; ++iy)
    for (int ix = 4; ix < n - 4; ++ix) {
      double s = 2.0 * c[0] * f(ix, iy);
      for (int k = 1; k <= 4; ++k)
        s += c[k] * (f(ix + k, iy) + f(ix - k, iy) + f(ix, iy + k) + f(ix, iy - k));
      out[static_cast<std::size_t>(iy) * n + ix] = s * inv_h2;
    }
  return Field2D(g, std::move(out));
}

Field2D evaluate_trigonometric(const Field2D& f, const Grid2D& target,
                               std::span<const double> xs, std::span<const double> ys) {
  const Grid2D& g = f.grid();
  const int n = g.n;
  const double h = g.spacing();
  const double lo_x = g.center.x - g.half_width, lo_y = g.center.y - g.half_width;
  // Periodic interpolation kernel for even n, Nyquist mode split symmetrically.
  auto kernel = [n, h](double d) {
    const double theta = kPi * d / (n * h);
    const double t = std::tan(theta);
    if (std::abs(t) < 1e-300) return 1.0;
    return std::sin(kPi * d / h) / (n * t);
  };
  auto matrix = [&](std::span<const double> pts, double lo) {
    std::vector<double> A(pts.size() * n, 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i] < lo || pts[i] >= lo + 2.0 * g.half_width) continue;
      for (int j = 0; j < n; ++j) A[i * n + j] = kernel(pts[i] - (lo + j * h));
    }
    return A;
  };
  const std::vector<double> Ax = matrix(xs, lo_x);
  const std::vector<double> Ay = matrix(ys, lo_y);
  const std::size_t nx = xs.size(), ny = ys.size();
  // tmp(iy, i) = sum_j f(j, iy) Ax(i, j)
  std::vector<double> tmp(static_cast<std::size_t>(n) * nx, 0.0);
  const auto v = f.values();
  for (int iy = 0; iy < n; ++iy)
    for (std::size_t i = 0; i < nx; ++i) {
      double s = 0.0;
      const double* row = &Ax[i * n];
      const double* fr = &v[static_cast<std::size_t>(iy) * n];
      for (int j = 0; j < n; ++j) s += row[j] * fr[j];
      tmp[static_cast<std::size_t>(iy) * nx + i] = s;
    }
  std::vector<double> out(nx * ny, 0.0);
  for (std::size_t jy = 0; jy < ny; ++jy) {
    const double* row = &Ay[jy * n];
    for (int iy = 0; iy < n; ++iy) {
      const double a = row[iy];
      if (a == 0.0) continue;
      const double* t = &tmp[static_cast<std::size_t>(iy) * nx];
      double* o = &out[jy * nx];
      for (std::size_t i = 0; i < nx; ++i) o[i] += a * t[i];
    }
  }
  return Field2D(target, std::move(out));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json header_json(const Grid2D& g, const char* encoding) {
  return {{"n", g.n},
          {"half_width", g.half_width},
          {"center", {g.center.x, g.center.y}},
          {"encoding", encoding}};
}

Grid2D grid_from_header(const nlohmann::json& h) {
  Grid2D g;
  g.n = h.at("n").get<int>();
  g.half_width = h.at("half_width").get<double>();
  g.center = {h.at("center").at(0).get<double>(), h.at("center").at(1).get<double>()};
  g.validate();
  return g;
}

nlohmann::json read_header(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("missing field header");
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed field header: ") + e.what());
  }
}

}  // namespace

void write_field_binary(const Field2D& f, std::ostream& os) {
  os << header_json(f.grid(), "f64le").dump() << '\n';
  const auto v = f.values();
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!os) throw IoError("failed writing binary field payload");
}

Field2D read_field_binary(std::istream& is) {
  const auto h = read_header(is);
  const Grid2D g = grid_from_header(h);
  std::vector<double> v(g.size());
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw IoError("truncated binary field payload");
  return Field2D(g, std::move(v));
}

void write_field_csv(const Field2D& f, std::ostream& os) {
  os << header_json(f.grid(), "csv").dump() << '\n';
  char buf[32];
  for (int iy = 0; iy < f.n(); ++iy) {
    for (int ix = 0; ix < f.n(); ++ix) {
      std::snprintf(buf, sizeof buf, "%.17g", f(ix, iy));
      if (ix) os << ',';
      os << buf;
    }
    os << '\n';
  }
  if (!os) throw IoError("failed writing csv field");
}

Field2D read_field_csv(std::istream& is) {
  const auto h = read_header(is);
  const Grid2D g = grid_from_header(h);
  std::vector<double> v;
  v.reserve(g.size());
  std::string line;
  while (std::getline(is, line)) {
    std::size_t pos = 0;
    while (pos < line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      v.push_back(std::strtod(line.c_str() + pos, nullptr));
      pos = next + 1;
    }
  }
  if (v.size() != g.size()) throw IoError("csv field has wrong number of samples");
  return Field2D(g, std::move(v));
}

void save_field(const Field2D& f, const std::string& path) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  std::ofstream os(path, csv ? std::ios::out : std::ios::out | std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  if (csv)
    write_field_csv(f, os);
  else
    write_field_binary(f, os);
}

Field2D load_field(const std::string& path) {
  std::ifstream is(path, std::ios::in | std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  const auto pos = is.tellg();
  const auto h = read_header(is);
  is.seekg(pos);
  if (h.value("encoding", "f64le") == "csv") return read_field_csv(is);
  return read_field_binary(is);
}

}  // namespace pkslab
