#include "pkslab/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

// Boost 1.74 pchip calls isnan unqualified.
#include <math.h>
#include <boost/math/interpolators/cardinal_quintic_b_spline.hpp>
#include <boost/math/interpolators/pchip.hpp>

namespace pkslab {

void ProfileOptions::validate() const {
  if (!(r_max > 0.0) || points < 64) throw InvalidArgument("profile grid needs r_max > 0 and >= 64 points");
  if (!(tol > 0.0) || max_iter < 1) throw InvalidArgument("profile tolerance and iteration cap must be positive");
  if (!(theta > 0.0 && theta <= 1.0)) throw InvalidArgument("damping theta must lie in (0, 1]");
}

double SelfSimilarProfile::second_moment() const { return radial_moment(G_field(), 2); }

double SelfSimilarProfile::virial_error() const {
  const double exact = 4.0 * alpha * (1.0 - alpha / kCriticalMass);
  return std::abs(second_moment() - exact) / exact;
}

std::vector<double> SelfSimilarProfile::dG() const {
  std::vector<double> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = G[i] * (vG[i] - 0.5 * r[i]);
  return out;
}

namespace {

// alpha e^{c - r^2/4} / Z; the exponent is shifted by c(0) so nothing overflows.
// Returns Z for the unshifted potential.
double gibbs_map(double alpha, const std::vector<double>& r, const std::vector<double>& c,
                 std::vector<double>& out) {
  const double c0 = c.front();
  out.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = std::exp(c[i] - c0 - 0.25 * r[i] * r[i]);
  const double z_shifted = radial_mass({r, out});
  for (double& v : out) v *= alpha / z_shifted;
  return z_shifted * std::exp(c0);
}

double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    s = std::max(s, std::abs(b[i]));
  }
  return s > 0.0 ? d / s : d;
}

}  // namespace

SelfSimilarProfile solve_profile(double alpha, const ProfileOptions& opts) {
  opts.validate();
  if (!(alpha > 0.0 && alpha <= kMaxProfileMass)) {
    std::ostringstream msg;
    msg << "profile mass " << alpha << " outside (0, 7.9 pi]";
    throw OutOfRange(msg.str());
  }
  SelfSimilarProfile p;
  p.alpha = alpha;
  p.r = uniform_radial_nodes(opts.r_max, opts.points);
  const std::size_t N = p.r.size();
  p.G.resize(N);
  for (std::size_t i = 0; i < N; ++i) p.G[i] = alpha * standard_gaussian(p.r[i]);

  std::vector<double> target;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const RadialPotential pot = poisson_radial(p.G_field());
    gibbs_map(alpha, p.r, pot.potential.values, target);
    p.residual = sup_distance(p.G, target);
    p.iterations = it;
    if (!std::isfinite(p.residual)) throw NanDetected("profile iteration produced non-finite values");
    if (p.residual < opts.tol) break;
    for (std::size_t i = 0; i < N; ++i) p.G[i] = (1.0 - opts.theta) * p.G[i] + opts.theta * target[i];
    const double scale = alpha / radial_mass(p.G_field());
    for (double& v : p.G) v *= scale;
  }
  if (p.residual >= opts.tol) {
    std::ostringstream msg;
    msg << "profile alpha=" << alpha << " residual " << p.residual << " after " << opts.max_iter
        << " sweeps";
    throw NonConvergence(msg.str());
  }
  if (p.G.back() / p.G.front() > 1e-10) throw TailTruncation("profile tail not resolved at r_max");

  const RadialPotential pot = poisson_radial(p.G_field());
  p.c = pot.potential.values;
  p.vG = pot.derivative;
  p.Z = gibbs_map(alpha, p.r, p.c, target);
  return p;
}

double profile_l1_distance(const SelfSimilarProfile& a, const SelfSimilarProfile& b) {
  if (a.r != b.r) throw InvalidArgument("profiles live on different radial grids");
  std::vector<double> d(a.r.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(a.G[i] - b.G[i]);
  return radial_mass({a.r, d});
}

double profile_lipschitz(double alpha, double beta, const ProfileOptions& opts) {
  auto& cache = ProfileCache::global();
  return profile_l1_distance(*cache.get(alpha, opts), *cache.get(beta, opts));
}

RadialField zero_mode(double alpha, double h, const ProfileOptions& opts) {
  if (!(h > 0.0)) throw InvalidArgument("zero-mode step must be positive");
  auto& cache = ProfileCache::global();
  const auto hi = cache.get(alpha + h, opts);
  const auto lo = cache.get(alpha - h, opts);
  RadialField e{hi->r, std::vector<double>(hi->r.size())};
  for (std::size_t i = 0; i < e.size(); ++i) e.values[i] = (hi->G[i] - lo->G[i]) / (2.0 * h);
  return e;
}

RadialInterpolant::RadialInterpolant(std::vector<double> r, std::vector<double> f, Interpolation scheme,
                                     int parity) {
  const RadialField field{r, f};
  field.validate();
  r_max_ = r.back();
  if (scheme == Interpolation::monotone_cubic) {
    using boost::math::interpolators::pchip;
    // Radial profiles are even in r, so the slope at the origin is zero.
    auto spline = std::make_shared<pchip<std::vector<double>>>(std::move(r), std::move(f), 0.0);
    eval_ = [spline](double x) { return (*spline)(x); };
    return;
  }
  if (!field.uniform()) throw InvalidArgument("quintic spline needs uniform radial nodes");
  if (parity != 1 && parity != -1) throw InvalidArgument("parity must be +1 or -1");
  // mirror through the origin so the spline is smooth there
  const std::size_t N = f.size();
  std::vector<double> y(2 * N - 1);
  for (std::size_t i = 0; i < N; ++i) {
    y[N - 1 + i] = f[i];
    y[N - 1 - i] = parity * f[i];
  }
  const double h = r[1] - r[0];
  using boost::math::interpolators::cardinal_quintic_b_spline;
  const cardinal_quintic_b_spline<double> spline(y.data(), y.size(), -r_max_, h);
  // The B-spline costs ~250 ns per call, too slow for per-step velocity
  // fields. Tabulate it with slopes at a quarter of the node spacing and
  // evaluate cubic Hermite pieces; the error is far below the table's.
  struct Table {
    double step;
    std::vector<double> v, d;
  };
  auto tab = std::make_shared<Table>();
  const std::size_t M = 4 * (N - 1) + 1;
  tab->step = r_max_ / static_cast<double>(M - 1);
  tab->v.resize(M);
  tab->d.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double x = std::min(static_cast<double>(i) * tab->step, r_max_);
    tab->v[i] = spline(x);
    tab->d[i] = spline.prime(x);
  }
  eval_ = [tab](double x) {
    const double s = std::abs(x) / tab->step;
    const std::size_t last = tab->v.size() - 1;
    const std::size_t i = std::min(static_cast<std::size_t>(s), last - 1);
    const double u = s - static_cast<double>(i), h = tab->step;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * tab->v[i] + (u3 - 2 * u2 + u) * h * tab->d[i] + (3 * u2 - 2 * u3) * tab->v[i + 1] +
           (u3 - u2) * h * tab->d[i + 1];
  };
  if (parity == -1) {
    auto even = eval_;
    eval_ = [even](double x) { return x < 0.0 ? -even(-x) : even(x); };
  }
}

namespace {

std::vector<double> velocity_ratio(const SelfSimilarProfile& p) {
  std::vector<double> q(p.r.size());
  q[0] = -0.5 * p.G[0];
  for (std::size_t i = 1; i < q.size(); ++i) q[i] = p.vG[i] / p.r[i];
  return q;
}

}  // namespace

ProfileVelocity::ProfileVelocity(const SelfSimilarProfile& p)
    : q_(p.r, velocity_ratio(p), Interpolation::quintic_spline), alpha_(p.alpha), r_max_(p.r.back()) {}

double ProfileVelocity::operator()(double rho) const {
  return rho <= r_max_ ? q_(rho) : -alpha_ / (2.0 * kPi * rho * rho);
}

void add_sampled_profile(const SelfSimilarProfile& p, double t, Vec2 z, const Grid2D& grid,
                         std::vector<double>& values) {
  if (!(t > 0.0)) throw InvalidArgument("profile sampling time must be positive");
  grid.validate();
  if (values.size() != grid.size()) throw InvalidArgument("sample buffer does not match grid");
  // Radius beyond which the profile is below round-off relative to its peak.
  double r_cut = p.r.back();
  for (std::size_t i = 0; i < p.r.size(); ++i)
    if (p.G[i] < 1e-16 * p.G.front()) {
      r_cut = p.r[i];
      break;
    }
  const double s = std::sqrt(t);
  const double reach = r_cut * s;
  if (z.x - reach < grid.x(0) || z.x + reach > grid.x(grid.n - 1) || z.y - reach < grid.y(0) ||
      z.y + reach > grid.y(grid.n - 1)) {
    std::ostringstream msg;
    msg << "rescaled profile (alpha=" << p.alpha << ", t=" << t << ") leaves the box";
    throw SupportOverflow(msg.str());
  }
  const RadialInterpolant G(p.r, p.G);
  for (int iy = 0; iy < grid.n; ++iy) {
    const double dy = grid.y(iy) - z.y;
    for (int ix = 0; ix < grid.n; ++ix) {
      const double rho = std::hypot(grid.x(ix) - z.x, dy) / s;
      if (rho < r_cut) values[static_cast<std::size_t>(iy) * grid.n + ix] += G(rho) / t;
    }
  }
}

Field2D sample_profile(const SelfSimilarProfile& p, double t, Vec2 z, const Grid2D& grid) {
  std::vector<double> v(grid.size(), 0.0);
  add_sampled_profile(p, t, z, grid, v);
  return Field2D(grid, std::move(v));
}

nlohmann::json profile_header(const SelfSimilarProfile& p) {
  return {{"alpha", p.alpha},
          {"Z", p.Z},
          {"residual", p.residual},
          {"virial_error", p.virial_error()},
          {"iterations", p.iterations},
          {"points", p.r.size()},
          {"r_max", p.r.back()}};
}

void write_profile_csv(const SelfSimilarProfile& p, std::ostream& os) {
  os << profile_header(p).dump() << '\n' << "r,G,c,vG\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < p.r.size(); ++i)
    os << p.r[i] << ',' << p.G[i] << ',' << p.c[i] << ',' << p.vG[i] << '\n';
}

void save_profile(const SelfSimilarProfile& p, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path);
  write_profile_csv(p, os);
  std::ofstream js(path + ".json");
  if (!js) throw IoError("cannot open " + path + ".json");
  js << profile_header(p).dump(2) << '\n';
}

std::shared_ptr<const SelfSimilarProfile> ProfileCache::get(double alpha, const ProfileOptions& opts) {
  const Key key{alpha, opts.r_max, opts.points, opts.tol, opts.max_iter, opts.theta};
  {
    std::shared_lock lock(mutex_);
    if (auto it = table_.find(key); it != table_.end()) return it->second;
  }
  // Solve outside the lock; a racing duplicate solve is harmless and the
  // first insertion wins.
  auto p = std::make_shared<const SelfSimilarProfile>(solve_profile(alpha, opts));
  std::unique_lock lock(mutex_);
  return table_.emplace(key, std::move(p)).first->second;
}

ProfileCache& ProfileCache::global() {
  static ProfileCache cache;
  return cache;
}

}  // namespace pkslab
