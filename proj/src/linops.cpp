#include "pkslab/linops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/bessel.hpp>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>

namespace pkslab {

std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::linearized: return "linearized";
    case OperatorKind::confined_fp: return "confined_fp";
    case OperatorKind::fokker_planck: return "fokker_planck";
  }
  return "unknown";
}

OperatorKind operator_kind_from_string(const std::string& s) {
  if (s == "linearized") return OperatorKind::linearized;
  if (s == "confined_fp") return OperatorKind::confined_fp;
  if (s == "fokker_planck") return OperatorKind::fokker_planck;
  throw InvalidArgument("unknown operator kind '" + s + "'");
}

std::vector<double> default_mode_nodes(int points, double r_max) {
  return uniform_radial_nodes(r_max, points);
}

std::vector<double> aligned_mode_nodes(const SelfSimilarProfile& p, double r_max, int stride) {
  if (stride < 1) throw InvalidArgument("node stride must be positive");
  std::vector<double> r;
  for (std::size_t i = 0; i < p.r.size() && p.r[i] <= r_max; i += stride) r.push_back(p.r[i]);
  return r;
}

namespace {

constexpr double kD1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
constexpr double kD2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

// Profile data on the operator nodes.
struct Coefficients {
  std::vector<double> G, vG, dG;
};

Coefficients coefficients(OperatorKind kind, const SelfSimilarProfile* p, const std::vector<double>& r) {
  Coefficients c;
  c.G.resize(r.size());
  c.vG.assign(r.size(), 0.0);
  c.dG.assign(r.size(), 0.0);
  if (kind == OperatorKind::fokker_planck) {
    for (std::size_t i = 0; i < r.size(); ++i) c.G[i] = standard_gaussian(r[i]);
    return c;
  }
  if (r.back() > p->r.back()) throw InvalidArgument("operator nodes extend past the profile table");
  const RadialInterpolant G(p->r, p->G, Interpolation::quintic_spline);
  const RadialInterpolant vG(p->r, p->vG, Interpolation::quintic_spline, -1);
  for (std::size_t i = 0; i < r.size(); ++i) {
    c.G[i] = G(r[i]);
    c.vG[i] = vG(r[i]);
    c.dG[i] = c.G[i] * (c.vG[i] - 0.5 * r[i]);
  }
  return c;
}

// Columns of the cumulative quadrature matrix for odd integrands.
Eigen::MatrixXd cumulative_matrix(std::size_t N, double h) {
  Eigen::MatrixXd Q(N, N);
  std::vector<double> e(N, 0.0);
  for (std::size_t j = 0; j < N; ++j) {
    e[j] = 1.0;
    const std::vector<double> col = cumulative_integral(e, h, -1);
    for (std::size_t i = 0; i < N; ++i) Q(i, j) = col[i];
    e[j] = 0.0;
  }
  return Q;
}

// d psi / dr at every node as a linear map of f on every node, where psi is
// the mode-n potential with -Delta(psi e^{in theta}) = f e^{in theta}.
Eigen::MatrixXd mode_potential_slope(int n, const std::vector<double>& r) {
  const std::size_t N = r.size();
  const Eigen::MatrixXd Q = cumulative_matrix(N, r[1] - r[0]);
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t j = 1; j < N; ++j) {
    const double in = std::pow(r[j], n + 1);
    const double out = std::pow(r[j], 1 - n);
    for (std::size_t i = 1; i < N; ++i) {
      if (n == 0) {
        W(i, j) = -Q(i, j) * in / r[i];
      } else {
        W(i, j) = 0.5 * (-std::pow(r[i], -n - 1) * Q(i, j) * in +
                         std::pow(r[i], n - 1) * (Q(N - 1, j) - Q(i, j)) * out);
      }
    }
  }
  return W;
}

}  // namespace

ModeOperator assemble(OperatorKind kind, int n, const SelfSimilarProfile* p,
                      const std::vector<double>& nodes) {
  if (n < 0) throw InvalidArgument("angular mode must be >= 0");
  if (nodes.size() < 256) throw InvalidArgument("mode operator needs at least 256 radial nodes");
  RadialField probe{nodes, std::vector<double>(nodes.size(), 0.0)};
  probe.validate();
  if (!probe.uniform()) throw InvalidArgument("mode operator needs uniform nodes");
  if (kind != OperatorKind::fokker_planck && p == nullptr)
    throw InvalidArgument("operator kind " + to_string(kind) + " needs a profile");

  ModeOperator op;
  op.kind = kind;
  op.n = n;
  op.alpha = kind == OperatorKind::fokker_planck ? 0.0 : p->alpha;
  op.nodes = nodes;
  op.boundary = n == 0 ? "regular origin, Dirichlet at r_max (odd reflection)"
                       : "f(0) = 0, Dirichlet at r_max (odd reflection)";
  const int N = static_cast<int>(nodes.size());
  const int last = N - 1;
  const double h = nodes[1];
  const Coefficients co = coefficients(kind, p, nodes);

  std::vector<int> column(N, -1);
  for (int i = (n == 0 ? 0 : 1); i < last; ++i) {
    column[i] = static_cast<int>(op.unknowns.size());
    op.unknowns.push_back(i);
  }
  const int M = static_cast<int>(op.unknowns.size());
  op.matrix = Eigen::MatrixXd::Zero(M, M);
  op.balance.resize(M);
  for (int k = 0; k < M; ++k) op.balance[k] = std::sqrt(co.G[op.unknowns[k]]);

  const double parity = (n % 2 == 0) ? 1.0 : -1.0;
  // Adds coef * f(node j) to the row, folding ghosts and boundary values.
  auto add = [&](int row, int j, double coef) {
    double sign = 1.0;
    if (j < 0) {
      j = -j;
      sign = parity;
    } else if (j > last) {
      j = 2 * last - j;
      sign = -1.0;
    }
    if (column[j] < 0) return;
    op.matrix(row, column[j]) += sign * coef;
  };

  const double growth = kind == OperatorKind::linearized ? 2.0 : (kind == OperatorKind::confined_fp ? 1.0 : 0.0);
  for (int k = 0; k < M; ++k) {
    const int i = op.unknowns[k];
    const double r = nodes[i];
    if (i == 0) {
      // Delta f -> 2 f'' at a regular origin; the drift terms vanish there.
      for (int d = -2; d <= 2; ++d) add(k, i + d, 2.0 * kD2[d + 2] / (h * h));
      op.matrix(k, k) += 1.0 + growth * co.G[i];
      continue;
    }
    const double a = 1.0 / r + 0.5 * r - co.vG[i];
    const double b = 1.0 + growth * co.G[i] - static_cast<double>(n * n) / (r * r);
    for (int d = -2; d <= 2; ++d) add(k, i + d, kD2[d + 2] / (h * h) + a * kD1[d + 2] / h);
    op.matrix(k, k) += b;
  }

  if (kind == OperatorKind::linearized) {
    const Eigen::MatrixXd W = mode_potential_slope(n, nodes);
    for (int k = 0; k < M; ++k) {
      const int i = op.unknowns[k];
      if (co.dG[i] == 0.0) continue;
      for (int l = 0; l < M; ++l) op.matrix(k, l) -= co.dG[i] * W(i, op.unknowns[l]);
    }
  }
  return op;
}

std::vector<double> ModeOperator::expand(const Eigen::VectorXd& v) const {
  std::vector<double> out(nodes.size(), 0.0);
  for (std::size_t k = 0; k < unknowns.size(); ++k) out[unknowns[k]] = v[static_cast<Eigen::Index>(k)];
  return out;
}

RadialField ModeOperator::apply(const RadialField& f) const {
  if (f.nodes != nodes) throw InvalidArgument("function is not sampled on the operator nodes");
  Eigen::VectorXd v(unknowns.size());
  for (std::size_t k = 0; k < unknowns.size(); ++k) v[static_cast<Eigen::Index>(k)] = f.values[unknowns[k]];
  return {nodes, expand(matrix * v)};
}

namespace {

double residual_of(const Eigen::MatrixXd& A, double normA, std::complex<double> l, const Eigen::VectorXcd& v) {
  const Eigen::VectorXcd r = A.cast<std::complex<double>>() * v - l * v;
  return r.norm() / (normA * v.norm());
}

double mass_fraction(const ModeOperator& op, const Eigen::VectorXcd& v) {
  std::complex<double> mass = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < op.unknowns.size(); ++k) {
    const double r = op.nodes[op.unknowns[k]];
    mass += r * v[static_cast<Eigen::Index>(k)];
    total += r * std::abs(v[static_cast<Eigen::Index>(k)]);
  }
  return total > 0.0 ? std::abs(mass) / total : 0.0;
}

nlohmann::json pair_json(const EigenPair& p) {
  return {{"value", {p.value.real(), p.value.imag()}},
          {"residual", p.residual},
          {"mass_fraction", p.mass_fraction}};
}

}  // namespace

namespace {

// Eigenvector for a known eigenvalue by shifted inverse iteration.
Eigen::VectorXcd inverse_iteration(const Eigen::MatrixXd& B, std::complex<double> l) {
  using cplx = std::complex<double>;
  const Eigen::Index M = B.rows();
  const double scale = std::max(1.0, std::abs(l));
  const cplx shift = l + cplx(1e-10 * scale, 1e-10 * scale);
  Eigen::MatrixXcd S = B.cast<cplx>();
  S.diagonal().array() -= shift;
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(S);
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(M);
  for (int it = 0; it < 3; ++it) {
    v = lu.solve(v);
    v /= v.norm();
  }
  return v;
}

}  // namespace

SpectrumReport spectrum(const ModeOperator& op, int count) {
  const Eigen::VectorXd& D = op.balance;
  const Eigen::MatrixXd B = D.cwiseInverse().asDiagonal() * op.matrix * D.asDiagonal();
  Eigen::EigenSolver<Eigen::MatrixXd> es(B, false);
  if (es.info() != Eigen::Success) throw EigenFailure("dense eigen-solver did not converge");

  const Eigen::VectorXcd values = es.eigenvalues();
  std::vector<Eigen::Index> order(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values[a].real() != values[b].real()) return values[a].real() > values[b].real();
    return values[a].imag() > values[b].imag();
  });

  SpectrumReport rep;
  rep.kind = op.kind;
  rep.n = op.n;
  rep.alpha = op.alpha;
  const std::size_t listed = count > 0 ? std::min<std::size_t>(count, order.size()) : order.size();
  for (std::size_t i = 0; i < listed; ++i) rep.eigenvalues.push_back(values[order[i]]);

  const double normA = op.matrix.norm();
  auto make_pair = [&](Eigen::Index idx) {
    EigenPair p;
    p.value = values[idx];
    p.vector = D.cast<std::complex<double>>().asDiagonal() * inverse_iteration(B, p.value);
    p.vector /= p.vector.norm();
    p.residual = residual_of(op.matrix, normA, p.value, p.vector);
    p.mass_fraction = op.n == 0 ? mass_fraction(op, p.vector) : 0.0;
    return p;
  };

  // Only the top of the spectrum is inspected for the mass-carrying
  // direction (G, G_alpha or E^0); it is deflated, and every other
  // eigenvector of a conservative operator has zero mean.
  const std::size_t candidates = std::min<std::size_t>(6, order.size());
  std::size_t deflated = candidates;
  std::vector<EigenPair> top;
  for (std::size_t i = 0; i < candidates; ++i) top.push_back(make_pair(order[i]));
  if (op.n == 0) {
    double best = -1.0;
    for (std::size_t i = 0; i < candidates; ++i)
      if (top[i].mass_fraction > best) {
        best = top[i].mass_fraction;
        deflated = i;
      }
    rep.mass_pair = top[deflated];
  }
  rep.leading = top[deflated == 0 ? 1 : 0];
  rep.gap = -rep.leading.value.real();
  return rep;
}

nlohmann::json SpectrumReport::to_json() const {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& l : eigenvalues) ev.push_back({l.real(), l.imag()});
  nlohmann::json j{{"kind", to_string(kind)}, {"n", n}, {"alpha", alpha}, {"gap", gap},
                   {"eigenvalues", ev}, {"leading", pair_json(leading)}};
  if (mass_pair) j["mass_pair"] = pair_json(*mass_pair);
  return j;
}

GapSummary linearized_gap(const SelfSimilarProfile& p, const std::vector<int>& modes,
                          const std::vector<double>& nodes) {
  if (modes.empty()) throw InvalidArgument("no modes requested");
  GapSummary s;
  s.alpha = p.alpha;
  s.K = std::numeric_limits<double>::infinity();
  for (int n : modes) {
    s.modes.push_back(spectrum(assemble(OperatorKind::linearized, n, &p, nodes), 12));
    s.K = std::min(s.K, s.modes.back().gap);
  }
  return s;
}

nlohmann::json GapSummary::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (const auto& r : modes) m.push_back(r.to_json());
  return {{"alpha", alpha}, {"K", K}, {"modes", m}};
}

// ---------------------------------------------------------------------------
// Explicit Fokker-Planck kernel

namespace {

void check_times(double tau, double tau_prime) {
  if (!(tau > tau_prime)) throw InvalidArgument("kernel needs tau > tau'");
}

}  // namespace

Field2D fp_kernel_apply(const Field2D& f, double tau, double tau_prime) {
  check_times(tau, tau_prime);
  const double s = std::exp(-0.5 * (tau - tau_prime));
  const double a = -std::expm1(tau_prime - tau);
  const Grid2D& g = f.grid();
  const int n = g.n;
  const double h = g.spacing();
  // The output transform is exp(-a k^2) fhat(s k). fhat at the dilated
  // frequencies comes from a separable non-uniform DFT of the samples.
  using cplx = std::complex<double>;
  Eigen::VectorXd k(n);
  for (int m = 0; m < n; ++m) k[m] = 2.0 * kPi * (m < n / 2 ? m : m - n) / (2.0 * g.half_width);
  auto phase = [&](double sign, double scale, auto coord) {
    Eigen::MatrixXcd E(n, n);
    for (int m = 0; m < n; ++m)
      for (int j = 0; j < n; ++j) E(m, j) = std::polar(1.0, sign * scale * k[m] * coord(j));
    return E;
  };
  const Eigen::MatrixXcd Ex = phase(-1.0, s, [&](int j) { return g.x(j); });
  const Eigen::MatrixXcd Ey = phase(-1.0, s, [&](int j) { return g.y(j); });
  // F(iy, ix) = f(x_ix, y_iy)
  Eigen::MatrixXd F(n, n);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) F(iy, ix) = f(ix, iy);
  Eigen::MatrixXcd hat = Ey * F.cast<cplx>() * Ex.transpose() * (h * h);
  for (int my = 0; my < n; ++my)
    for (int mx = 0; mx < n; ++mx) hat(my, mx) *= std::exp(-a * (k[mx] * k[mx] + k[my] * k[my]));
  const Eigen::MatrixXcd Ix = phase(1.0, 1.0, [&](int j) { return g.x(j); });
  const Eigen::MatrixXcd Iy = phase(1.0, 1.0, [&](int j) { return g.y(j); });
  const Eigen::MatrixXcd out = Iy.transpose() * hat * Ix / (4.0 * g.half_width * g.half_width);
  std::vector<double> v(g.size());
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) v[static_cast<std::size_t>(iy) * n + ix] = out(iy, ix).real();
  return Field2D(g, std::move(v));
}

RadialField fp_kernel_apply(const RadialField& f, double tau, double tau_prime) {
  check_times(tau, tau_prime);
  f.validate();
  const double s = std::exp(-0.5 * (tau - tau_prime));
  const double a = -std::expm1(tau_prime - tau);
  const std::size_t N = f.size();
  // e^{-x} I0(x), switching to the asymptotic series where I0 overflows.
  auto i0e = [](double x) {
    if (x < 700.0) return boost::math::cyl_bessel_i(0, x) * std::exp(-x);
    return (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x)) / std::sqrt(2.0 * kPi * x);
  };
  RadialField out{f.nodes, std::vector<double>(N)};
  std::vector<double> F(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double r = f.nodes[i];
    for (std::size_t j = 0; j < N; ++j) {
      const double q = s * f.nodes[j];
      const double x = r * q / (2.0 * a);
      F[j] = std::exp(-(r - q) * (r - q) / (4.0 * a)) * i0e(x) * f.values[j] * f.nodes[j];
    }
    const double I = f.uniform() ? cumulative_integral(F, f.spacing(), -1).back()
                                 : cumulative_trapezoid(F, f.nodes).back();
    out.values[i] = 2.0 * kPi * I / (4.0 * kPi * a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elliptic mode shooting

namespace {

struct ShootSystem {
  RadialInterpolant G;
  RadialInterpolant vG;
  double nn;
};

// y0 = f, y1 = r f'
int shoot_rhs(double r, const double y[], double dy[], void* params) {
  const auto* s = static_cast<const ShootSystem*>(params);
  dy[0] = y[1] / r;
  dy[1] = (s->nn / r - r * s->G(r)) * y[0];
  return GSL_SUCCESS;
}

int shoot_jac(double r, const double y[], double* J, double dfdt[], void* params) {
  const auto* s = static_cast<const ShootSystem*>(params);
  const double g = s->G(r);
  const double dg = g * (s->vG(r) - 0.5 * r);
  J[0] = 0.0;
  J[1] = 1.0 / r;
  J[2] = s->nn / r - r * g;
  J[3] = 0.0;
  dfdt[0] = -y[1] / (r * r);
  dfdt[1] = (-s->nn / (r * r) - g - r * dg) * y[0];
  return GSL_SUCCESS;
}

}  // namespace

ShootReport elliptic_mode_shoot(const SelfSimilarProfile& p, int n, double r_max) {
  if (n < 0) throw InvalidArgument("angular mode must be >= 0");
  if (!(r_max > 0.0) || r_max > p.r.back()) throw InvalidArgument("shooting range outside the profile table");
  ShootSystem sys{RadialInterpolant(p.r, p.G), RadialInterpolant(p.r, p.vG), static_cast<double>(n * n)};
  const RadialInterpolant& vG = sys.vG;

  const double g0 = p.G.front();
  const double r0 = 1e-3;
  // Regular series f = r^n (1 - G(0) r^2 / (4 (n + 1))).
  const double rn = std::pow(r0, n);
  const double c2 = g0 / (4.0 * (n + 1));
  double y[2] = {rn * (1.0 - c2 * r0 * r0), rn * (n - (n + 2) * c2 * r0 * r0)};

  ShootReport rep;
  rep.n = n;
  rep.r_max = r_max;
  std::vector<double> rf;
  gsl_odeiv2_system ode{shoot_rhs, shoot_jac, 2, &sys};
  gsl_odeiv2_driver* driver = gsl_odeiv2_driver_alloc_y_new(&ode, gsl_odeiv2_step_msbdf, 1e-6, 1e-12, 1e-12);
  const int samples = 480;
  double r = r0;
  int status = GSL_SUCCESS;
  for (int i = 1; i <= samples && status == GSL_SUCCESS; ++i) {
    const double target = r_max * i / samples;
    status = gsl_odeiv2_driver_apply(driver, &r, target, y);
    rep.r.push_back(r);
    rep.f.push_back(y[0]);
    rf.push_back(y[1]);
  }
  gsl_odeiv2_driver_free(driver);
  if (status != GSL_SUCCESS) throw IntegratorFailure(std::string("mode shooting failed: ") + gsl_strerror(status));
  if (!std::isfinite(rep.f.back())) throw IntegratorFailure("mode shooting diverged");

  if (n == 1) {
    // Scale to n_1 = c' - r/2, whose slope at the origin is -(G(0) + 1)/2.
    const double slope = -(g0 + 1.0) / 2.0;
    for (double& v : rep.f) v *= slope;
    for (double& v : rf) v *= slope;
  }
  const double R = rep.r.back(), fR = rep.f.back(), rfR = rf.back();
  double scale = 0.0;
  for (double v : rep.f) scale = std::max(scale, std::abs(v));
  if (n == 0) {
    rep.B = rfR;
    rep.A = fR - rep.B * std::log(R);
    rep.unbounded = std::abs(rep.B) > 1e-6 * scale;
    rep.growth = rep.unbounded ? "logarithmic" : "bounded";
  } else {
    rep.A = (fR + rfR / n) / (2.0 * std::pow(R, n));
    rep.B = (fR - rfR / n) * std::pow(R, n) / 2.0;
    rep.unbounded = std::abs(rep.A) * std::pow(R, n) > 1e-6 * scale;
    rep.growth = rep.unbounded ? (n == 1 ? "linear" : "power") : "bounded";
  }
  rep.sign_definite = true;
  for (std::size_t i = 1; i < rep.f.size(); ++i)
    if (rep.f[i] * rep.f[0] <= 0.0) rep.sign_definite = false;

  if (n == 0 || n == 1) {
    std::vector<double> ref(rep.r.size());
    if (n == 0) {
      ProfileOptions o;
      o.r_max = p.r.back();
      o.points = static_cast<int>(p.r.size());
      const double step = std::min(1e-3, 0.5 * p.alpha);
      const RadialField e = zero_mode(p.alpha, step, o);
      std::vector<double> ratio(e.size());
      for (std::size_t i = 0; i < e.size(); ++i) ratio[i] = e.values[i] / p.G[i];
      const RadialInterpolant E(e.nodes, ratio);
      for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = E(rep.r[i]) / ratio.front();
    } else {
      for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = vG(rep.r[i]) - 0.5 * rep.r[i];
    }
    double dev = 0.0, size = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      dev = std::max(dev, std::abs(rep.f[i] - ref[i]));
      size = std::max(size, std::abs(ref[i]));
    }
    rep.reference_deviation = dev / size;
  }
  return rep;
}

nlohmann::json ShootReport::to_json() const {
  return {{"n", n},
          {"r_max", r_max},
          {"A", A},
          {"B", B},
          {"growth", growth},
          {"unbounded", unbounded},
          {"sign_definite", sign_definite},
          {"reference_deviation", std::isfinite(reference_deviation) ? nlohmann::json(reference_deviation)
                                                                     : nlohmann::json(nullptr)}};
}

}  // namespace pkslab
