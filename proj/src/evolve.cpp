#include "pkslab/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "pkslab/spectral.hpp"
#include "pkslab/velocity.hpp"

namespace pkslab {

using spectral::cplx;

// ---------------------------------------------------------------------------
// Config, diagnostics, manifest

std::string to_string(Filter f) { return f == Filter::sharp ? "sharp" : "exponential"; }

Filter filter_from_string(const std::string& s) {
  if (s == "sharp") return Filter::sharp;
  if (s == "exponential") return Filter::exponential;
  throw InvalidArgument("unknown filter '" + s + "'");
}

void SolverConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidArgument("CFL number must lie in (0, 1]");
  if (!(max_dt > 0.0)) throw InvalidArgument("max dt must be positive");
  if (!(min_dt > 0.0) || min_dt > max_dt) throw InvalidArgument("min dt must lie in (0, max dt]");
  if (fixed_dt < 0.0) throw InvalidArgument("fixed dt must be >= 0");
  if (rtol < 0.0) throw InvalidArgument("rtol must be >= 0");
  if (!(dealias > 0.0 && dealias <= 1.0)) throw InvalidArgument("dealias fraction must lie in (0, 1]");
  if (!(t_start > 0.0) || !(t_end > t_start)) throw InvalidArgument("need t_end > t_start > 0");
  if (cadence < 1) throw InvalidArgument("diagnostics cadence must be >= 1");
  if (weight_m < 0.0) throw InvalidArgument("weight m must be >= 0");
  if (stop_sup_factor < 0.0) throw InvalidArgument("stop factor must be >= 0");
  if (max_steps < 1) throw InvalidArgument("max steps must be >= 1");
}

nlohmann::json SolverConfig::to_json() const {
  return {{"model", to_string(model)},
          {"cfl", cfl},
          {"max_dt", max_dt},
          {"min_dt", min_dt},
          {"fixed_dt", fixed_dt},
          {"rtol", rtol},
          {"dealias", dealias},
          {"filter", to_string(filter)},
          {"t_start", t_start},
          {"t_end", t_end},
          {"cadence", cadence},
          {"weight_m", weight_m},
          {"energy", energy},
          {"store_fields", store_fields},
          {"output_times", output_times},
          {"stop_sup_factor", stop_sup_factor},
          {"tail_tolerance", tail_tolerance},
          {"max_steps", max_steps},
          {"dump_path", dump_path}};
}

SolverConfig SolverConfig::from_json(const nlohmann::json& j) {
  SolverConfig c;
  c.model = model_from_string(j.value("model", to_string(c.model)));
  c.cfl = j.value("cfl", c.cfl);
  c.max_dt = j.value("max_dt", c.max_dt);
  c.min_dt = j.value("min_dt", c.min_dt);
  c.fixed_dt = j.value("fixed_dt", c.fixed_dt);
  c.rtol = j.value("rtol", c.rtol);
  c.dealias = j.value("dealias", c.dealias);
  c.filter = filter_from_string(j.value("filter", to_string(c.filter)));
  c.t_start = j.value("t_start", c.t_start);
  c.t_end = j.value("t_end", c.t_end);
  c.cadence = j.value("cadence", c.cadence);
  c.weight_m = j.value("weight_m", c.weight_m);
  c.energy = j.value("energy", c.energy);
  c.store_fields = j.value("store_fields", c.store_fields);
  c.output_times = j.value("output_times", c.output_times);
  c.stop_sup_factor = j.value("stop_sup_factor", c.stop_sup_factor);
  c.tail_tolerance = j.value("tail_tolerance", c.tail_tolerance);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.dump_path = j.value("dump_path", c.dump_path);
  return c;
}

std::string SolverConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void Diagnostics::write_csv(std::ostream& os) const {
  os << "time,mass,sup,scaled_sup,hyper,weighted_l2,energy,min,peak_mass,reference_l1,dt\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < time.size(); ++i)
    os << time[i] << ',' << mass[i] << ',' << sup[i] << ',' << scaled_sup[i] << ',' << hyper[i] << ','
       << weighted_l2[i] << ',' << energy[i] << ',' << min[i] << ',' << peak_mass[i] << ',' << reference_l1[i]
       << ',' << dt[i] << '\n';
}

nlohmann::json Trajectory::manifest(const SolverConfig& cfg) const {
  return {{"config", cfg.to_json()},
          {"config_hash", cfg.hash()},
          {"steps", steps},
          {"rejected", rejected},
          {"snapshots", times.size()},
          {"final_time", times.empty() ? 0.0 : times.back()},
          {"stopped_early", stopped_early},
          {"stop_reason", stop_reason}};
}

nlohmann::json BlowupVerdict::to_json() const {
  nlohmann::json j{{"verdict", verdict()},
                   {"initial_scaled_sup", initial_scaled_sup},
                   {"max_scaled_sup", max_scaled_sup},
                   {"peak_mass", peak_mass}};
  if (blowup) j["time"] = time;
  return j;
}

BlowupVerdict detect_blowup(const Trajectory& traj, const BlowupCriteria& c) {
  BlowupVerdict v;
  const Diagnostics& d = traj.diagnostics;
  if (d.size() == 0) return v;
  v.initial_scaled_sup = d.scaled_sup.front();
  for (std::size_t i = 0; i < d.size(); ++i) {
    v.max_scaled_sup = std::max(v.max_scaled_sup, d.scaled_sup[i]);
    if (!v.blowup && d.scaled_sup[i] > c.sup_factor * v.initial_scaled_sup &&
        d.peak_mass[i] > c.mass_fraction * kCriticalMass) {
      v.blowup = true;
      v.time = d.time[i];
      v.peak_mass = d.peak_mass[i];
    }
  }
  if (!v.blowup) v.peak_mass = d.peak_mass.back();
  return v;
}

// ---------------------------------------------------------------------------
// Integrator

namespace {

/// Fills the flux components at the physical state u and returns the
/// largest transport speed for the CFL limit.
using FluxFn = std::function<double(double t, const Field2D& u, std::vector<double>& fx, std::vector<double>& fy)>;

enum class Frame { physical, similarity, linearized };

struct RunSpec {
  Frame frame = Frame::physical;
  double t0 = 0.0;
  double t1 = 0.0;
  FluxFn flux;
  const SelfSimilarProfile* reference = nullptr;  // |w - G|_1 series / F~ for linearized runs
  bool confined = false;                          // check the tail of w at snapshots
  bool energy_defined = true;
};

double peak_mass(const Field2D& u, double radius) {
  const Grid2D& g = u.grid();
  const auto v = u.values();
  const std::size_t imax = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  const int cx = static_cast<int>(imax % g.n), cy = static_cast<int>(imax / g.n);
  const int reach = static_cast<int>(std::ceil(radius / g.spacing()));
  double m = 0.0;
  for (int iy = std::max(0, cy - reach); iy <= std::min(g.n - 1, cy + reach); ++iy)
    for (int ix = std::max(0, cx - reach); ix <= std::min(g.n - 1, cx + reach); ++ix)
      if (std::hypot(g.x(ix) - g.x(cx), g.y(iy) - g.y(cy)) <= radius) m += u(ix, iy);
  return m * g.cell_area();
}

Field2D clamp_negative(const Field2D& u) {
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double& x : v) x = std::max(x, 0.0);
  return Field2D(u.grid(), std::move(v));
}

class Integrator {
 public:
  Integrator(const Grid2D& g, const SolverConfig& cfg, RunSpec spec)
      : g_(g), cfg_(cfg), spec_(std::move(spec)), fft_(spectral::fft(g.n)) {
    const int n = g.n, half = n / 2 + 1;
    const double period = 2.0 * g.half_width;
    kx_ = spectral::wavenumbers(n, period, true, true);
    ky_ = spectral::wavenumbers(n, period, false, true);
    const auto kxf = spectral::wavenumbers(n, period, true, false);
    const auto kyf = spectral::wavenumbers(n, period, false, false);
    lam_.resize(fft_.spectral_size());
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < half; ++ix) lam_[static_cast<std::size_t>(iy) * half + ix] = kxf[ix] * kxf[ix] + kyf[iy] * kyf[iy];
    if (cfg.filter == Filter::exponential) {
      mask_ = spectral::exponential_filter(n);
    } else {
      const auto m = spectral::dealias_mask(n, cfg.dealias);
      mask_.assign(m.begin(), m.end());
    }
    if (spec_.reference && spec_.frame == Frame::similarity) G_ = profile_on_grid(*spec_.reference, g);
  }

  Trajectory run(const Field2D& u0) {
    const std::size_t S = fft_.spectral_size();
    std::vector<cplx> uhat(S), K1(S), K2(S), K3(S), K4(S), U(S), unew(S);
    fft_.forward(u0.values(), uhat);

    Field2D u = u0;
    double speed = rhs(spec_.t0, uhat, K1, &u);
    double t = spec_.t0;
    record(t, u, 0.0);
    const double initial_sup = traj_.diagnostics.scaled_sup.front();

    std::vector<double> targets = cfg_.output_times;
    targets.push_back(spec_.t1);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::remove_if(targets.begin(), targets.end(), [&](double x) { return x <= t || x > spec_.t1; }),
                  targets.end());
    std::size_t next = 0;

    double h_err = cfg_.max_dt;
    const double hgrid = g_.spacing();
    const double tiny = 1e-12 * std::max(1.0, std::abs(spec_.t1));
    Field2D unew_field;
    while (next < targets.size()) {
      if (traj_.steps >= cfg_.max_steps) throw NonConvergence("step limit reached at t = " + std::to_string(t));
      double h;
      if (cfg_.fixed_dt > 0.0) {
        h = cfg_.fixed_dt;
      } else {
        const double h_cfl = speed > 0.0 ? cfg_.cfl * hgrid / speed : cfg_.max_dt;
        if (h_cfl < cfg_.min_dt) {
          std::ostringstream msg;
          msg << "CFL step " << h_cfl << " below " << cfg_.min_dt << " at t = " << t << " (max speed " << speed << ")";
          throw CFLCollapse(msg.str(), std::make_shared<Trajectory>(finish(u)));
        }
        h = std::min({cfg_.max_dt, h_cfl, h_err});
      }
      const double target = targets[next];
      bool hits = false;
      if (t + h >= target - tiny) {
        h = target - t;
        hits = true;
      } else if (t + 2.0 * h > target) {
        h = 0.5 * (target - t);  // avoid a sliver step
      }

      // Lawson BS3(2): stage i at c_i h with multipliers E(s) = exp(-|k|^2 s)
      const auto E = [&](double s, std::vector<double>& out) {
        out.resize(S);
        for (std::size_t k = 0; k < S; ++k) out[k] = std::exp(-lam_[k] * s);
      };
      E(h, e1_);
      E(0.5 * h, e12_);
      E(0.75 * h, e34_);
      E(0.25 * h, e14_);
      for (std::size_t k = 0; k < S; ++k) U[k] = e12_[k] * (uhat[k] + 0.5 * h * K1[k]);
      rhs(t + 0.5 * h, U, K2, nullptr);
      for (std::size_t k = 0; k < S; ++k) U[k] = e34_[k] * uhat[k] + 0.75 * h * e14_[k] * K2[k];
      rhs(t + 0.75 * h, U, K3, nullptr);
      for (std::size_t k = 0; k < S; ++k)
        unew[k] = e1_[k] * uhat[k] + h * (2.0 / 9.0 * e1_[k] * K1[k] + 1.0 / 3.0 * e12_[k] * K2[k] + 4.0 / 9.0 * e14_[k] * K3[k]);
      const double speed4 = rhs(t + h, unew, K4, &unew_field);

      if (cfg_.fixed_dt <= 0.0 && cfg_.rtol > 0.0) {
        for (std::size_t k = 0; k < S; ++k)
          U[k] = h * ((2.0 / 9.0 - 7.0 / 24.0) * e1_[k] * K1[k] + (1.0 / 3.0 - 0.25) * e12_[k] * K2[k] +
                      (4.0 / 9.0 - 1.0 / 3.0) * e14_[k] * K3[k] - 0.125 * K4[k]);
        err_.resize(g_.size());
        fft_.inverse(U, err_);
        double emax = 0.0;
        for (double e : err_) emax = std::max(emax, std::abs(e));
        const double scale = cfg_.rtol * std::max(unew_field.max_abs(), 1e-300);
        const double ratio = emax / scale;
        if (ratio > 1.0) {
          h_err = h * std::max(0.2, 0.9 * std::pow(ratio, -1.0 / 3.0));
          ++traj_.rejected;
          continue;
        }
        h_err = ratio > 0.0 ? h * std::min(2.0, 0.9 * std::pow(ratio, -1.0 / 3.0)) : 2.0 * h;
        h_err = std::max(h_err, cfg_.min_dt);
      }

      t = hits ? target : t + h;
      if (hits) ++next;
      uhat.swap(unew);
      K1.swap(K4);
      u = unew_field;
      speed = speed4;
      ++traj_.steps;
      if (traj_.steps % cfg_.cadence == 0 || hits) record(t, u, h);
      if (cfg_.stop_sup_factor > 0.0 && scaled_sup(t, u) > cfg_.stop_sup_factor * initial_sup) {
        if (traj_.times.back() != t) record(t, u, h);
        traj_.stopped_early = true;
        traj_.stop_reason = "scaled sup exceeded stop factor";
        break;
      }
    }
    return finish(u);
  }

 private:
  /// N(u) = -div F(u), dealiased. Returns the transport speed.
  double rhs(double t, const std::vector<cplx>& uhat, std::vector<cplx>& out, Field2D* u_out) {
    phys_.resize(g_.size());
    fft_.inverse(uhat, phys_);
    Field2D u;
    try {
      u = Field2D(g_, phys_);
    } catch (const NanDetected&) {
      dump();
      throw NanDetected("non-finite state at t = " + std::to_string(t));
    }
    fx_.assign(g_.size(), 0.0);
    fy_.assign(g_.size(), 0.0);
    const double speed = spec_.flux(t, u, fx_, fy_);
    const std::size_t S = fft_.spectral_size();
    Fx_.resize(S);
    Fy_.resize(S);
    fft_.forward(fx_, Fx_);
    fft_.forward(fy_, Fy_);
    const int half = g_.n / 2 + 1;
    out.resize(S);
    for (int iy = 0; iy < g_.n; ++iy)
      for (int ix = 0; ix < half; ++ix) {
        const std::size_t k = static_cast<std::size_t>(iy) * half + ix;
        out[k] = -cplx(0.0, mask_[k]) * (kx_[ix] * Fx_[k] + ky_[iy] * Fy_[k]);
      }
    if (u_out) *u_out = std::move(u);
    return speed;
  }

  double scaled_sup(double t, const Field2D& u) const {
    return spec_.frame == Frame::physical ? t * u.max_abs() : u.max_abs();
  }

  void record(double t, const Field2D& u, double dt) {
    if (spec_.confined && tail_fraction(u) > cfg_.tail_tolerance) {
      dump(&u);
      throw ConfinementFailure("mass leaves the box at tau = " + std::to_string(t));
    }
    last_good_ = u;
    Diagnostics& d = traj_.diagnostics;
    const bool phys = spec_.frame == Frame::physical;
    d.time.push_back(t);
    d.mass.push_back(u.mass());
    d.sup.push_back(u.max());
    d.min.push_back(u.min());
    d.scaled_sup.push_back(scaled_sup(t, u));
    const double l43 = norm_lpm(u, {4.0 / 3.0, 0.0});
    d.hyper.push_back(phys ? std::pow(t, 0.25) * l43 : l43);
    d.weighted_l2.push_back(norm_lpm(u, {2.0, cfg_.weight_m}));
    d.peak_mass.push_back(peak_mass(u, phys ? std::sqrt(t) : 1.0));
    d.reference_l1.push_back(!G_.empty() ? norm_lpm(u - G_, {1.0, 0.0}) : std::numeric_limits<double>::quiet_NaN());
    d.energy.push_back(energy(u));
    d.dt.push_back(dt);
    traj_.times.push_back(t);
    if (cfg_.store_fields) traj_.fields.push_back(u);
  }

  double energy(const Field2D& u) const {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (!cfg_.energy || !spec_.energy_defined) return nan;
    try {
      if (spec_.frame == Frame::linearized) return linearized_energy(u, *spec_.reference, kFlowEnergyFloor).F;
      if (cfg_.model == Model::nse) return nan;
      if (u.max_abs() == 0.0) return 0.0;
      if (u.min() < -1e-8 * u.max()) return nan;
      const Field2D c = clamp_negative(u);
      return spec_.frame == Frame::physical ? free_energy_physical(c).value : free_energy_similarity(c).value;
    } catch (const Error&) {
      return nan;
    }
  }

  void dump(const Field2D* state = nullptr) const {
    if (cfg_.dump_path.empty()) return;
    const Field2D& f = state ? *state : last_good_;
    if (!f.empty()) save_field(f, cfg_.dump_path);
  }

  Trajectory finish(const Field2D& u) {
    Trajectory out = traj_;
    out.final_state = u;
    return out;
  }

  Grid2D g_;
  SolverConfig cfg_;
  RunSpec spec_;
  spectral::Fft2D& fft_;
  std::vector<double> kx_, ky_, lam_;
  std::vector<double> mask_;
  std::vector<double> e1_, e12_, e34_, e14_, err_, phys_, fx_, fy_;
  std::vector<cplx> Fx_, Fy_;
  Field2D G_;
  Field2D last_good_;
  Trajectory traj_;
};

double max_speed(const std::vector<double>& vx, const std::vector<double>& vy) {
  double m = 0.0;
  for (std::size_t i = 0; i < vx.size(); ++i) m = std::max(m, std::hypot(vx[i], vy[i]));
  return m;
}

/// Velocity of the nonlocal law plus an optional similarity drift -xi/2.
FluxFn transport_flux(Model model, double tail_tolerance, bool drift) {
  return [=](double, const Field2D& u, std::vector<double>& fx, std::vector<double>& fy) {
    const Grid2D& g = u.grid();
    std::vector<double> vx(g.size(), 0.0), vy(g.size(), 0.0);
    if (u.max_abs() > 0.0) {
      const VelocityField v = velocity(model, u, tail_tolerance);
      std::copy(v.vx.values().begin(), v.vx.values().end(), vx.begin());
      std::copy(v.vy.values().begin(), v.vy.values().end(), vy.begin());
    }
    if (drift)
      for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix) {
          const std::size_t i = static_cast<std::size_t>(iy) * g.n + ix;
          vx[i] -= 0.5 * g.x(ix);
          vy[i] -= 0.5 * g.y(iy);
        }
    const auto uv = u.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      fx[i] = uv[i] * vx[i];
      fy[i] = uv[i] * vy[i];
    }
    return max_speed(vx, vy);
  };
}

void check_initial(const Field2D& u0, const SolverConfig& cfg, bool nonnegative) {
  u0.grid().validate();
  if (nonnegative && cfg.model == Model::pks && u0.min() < -1e-10 * std::max(u0.max(), 0.0))
    throw NegativeDensity("PKS data must be nonnegative");
  if (tail_fraction(u0) > cfg.tail_tolerance) throw SupportOverflow("initial data leaks past half the box");
}

SolverConfig with_span(SolverConfig cfg, double a, double b) {
  // tau spans may be negative; validation only needs an increasing pair
  if (!(b > a)) throw InvalidArgument("time span must be increasing");
  cfg.t_start = 1.0;
  cfg.t_end = 2.0;
  cfg.validate();
  cfg.t_start = a;
  cfg.t_end = b;
  return cfg;
}

}  // namespace

Trajectory evolve_physical(const Field2D& u0, const SolverConfig& cfg) {
  cfg.validate();
  check_initial(u0, cfg, true);
  RunSpec spec;
  spec.frame = Frame::physical;
  spec.t0 = cfg.t_start;
  spec.t1 = cfg.t_end;
  spec.flux = transport_flux(cfg.model, cfg.tail_tolerance, false);
  return Integrator(u0.grid(), cfg, std::move(spec)).run(u0);
}

Trajectory evolve_similarity(const Field2D& w0, double tau0, double tau1, const SolverConfig& cfg_in,
                             const SelfSimilarProfile* reference, bool nonlinear) {
  const SolverConfig cfg = with_span(cfg_in, tau0, tau1);
  check_initial(w0, cfg, nonlinear);
  RunSpec spec;
  spec.frame = Frame::similarity;
  spec.t0 = tau0;
  spec.t1 = tau1;
  spec.reference = reference;
  spec.confined = true;
  spec.energy_defined = nonlinear;
  if (nonlinear) {
    spec.flux = transport_flux(cfg.model, cfg.tail_tolerance, true);
  } else {
    spec.flux = [](double, const Field2D& u, std::vector<double>& fx, std::vector<double>& fy) {
      const Grid2D& g = u.grid();
      for (int iy = 0; iy < g.n; ++iy)
        for (int ix = 0; ix < g.n; ++ix) {
          const std::size_t i = static_cast<std::size_t>(iy) * g.n + ix;
          fx[i] = -0.5 * g.x(ix) * u.values()[i];
          fy[i] = -0.5 * g.y(iy) * u.values()[i];
        }
      return 0.5 * std::hypot(g.half_width + std::abs(g.center.x), g.half_width + std::abs(g.center.y));
    };
  }
  return Integrator(w0.grid(), cfg, std::move(spec)).run(w0);
}

namespace {

FluxFn frozen_flux(const std::vector<Atom>& centers, const ProfileProvider& profiles) {
  struct Center {
    Vec2 z;
    std::shared_ptr<const SelfSimilarProfile> p;
    std::shared_ptr<ProfileVelocity> q;
  };
  std::vector<Center> cs;
  for (const Atom& a : centers) {
    if (!(a.mass > 0.0 && a.mass < kCriticalMass)) throw OutOfRange("frozen profile mass must lie in (0, 8 pi)");
    auto p = profiles(a.mass);
    cs.push_back({a.z, p, std::make_shared<ProfileVelocity>(*p)});
  }
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i + 1; j < cs.size(); ++j)
      if (cs[i].z == cs[j].z) throw InvalidArgument("frozen profile centers must be distinct");
  return [cs](double t, const Field2D& u, std::vector<double>& fx, std::vector<double>& fy) {
    const Grid2D& g = u.grid();
    const double st = std::sqrt(t);
    double speed = 0.0;
    for (int iy = 0; iy < g.n; ++iy)
      for (int ix = 0; ix < g.n; ++ix) {
        double vx = 0.0, vy = 0.0;
        for (const Center& c : cs) {
          const double dx = g.x(ix) - c.z.x, dy = g.y(iy) - c.z.y;
          // t^{-1/2} v^G((x - z)/sqrt t) = q(rho/sqrt t) (x - z) / t
          const double q = (*c.q)(std::hypot(dx, dy) / st) / t;
          vx += q * dx;
          vy += q * dy;
        }
        const std::size_t i = static_cast<std::size_t>(iy) * g.n + ix;
        fx[i] = u.values()[i] * vx;
        fy[i] = u.values()[i] * vy;
        speed = std::max(speed, std::hypot(vx, vy));
      }
    return speed;
  };
}

}  // namespace

Trajectory sn_trajectory(const Field2D& f0, double s, double t, const std::vector<Atom>& centers,
                         const SolverConfig& cfg_in, const ProfileProvider& profiles) {
  if (!(s > 0.0 && t > s)) throw InvalidArgument("S_N needs 0 < s < t");
  SolverConfig cfg = cfg_in;
  cfg.t_start = s;
  cfg.t_end = t;
  cfg.model = Model::pks;
  cfg.validate();
  check_initial(f0, cfg, false);
  RunSpec spec;
  spec.frame = Frame::physical;
  spec.t0 = s;
  spec.t1 = t;
  spec.energy_defined = false;
  spec.flux = frozen_flux(centers, profiles);
  return Integrator(f0.grid(), cfg, std::move(spec)).run(f0);
}

Field2D sn_propagate(const Field2D& f0, double s, double t, const std::vector<Atom>& centers,
                     const SolverConfig& cfg, const ProfileProvider& profiles) {
  SolverConfig c = cfg;
  c.energy = false;
  c.store_fields = false;
  c.cadence = std::numeric_limits<int>::max();
  return sn_trajectory(f0, s, t, centers, c, profiles).final_state;
}

Trajectory evolve_linearized(const Field2D& f0, const SelfSimilarProfile& p, double tau0, double tau1,
                             const SolverConfig& cfg_in) {
  const SolverConfig cfg = with_span(cfg_in, tau0, tau1);
  check_initial(f0, cfg, false);
  const Grid2D& g = f0.grid();
  const Field2D G = profile_on_grid(p, g);
  // v^G - xi/2 is frozen
  auto wx = std::make_shared<std::vector<double>>(g.size());
  auto wy = std::make_shared<std::vector<double>>(g.size());
  const ProfileVelocity Q(p);
  double wmax = 0.0;
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double x = g.x(ix), y = g.y(iy);
      const double q = Q(std::hypot(x, y)) - 0.5;
      const std::size_t i = static_cast<std::size_t>(iy) * g.n + ix;
      (*wx)[i] = q * x;
      (*wy)[i] = q * y;
      wmax = std::max(wmax, std::hypot(q * x, q * y));
    }
  RunSpec spec;
  spec.frame = Frame::linearized;
  spec.t0 = tau0;
  spec.t1 = tau1;
  spec.reference = &p;
  spec.confined = true;
  const double tail = cfg.tail_tolerance;
  spec.flux = [G, wx, wy, wmax, tail](double, const Field2D& f, std::vector<double>& fx, std::vector<double>& fy) {
    const auto fv = f.values(), Gv = G.values();
    std::vector<double> cx(fv.size(), 0.0), cy(fv.size(), 0.0);
    if (f.max_abs() > 0.0) {
      PoissonResult pot = solve_poisson(f, {tail, false, true});
      std::copy(pot.dx.values().begin(), pot.dx.values().end(), cx.begin());
      std::copy(pot.dy.values().begin(), pot.dy.values().end(), cy.begin());
    }
    for (std::size_t i = 0; i < fv.size(); ++i) {
      fx[i] = fv[i] * (*wx)[i] + Gv[i] * cx[i];
      fy[i] = fv[i] * (*wy)[i] + Gv[i] * cy[i];
    }
    return wmax;
  };
  return Integrator(g, cfg, std::move(spec)).run(f0);
}

}  // namespace pkslab
