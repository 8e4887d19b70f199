#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pkslab/evolve.hpp"
#include "pkslab/linops.hpp"

using namespace pkslab;

namespace {

const SelfSimilarProfile& profile(double alpha) { return *ProfileCache::global().get(alpha); }

// mass * heat kernel at time t
Field2D heat_gaussian(const Grid2D& g, double mass, double t, Vec2 c = {}) {
  return Field2D::from_function(g, [=](double x, double y) {
    const double r2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
    return mass / (4.0 * kPi * t) * std::exp(-r2 / (4.0 * t));
  });
}

double l1(const Field2D& f) { return norm_lpm(f, {1.0, 0.0}); }

SolverConfig physical(double t0, double t1) {
  SolverConfig c;
  c.t_start = t0;
  c.t_end = t1;
  return c;
}

}  // namespace

TEST_CASE("solver config") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.cfl = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = c;
  bad.t_end = bad.t_start;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = c;
  bad.min_dt = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(filter_from_string("boxcar"), InvalidArgument);

  c.model = Model::nse;
  c.filter = Filter::exponential;
  c.output_times = {0.02, 0.03};
  const SolverConfig back = SolverConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
  CHECK(back.hash().size() == 16);
  c.rtol = 1e-5;
  CHECK(back.hash() != c.hash());
}

TEST_CASE("zero data stays zero") {
  const Grid2D g{64, 4.0, {}};
  const Trajectory tr = evolve_physical(Field2D::zeros(g), physical(0.01, 0.05));
  CHECK(tr.final_state.max_abs() == 0.0);
  CHECK(tr.times.back() == 0.05);
  CHECK(detect_blowup(tr).verdict() == "bounded");
  for (double e : tr.diagnostics.energy) CHECK(e == 0.0);
}

TEST_CASE("initial data checks") {
  const Grid2D g{128, 4.0, {}};
  Field2D neg = heat_gaussian(g, 1.0, 0.05) - heat_gaussian(g, 2.0, 0.03, {0.3, 0.0});
  CHECK_THROWS_AS(evolve_physical(neg, physical(0.01, 0.02)), NegativeDensity);
  auto nse = physical(0.01, 0.02);
  nse.model = Model::nse;
  CHECK_NOTHROW(evolve_physical(neg, nse));
  CHECK_THROWS_AS(evolve_physical(heat_gaussian(g, 1.0, 2.0), physical(0.01, 0.02)), SupportOverflow);
  CHECK_THROWS_AS(evolve_similarity(heat_gaussian(g, 1.0, 0.2), 1.0, 1.0, SolverConfig{}), InvalidArgument);
}

TEST_CASE("Oseen vortex is self-similar") {
  const Grid2D g{128, 36.0, {}};
  auto cfg = physical(1.0, 4.0);
  cfg.model = Model::nse;
  cfg.store_fields = true;
  cfg.output_times = {2.0, 3.0};
  const double alpha = 3.0;
  const Trajectory tr = evolve_physical(heat_gaussian(g, alpha, 1.0), cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double t = tr.times[i];
    worst = std::max(worst, t * (tr.fields[i] - heat_gaussian(g, alpha, t)).max_abs());
  }
  CHECK(worst <= 1e-6 * alpha / (4.0 * kPi));
  // output times are hit exactly
  CHECK(std::find(tr.times.begin(), tr.times.end(), 2.0) != tr.times.end());
  CHECK(std::find(tr.times.begin(), tr.times.end(), 3.0) != tr.times.end());
}

TEST_CASE("PKS self-similar solution is preserved") {
  const auto& p = profile(4.0 * kPi);
  const Grid2D g{512, 32.0, {}};
  auto cfg = physical(1.0, 4.0);
  cfg.rtol = 1e-4;
  cfg.store_fields = true;
  cfg.cadence = 10;
  const Trajectory tr = evolve_physical(sample_profile(p, 1.0, {}, g), cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double t = tr.times[i];
    worst = std::max(worst, t * (tr.fields[i] - sample_profile(p, t, {}, g)).max_abs());
  }
  CHECK(worst <= 0.02 * p.G.front());
  const auto& d = tr.diagnostics;
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(std::abs(d.mass[i] - d.mass.front()) <= 1e-8 * d.mass.front());
    CHECK(d.min[i] >= -1e-8 * d.sup[i]);
  }
}

TEST_CASE("G_alpha is stationary in similarity variables") {
  const auto& p = profile(4.0 * kPi);
  const Grid2D g{256, 16.0, {}};
  const Field2D w0 = profile_on_grid(p, g);
  SolverConfig cfg;
  cfg.max_dt = 0.05;
  cfg.cadence = 20;
  const Trajectory tr = evolve_similarity(w0, 0.0, 3.0, cfg, &p);
  CHECK((tr.final_state - w0).max_abs() <= 1e-3 * w0.max_abs());
  CHECK(tr.diagnostics.reference_l1.back() <= 1e-3 * p.alpha);
}

TEST_CASE("Fokker-Planck flow matches the explicit kernel") {
  const Grid2D g{256, 16.0, {}};
  const Field2D f0 = Field2D::from_function(g, [](double x, double y) {
    return std::exp(-((x - 1) * (x - 1) + y * y) / 2) + 0.5 * std::exp(-((x + 1) * (x + 1) + (y - 0.5) * (y - 0.5)) / 0.5);
  });
  SolverConfig cfg;
  cfg.max_dt = 0.05;
  const Trajectory tr = evolve_similarity(f0, 0.0, 1.0, cfg, nullptr, false);
  const Field2D exact = fp_kernel_apply(f0, 1.0, 0.0);
  CHECK(l1(tr.final_state - exact) <= 1e-4 * l1(f0));
  // mass is conserved by the drift
  CHECK(std::abs(tr.final_state.mass() - f0.mass()) <= 1e-10 * f0.mass());
  // the similarity flow is autonomous: the start time does not matter
  const Trajectory shifted = evolve_similarity(f0, -3.0, -2.0, cfg, nullptr, false);
  CHECK((shifted.final_state - tr.final_state).max_abs() <= 1e-12 * f0.max_abs());
}

TEST_CASE("translation mode of the linearization decays at rate 1/2") {
  const auto& p = profile(4.0 * kPi);
  const Grid2D g{256, 16.0, {}};
  const Field2D f0 = spectral_dx(profile_on_grid(p, g));
  SolverConfig cfg;
  cfg.max_dt = 0.05;
  cfg.cadence = 10;
  const Trajectory tr = evolve_linearized(f0, p, 0.0, 1.0, cfg);
  const auto& d = tr.diagnostics;
  const double rate = -std::log(d.sup.back() / d.sup.front()) / (d.time.back() - d.time.front());
  CHECK(rate == doctest::Approx(0.5).epsilon(0.1));
  // F~ is quadratic, so it decays at twice the rate
  CHECK(d.energy.back() / d.energy.front() == doctest::Approx(std::exp(-1.0)).epsilon(0.01));
  for (std::size_t i = 1; i < d.size(); ++i) CHECK(d.energy[i] <= d.energy[i - 1] + 1e-8);
  for (double m : d.mass) CHECK(std::abs(m) <= 1e-12);
}

TEST_CASE("S_N propagator") {
  const Grid2D g{128, 4.0, {}};
  const Field2D f0 = heat_gaussian(g, 1.0, 0.02, {0.2, -0.1});
  SolverConfig cfg;
  cfg.rtol = 1e-9;

  SUBCASE("no centers is the heat flow") {
    const Field2D s = sn_propagate(f0, 0.1, 0.3, {}, cfg);
    CHECK((s - heat_apply(f0, 0.2)).max_abs() <= 1e-12 * f0.max_abs());
  }
  SUBCASE("linear in the data") {
    cfg.fixed_dt = 1e-3;
    const std::vector<Atom> at{{{-0.5, 0.0}, 4.0 * kPi}, {{0.5, 0.0}, 2.0 * kPi}};
    const Field2D g0 = heat_gaussian(g, -0.7, 0.03, {-0.3, 0.2});
    const double s = 0.01, t = 0.02;
    const Field2D lhs = sn_propagate(f0 * 2.0 + g0, s, t, at, cfg);
    const Field2D rhs = sn_propagate(f0, s, t, at, cfg) * 2.0 + sn_propagate(g0, s, t, at, cfg);
    CHECK((lhs - rhs).max_abs() <= 1e-12 * lhs.max_abs());
    // the drift pulls mass toward the centers but keeps it
    CHECK(lhs.mass() == doctest::Approx((f0 * 2.0 + g0).mass()).epsilon(1e-10));
  }
  SUBCASE("center masses are checked") {
    CHECK_THROWS_AS(sn_propagate(f0, 0.1, 0.2, {{{0.0, 0.0}, 9.0 * kPi}}, cfg), OutOfRange);
    CHECK_THROWS_AS(sn_propagate(f0, 0.2, 0.1, {}, cfg), InvalidArgument);
  }
}

TEST_CASE("physical PKS flow: invariants, energy, order") {
  // h / sqrt(t) must stay small: the 2/3 cutoff truncates a marginally
  // resolved flux and the ringing fills the box
  const Grid2D g{256, 12.0, {}};
  const Field2D u0 = heat_gaussian(g, 4.0 * kPi, 0.25, {0.1, 0.0}) + heat_gaussian(g, 0.5 * kPi, 0.1, {-0.5, 0.4});

  SUBCASE("mass, positivity, free energy") {
    auto cfg = physical(0.25, 0.4);
    const Trajectory tr = evolve_physical(u0, cfg);
    const auto& d = tr.diagnostics;
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(std::abs(d.mass[i] - d.mass.front()) <= 1e-8 * d.mass.front());
      CHECK(d.min[i] >= -1e-8 * d.sup[i]);
      if (i > 0) CHECK(d.energy[i] <= d.energy[i - 1] + 1e-8 * std::abs(d.energy[i - 1]));
    }
    CHECK(tr.rejected >= 0);
    CHECK(detect_blowup(tr).verdict() == "bounded");
  }
  SUBCASE("third order in time") {
    auto cfg = physical(0.25, 0.29);
    std::vector<Field2D> sol;
    for (double dt : {8e-3, 4e-3, 2e-3, 1e-3}) {
      cfg.fixed_dt = dt;
      sol.push_back(evolve_physical(u0, cfg).final_state);
    }
    const double e1 = (sol[0] - sol[3]).max_abs(), e2 = (sol[1] - sol[3]).max_abs(), e3 = (sol[2] - sol[3]).max_abs();
    // Richardson with the finest run as reference: errors scale like (1 - 2^-p)
    CHECK(std::log2((e1 - e2) / (e2 - e3)) >= 2.0);
    CHECK(e3 > 0.0);
  }
}

TEST_CASE("supercritical mass concentrates") {
  // 10 pi from a narrow Gaussian: the virial identity forces collapse by t0 + 4 s
  const double s = 0.01;
  const Grid2D g{256, 4.0, {}};
  const Field2D u0 = heat_gaussian(g, 10.0 * kPi, s);
  auto cfg = physical(s, 5.0 * s);
  cfg.stop_sup_factor = 60.0;
  cfg.rtol = 1e-4;
  // the collapsing core outruns the grid; truncation would ring through the box
  cfg.filter = Filter::exponential;
  cfg.tail_tolerance = 1e-4;
  Trajectory tr;
  try {
    tr = evolve_physical(u0, cfg);
  } catch (const CFLCollapse& e) {
    tr = e.partial();
  }
  const BlowupVerdict v = detect_blowup(tr);
  CHECK(v.blowup);
  CHECK(v.peak_mass > 0.9 * kCriticalMass);
  CHECK(v.time < 5.0 * s);
  CHECK(v.to_json()["verdict"] == "blowup");
}

TEST_CASE("CFL collapse carries the partial trajectory") {
  const Grid2D g{64, 2.0, {}};
  auto cfg = physical(0.01, 0.05);
  cfg.min_dt = 1e-2;  // any CFL step is below this for this data
  cfg.max_dt = 1e-2;
  try {
    evolve_physical(heat_gaussian(g, 4.0 * kPi, 0.01), cfg);
    FAIL("expected CFLCollapse");
  } catch (const CFLCollapse& e) {
    CHECK(e.partial().times.size() == 1);
    CHECK(e.partial().final_state.max_abs() > 0.0);
    CHECK(std::string(e.kind()) == "CFLCollapse");
  }
}

TEST_CASE("diagnostics csv and manifest") {
  const Grid2D g{128, 4.0, {}};
  auto cfg = physical(0.05, 0.06);
  const Trajectory tr = evolve_physical(heat_gaussian(g, kPi, 0.05), cfg);
  std::ostringstream os;
  tr.diagnostics.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("time,mass,sup", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == tr.diagnostics.size() + 1);
  const auto m = tr.manifest(cfg);
  CHECK(m["config_hash"] == cfg.hash());
  CHECK(m["steps"] == tr.steps);
  // deterministic reruns
  const Trajectory again = evolve_physical(heat_gaussian(g, kPi, 0.05), cfg);
  CHECK((again.final_state - tr.final_state).max_abs() == 0.0);
  CHECK(again.diagnostics.energy == tr.diagnostics.energy);
}
