// The eight experiments behind run_experiment. Each reads its typed
// parameters, runs, and appends checks; a library error inside a group
// becomes a failed check named after the group.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "pkslab/energies.hpp"
#include "pkslab/evolve.hpp"
#include "pkslab/harness.hpp"
#include "pkslab/linops.hpp"
#include "pkslab/measures.hpp"

namespace pkslab {

namespace {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// parameter access

class Params {
 public:
  Params(const json& j, std::string where) : j_(j), where_(std::move(where)) {}

  const json& at(const std::string& k) const {
    if (!j_.contains(k)) throw InvalidArgument(where_ + ": missing parameter '" + k + "'");
    return j_.at(k);
  }
  double num(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_number()) throw InvalidArgument(where_ + ": '" + k + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw InvalidArgument(where_ + ": '" + k + "' must be finite");
    return x;
  }
  double positive(const std::string& k) const {
    const double x = num(k);
    if (!(x > 0.0)) throw InvalidArgument(where_ + ": '" + k + "' must be positive");
    return x;
  }
  int integer(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_number_integer()) throw InvalidArgument(where_ + ": '" + k + "' must be an integer");
    return v.get<int>();
  }
  double mass(const std::string& k) const {
    try {
      return parse_mass(at(k));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where_ + ": '" + k + "': " + e.what());
    }
  }
  std::vector<double> masses(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_array() || v.empty()) throw InvalidArgument(where_ + ": '" + k + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(parse_mass(e));
    return out;
  }
  std::vector<double> nums(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_array() || v.empty()) throw InvalidArgument(where_ + ": '" + k + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw InvalidArgument(where_ + ": '" + k + "' must hold numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<int> ints(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_array() || v.empty()) throw InvalidArgument(where_ + ": '" + k + "' must be a non-empty array");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw InvalidArgument(where_ + ": '" + k + "' must hold integers");
      out.push_back(e.get<int>());
    }
    return out;
  }
  std::string str(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_string()) throw InvalidArgument(where_ + ": '" + k + "' must be a string");
    return v.get<std::string>();
  }
  Vec2 point(const std::string& k) const {
    const auto v = nums(k);
    if (v.size() != 2) throw InvalidArgument(where_ + ": '" + k + "' must be [x, y]");
    return {v[0], v[1]};
  }
  Params sub(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_object()) throw InvalidArgument(where_ + ": '" + k + "' must be an object");
    return {v, where_ + "." + k};
  }
  Grid2D grid(const std::string& n_key, const std::string& l_key, Vec2 center = {}) const {
    Grid2D g{integer(n_key), positive(l_key), center};
    try {
      g.validate();
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where_ + ": " + e.what());
    }
    return g;
  }
  ProfileOptions profile_options() const {
    const Params p = sub("profile");
    ProfileOptions o;
    o.r_max = p.positive("r_max");
    o.points = p.integer("points");
    o.tol = p.positive("tol");
    o.validate();
    return o;
  }
  void require(bool ok, const std::string& what) const {
    if (!ok) throw InvalidArgument(where_ + ": " + what);
  }

 private:
  const json& j_;
  std::string where_;
};

void reject_unknown(const json& given, const json& defaults, const std::string& where) {
  for (const auto& [k, v] : given.items()) {
    if (!defaults.contains(k)) throw InvalidArgument(where + ": unknown parameter '" + k + "'");
    if (defaults.at(k).is_object()) {
      if (!v.is_object()) throw InvalidArgument(where + ": '" + k + "' must be an object");
      reject_unknown(v, defaults.at(k), where + "." + k);
    }
  }
}

json profile_defaults() { return {{"r_max", 20.0}, {"points", 4096}, {"tol", 1e-12}}; }

std::string label(double alpha) {
  const double k = alpha / kPi;
  std::ostringstream os;
  if (std::abs(k - std::round(k)) < 1e-9 && std::round(k) >= 1.0) {
    if (std::round(k) != 1.0) os << std::round(k);
    os << "pi";
  } else {
    os << alpha;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// small numerics

double l1(const Field2D& f) { return norm_lpm(f, {1.0, 0.0}); }
double l43(const Field2D& f) { return norm_lpm(f, {4.0 / 3.0, 0.0}); }

Field2D heat_gaussian(const Grid2D& g, double mass, double t, Vec2 c = {}) {
  return Field2D::from_function(g, [=](double x, double y) {
    const double r2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
    return mass / (4.0 * kPi * t) * std::exp(-r2 / (4.0 * t));
  });
}

double radial_abs_mass(const std::vector<double>& r, std::vector<double> v) {
  for (double& x : v) x = std::abs(x);
  return radial_mass({r, std::move(v)});
}

// least squares slope of y against x
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

// f(r) cos(n theta) on the grid
Field2D angular(const SelfSimilarProfile& p, const Grid2D& g, const BasisFunction& b) {
  const RadialInterpolant f(p.r, b.values, Interpolation::quintic_spline, b.n % 2 ? -1 : 1);
  return Field2D::from_function(g, [&](double x, double y) {
    const double r = std::hypot(x, y);
    return r == 0.0 ? (b.n == 0 ? f(0.0) : 0.0) : f(r) * std::cos(b.n * std::atan2(y, x));
  });
}

// int f^2 / G over the grid where G is above the direct-call floor
double weighted_square(const Field2D& f, const Field2D& G, double G0) {
  double q = 0.0;
  for (std::size_t i = 0; i < f.values().size(); ++i)
    if (G.values()[i] >= kProfileFloor * G0) q += f.values()[i] * f.values()[i] / G.values()[i];
  return q * f.grid().cell_area();
}

Trajectory run_or_partial(const std::function<Trajectory()>& run) {
  try {
    return run();
  } catch (const CFLCollapse& e) {
    Trajectory t = e.partial();
    t.stopped_early = true;
    t.stop_reason = e.what();
    return t;
  }
}

// ---------------------------------------------------------------------------
// check bookkeeping

class Book {
 public:
  explicit Book(RunReport& r) : r_(r) {}

  void add(CheckRecord c) { r_.checks.push_back(std::move(c)); }
  void check(const std::string& name, const std::string& statement, double measured, double expected,
             double tol, Comparison c) {
    add(CheckRecord::make(name, statement, measured, expected, tol, c));
  }
  void flag(const std::string& name, const std::string& statement, bool ok) {
    check(name, statement, ok ? 1.0 : 0.0, 1.0, 0.0, Comparison::abs);
  }
  /// Runs a group of checks; an exception turns into one failed record.
  void group(const std::string& name, const std::string& statement, const std::function<void()>& body) {
    try {
      body();
    } catch (const Error& e) {
      add(CheckRecord::failure(name, statement, e.what()));
    } catch (const std::exception& e) {
      add(CheckRecord::failure(name, statement, std::string("std::exception: ") + e.what()));
    }
  }
  void series(Series s) { r_.series.push_back(std::move(s)); }
  void field(std::string name, Field2D f) { r_.fields.emplace_back(std::move(name), std::move(f)); }

 private:
  RunReport& r_;
};

// ---------------------------------------------------------------------------
// profile_suite

json profile_suite_defaults() {
  return {{"alphas", {"pi", "4pi", "7pi"}},
          {"mass_tol", 1e-8},
          {"virial_tol", 1e-5},
          {"virial_value_alpha", "4pi"},
          {"tail_alpha", "4pi"},
          {"tail_window", {8.0, 12.0}},
          {"tail_tol", 0.05},
          {"small_alphas", {0.2, 0.1, 0.05}},
          {"small_spread", 0.25},
          {"lipschitz_alpha", "4pi"},
          {"lipschitz_steps", {0.1, 0.01}},
          {"lipschitz_factor", 1.5},
          {"zero_mode_alpha", "4pi"},
          {"zero_mode_h", 1e-3},
          {"zero_mode_mass_tol", 1e-4},
          {"zero_mode_residual_tol", 1e-3},
          {"zero_mode_rmax", 10.0},
          {"zero_mode_stride", 3},
          {"zero_mode_weight", 5.0},
          {"profile", profile_defaults()}};
}

void check_mass_range(const Params& P, const std::vector<double>& as, const std::string& key) {
  for (double a : as) P.require(a > 0.0 && a <= kMaxProfileMass, "'" + key + "' masses must lie in (0, 7.9 pi]");
}

void profile_suite(const Params& P, std::uint64_t, Book& book, bool dry) {
  const auto opts = P.profile_options();
  const auto alphas = P.masses("alphas");
  check_mass_range(P, alphas, "alphas");
  const double mtol = P.positive("mass_tol"), vtol = P.positive("virial_tol");
  const double va = P.mass("virial_value_alpha"), ta = P.mass("tail_alpha");
  const auto window = P.nums("tail_window");
  P.require(window.size() == 2 && window[0] > 0 && window[1] > window[0] && window[1] < opts.r_max,
            "tail_window must be [lo, hi] inside the profile table");
  const double ttol = P.positive("tail_tol");
  const auto small = P.masses("small_alphas");
  check_mass_range(P, small, "small_alphas");
  P.require(small.size() >= 2, "small_alphas needs two masses");
  const double sspread = P.positive("small_spread");
  const double la = P.mass("lipschitz_alpha");
  const auto steps = P.nums("lipschitz_steps");
  for (double h : steps) P.require(h > 0.0 && la + h <= kMaxProfileMass, "lipschitz_steps out of range");
  const double lfac = P.positive("lipschitz_factor");
  const double za = P.mass("zero_mode_alpha"), zh = P.positive("zero_mode_h");
  const double zmt = P.positive("zero_mode_mass_tol"), zrt = P.positive("zero_mode_residual_tol");
  const double zr = P.positive("zero_mode_rmax"), zw = P.num("zero_mode_weight");
  const int zs = P.integer("zero_mode_stride");
  check_mass_range(P, {va, ta, la, za}, "single");
  P.require(zs >= 1, "zero_mode_stride must be >= 1");
  if (dry) return;

  auto& cache = ProfileCache::global();
  Series table{"profiles", {"r"}, {}};
  std::vector<std::shared_ptr<const SelfSimilarProfile>> ps;
  for (double a : alphas) {
    const std::string L = label(a);
    book.group("profile.mass." + L, "profile mass equals alpha", [&] {
      auto p = cache.get(a, opts);
      ps.push_back(p);
      book.check("profile.mass." + L, "profile mass equals alpha", std::abs(radial_mass(p->G_field()) - a) / a, 0.0,
                 mtol, Comparison::at_most);
      book.check("profile.virial." + L, "second moment equals 4 alpha (1 - alpha / 8 pi)", p->virial_error(), 0.0, vtol,
                 Comparison::at_most);
    });
  }
  if (!ps.empty() && ps.size() == alphas.size()) {
    for (std::size_t i = 0; i < ps.front()->r.size(); i += 4) {
      std::vector<double> row{ps.front()->r[i]};
      for (const auto& p : ps) row.push_back(p->G[i]);
      table.rows.push_back(std::move(row));
    }
    for (double a : alphas) table.columns.push_back("G_" + label(a));
    book.series(std::move(table));
  }

  book.group("profile.virial_value", "second moment at the reference mass", [&] {
    auto p = cache.get(va, opts);
    book.check("profile.virial_value", "second moment at the reference mass", p->second_moment(),
               4.0 * va * (1.0 - va / kCriticalMass), vtol, Comparison::rel);
  });

  book.group("profile.tail_slope", "log(G e^{r^2/4}) decays with slope -alpha / 2 pi", [&] {
    auto p = cache.get(ta, opts);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < p->r.size(); ++i)
      if (p->r[i] >= window[0] && p->r[i] <= window[1]) {
        x.push_back(std::log(p->r[i]));
        y.push_back(std::log(p->G[i]) + p->r[i] * p->r[i] / 4.0);
      }
    book.check("profile.tail_slope", "log(G e^{r^2/4}) decays with slope -alpha / 2 pi", slope(x, y),
               -ta / (2.0 * kPi), ttol, Comparison::abs);
  });

  book.group("profile.small_mass", "|G_alpha - alpha G|_1 / alpha^2 is stable as alpha -> 0", [&] {
    std::vector<double> q;
    Series s{"small_mass", {"alpha", "distance_over_alpha2"}, {}};
    for (double a : small) {
      auto p = cache.get(a, opts);
      std::vector<double> d(p->r.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = p->G[i] - a * standard_gaussian(p->r[i]);
      q.push_back(radial_abs_mass(p->r, d) / (a * a));
      s.rows.push_back({a, q.back()});
    }
    book.series(std::move(s));
    book.check("profile.small_mass", "|G_alpha - alpha G|_1 / alpha^2 is stable as alpha -> 0", spread(q) - 1.0, 0.0,
               sspread, Comparison::at_most);
  });

  book.group("profile.lipschitz", "|G_alpha - G_beta|_1 / |alpha - beta| is stable", [&] {
    std::vector<double> q;
    Series s{"profile_lipschitz", {"step", "quotient"}, {}};
    for (double h : steps) {
      q.push_back(profile_lipschitz(la, la + h, opts) / h);
      s.rows.push_back({h, q.back()});
    }
    book.series(std::move(s));
    book.check("profile.lipschitz", "|G_alpha - G_beta|_1 / |alpha - beta| is stable", spread(q), 1.0, lfac - 1.0,
               Comparison::at_most);
  });

  book.group("profile.zero_mode", "the mass derivative of G_alpha is a zero mode of the linearization", [&] {
    const RadialField e = zero_mode(za, zh, opts);
    book.check("profile.zero_mode_mass", "the zero mode has unit mass", radial_mass(e), 1.0, zmt, Comparison::abs);
    auto p = cache.get(za, opts);
    const auto r = aligned_mode_nodes(*p, zr, zs);
    const auto op = assemble(OperatorKind::linearized, 0, p.get(), r);
    const RadialInterpolant E(e.nodes, e.values);
    RadialField en{r, std::vector<double>(r.size())};
    for (std::size_t i = 0; i < r.size(); ++i) en.values[i] = E(r[i]);
    const double res = norm_lpm(op.apply(en), {2.0, zw}) / norm_lpm(en, {2.0, zw});
    book.check("profile.zero_mode_residual", "the zero mode is annihilated by the linearization", res, 0.0, zrt,
               Comparison::at_most);
  });
}

// ---------------------------------------------------------------------------
// spectrum_suite

json spectrum_suite_defaults() {
  return {{"translation_alphas", {"pi", "4pi"}},
          {"translation_tol", 1e-3},
          {"gap_alphas", {"pi", "2pi", "4pi", "6pi", "7pi"}},
          {"modes", {0, 1, 2, 3, 4}},
          {"gap_min", 0.01},
          {"small_alpha", 0.1},
          {"small_modes", {0, 1, 2, 3, 4}},
          {"small_gap", 0.5},
          {"small_gap_rel", 0.1},
          {"shoot_alpha", "4pi"},
          {"shoot_rmax", 12.0},
          {"shoot_reference_tol", 1e-5},
          {"mode_points", 769},
          {"mode_rmax", 10.0},
          {"kernel_grid", 256},
          {"kernel_half_width", 16.0},
          {"kernel_tau", 1.0},
          {"kernel_max_dt", 0.05},
          {"kernel_tol", 1e-4},
          {"semigroup_split", 0.4},
          {"semigroup_tol", 1e-12},
          {"profile", profile_defaults()}};
}

void spectrum_suite(const Params& P, std::uint64_t, Book& book, bool dry) {
  const auto opts = P.profile_options();
  const auto ta = P.masses("translation_alphas");
  const auto ga = P.masses("gap_alphas");
  check_mass_range(P, ta, "translation_alphas");
  check_mass_range(P, ga, "gap_alphas");
  const double ttol = P.positive("translation_tol"), gmin = P.num("gap_min");
  const auto modes = P.ints("modes"), small_modes = P.ints("small_modes");
  for (int n : modes) P.require(n >= 0, "modes must be >= 0");
  for (int n : small_modes) P.require(n >= 0, "small_modes must be >= 0");
  const double sa = P.mass("small_alpha"), sg = P.positive("small_gap"), sgr = P.positive("small_gap_rel");
  const double sha = P.mass("shoot_alpha"), shr = P.positive("shoot_rmax"), shtol = P.positive("shoot_reference_tol");
  check_mass_range(P, {sa, sha}, "single");
  const int mp = P.integer("mode_points");
  const double mr = P.positive("mode_rmax");
  P.require(mp >= 256, "mode_points must be >= 256");
  const Grid2D kg = P.grid("kernel_grid", "kernel_half_width");
  const double ktau = P.positive("kernel_tau"), kdt = P.positive("kernel_max_dt"), ktol = P.positive("kernel_tol");
  const double split = P.positive("semigroup_split"), stol = P.positive("semigroup_tol");
  P.require(split < ktau, "semigroup_split must lie inside (0, kernel_tau)");
  if (dry) return;

  auto& cache = ProfileCache::global();
  const auto nodes = default_mode_nodes(mp, mr);

  for (double a : ta) {
    const std::string name = "spectrum.translation." + label(a);
    book.group(name, "the n = 1 linearization has the translation eigenvalue -1/2", [&] {
      auto p = cache.get(a, opts);
      const SpectrumReport s = spectrum(assemble(OperatorKind::linearized, 1, p.get(), nodes), 8);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& l : s.eigenvalues) best = std::min(best, std::abs(l - std::complex<double>(-0.5, 0.0)));
      book.check(name, "the n = 1 linearization has the translation eigenvalue -1/2", best, 0.0, ttol,
                 Comparison::at_most);
    });
  }

  Series gaps{"gaps", {"alpha", "mode", "gap"}, {}};
  for (double a : ga) {
    const std::string name = "spectrum.gap." + label(a);
    book.group(name, "mean-zero eigenvalues have real part <= -gap_min in every mode", [&] {
      auto p = cache.get(a, opts);
      const GapSummary g = linearized_gap(*p, modes, nodes);
      for (const auto& m : g.modes) gaps.rows.push_back({a, static_cast<double>(m.n), m.gap});
      book.check(name, "mean-zero eigenvalues have real part <= -gap_min in every mode", g.K, gmin, 0.0,
                 Comparison::at_least);
    });
  }
  book.series(std::move(gaps));

  book.group("spectrum.small_mass_gap", "the gap tends to 1/2 as alpha -> 0", [&] {
    auto p = cache.get(sa, opts);
    const GapSummary g = linearized_gap(*p, small_modes, nodes);
    book.check("spectrum.small_mass_gap", "the gap tends to 1/2 as alpha -> 0", g.K, sg, sgr, Comparison::rel);
  });

  book.group("shoot", "elliptic mode rigidity for Delta h + G h = 0", [&] {
    auto p = cache.get(sha, opts);
    const ShootReport s0 = elliptic_mode_shoot(*p, 0, shr);
    const ShootReport s1 = elliptic_mode_shoot(*p, 1, shr);
    const ShootReport s2 = elliptic_mode_shoot(*p, 2, shr);
    book.flag("shoot.n0_logarithmic", "the regular n = 0 solution grows logarithmically", s0.growth == "logarithmic");
    book.flag("shoot.n1_negative_linear", "the regular n = 1 solution is negative and grows linearly",
              s1.growth == "linear" && s1.sign_definite && s1.f.back() < 0.0);
    book.flag("shoot.n2_unbounded", "the regular n = 2 solution is unbounded", s2.unbounded);
    book.check("shoot.n0_reference", "n = 0 solution matches E^0 / G", s0.reference_deviation, 0.0, shtol,
               Comparison::at_most);
    book.check("shoot.n1_reference", "n = 1 solution matches G' / G", s1.reference_deviation, 0.0, shtol,
               Comparison::at_most);
    Series s{"shoot", {"r", "n0", "n1", "n2"}, {}};
    for (std::size_t i = 0; i < s0.r.size() && i < s1.r.size() && i < s2.r.size(); i += 8)
      s.rows.push_back({s0.r[i], s0.f[i], s1.f[i], s2.f[i]});
    book.series(std::move(s));
  });

  book.group("kernel", "explicit Fokker-Planck kernel", [&] {
    const Field2D f0 = Field2D::from_function(kg, [](double x, double y) {
      return std::exp(-((x - 1) * (x - 1) + y * y) / 2) +
             0.5 * std::exp(-((x + 1) * (x + 1) + (y - 0.5) * (y - 0.5)) / 0.5);
    });
    SolverConfig cfg;
    cfg.max_dt = kdt;
    const Trajectory tr = evolve_similarity(f0, 0.0, ktau, cfg, nullptr, false);
    const Field2D exact = fp_kernel_apply(f0, ktau, 0.0);
    book.check("kernel.oracle", "time-stepped Fokker-Planck flow equals the explicit kernel",
               l1(tr.final_state - exact) / l1(f0), 0.0, ktol, Comparison::at_most);
    const Field2D twice = fp_kernel_apply(fp_kernel_apply(f0, split, 0.0), ktau, split);
    book.check("kernel.semigroup", "the kernel composes as a semigroup", (twice - exact).max_abs() / exact.max_abs(), 0.0,
               stol, Comparison::at_most);
  });
}

// ---------------------------------------------------------------------------
// energy_suite

json energy_suite_defaults() {
  return {{"alphas", {"2pi", "4pi", "6pi"}},
          {"basis_size", 12},
          {"max_mode", 2},
          {"grid", 512},
          {"half_width", 32.0},
          {"random_samples", 4},
          {"dissipation_alpha", "4pi"},
          {"dissipation_tol", 1e-6},
          {"profile", profile_defaults()}};
}

void energy_suite(const Params& P, std::uint64_t seed, Book& book, bool dry) {
  const auto opts = P.profile_options();
  const auto alphas = P.masses("alphas");
  check_mass_range(P, alphas, "alphas");
  const int size = P.integer("basis_size"), max_mode = P.integer("max_mode");
  P.require(size >= 8, "basis_size must be >= 8");
  P.require(max_mode >= 0 && max_mode <= 8, "max_mode must lie in [0, 8]");
  const Grid2D g = P.grid("grid", "half_width");
  const int samples = P.integer("random_samples");
  P.require(samples >= 0, "random_samples must be >= 0");
  const double da = P.mass("dissipation_alpha"), dtol = P.positive("dissipation_tol");
  check_mass_range(P, {da}, "dissipation_alpha");
  if (dry) return;

  auto& cache = ProfileCache::global();
  std::mt19937_64 rng(seed);
  Series cs{"coercivity", {"alpha", "C"}, {}};
  for (double a : alphas) {
    const std::string L = label(a);
    book.group("energy.coercivity." + L, "coercivity constant and inequality", [&] {
      auto p = cache.get(a, opts);
      const CoercivityResult c = coercivity_constant(*p, size, max_mode);
      cs.rows.push_back({a, c.C});
      // C in (0, 1): centered check with the open interval's half width
      book.check("energy.coercivity." + L, "the coercivity constant lies in (0, 1)", c.C, 0.5,
                 0.5 * (1.0 - 1e-12), Comparison::abs);

      const Field2D G = profile_on_grid(*p, g);
      const double G0 = p->G.front();
      const auto basis = coercivity_basis(*p, size, max_mode);
      std::vector<Field2D> fs;
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& b : basis) {
        fs.push_back(angular(*p, g, b));
        const double q = weighted_square(fs.back(), G, G0);
        worst = std::min(worst, (2.0 * linearized_energy(fs.back(), *p).F - (1.0 - c.C) * q) / q);
      }
      book.check("energy.inequality." + L, "(1 - C) int f^2/G <= 2 F~(f) on every basis element", worst, 0.0, 0.0,
                 Comparison::at_least);

      // random elements of the span
      std::uniform_real_distribution<double> coef(-1.0, 1.0);
      double worst_span = std::numeric_limits<double>::infinity();
      for (int s = 0; s < samples; ++s) {
        std::vector<double> v(g.size(), 0.0);
        for (const Field2D& f : fs) {
          const double w = coef(rng);
          for (std::size_t i = 0; i < v.size(); ++i) v[i] += w * f.values()[i];
        }
        const Field2D f(g, std::move(v));
        const double q = weighted_square(f, G, G0);
        worst_span = std::min(worst_span, (2.0 * linearized_energy(f, *p).F - (1.0 - c.C) * q) / q);
      }
      if (samples > 0)
        book.check("energy.random_span." + L, "the inequality holds on random mean-zero combinations", worst_span, 0.0,
                   0.0, Comparison::at_least);
    });
  }
  book.series(std::move(cs));

  book.group("energy.translation_dissipation", "D = F~ on the translation mode", [&] {
    auto p = cache.get(da, opts);
    const auto dG = p->dG();
    const RadialInterpolant dGr(p->r, dG, Interpolation::quintic_spline, -1);
    const Field2D f = Field2D::from_function(g, [&](double x, double y) {
      const double r = std::hypot(x, y);
      return r == 0.0 ? 0.0 : dGr(r) * x / r;
    });
    const LinearizedEnergy e = linearized_energy(f, *p);
    book.check("energy.translation_dissipation", "D = F~ on the translation mode, which decays like e^{-tau/2}",
               e.D / e.F, 1.0, dtol, Comparison::rel);
  });
}

// ---------------------------------------------------------------------------
// self_similarity

json self_similarity_defaults() {
  return {{"alpha", "4pi"},
          {"grid", 512},
          {"half_width", 32.0},
          {"t0", 1.0},
          {"span", 4.0},
          {"rtol", 1e-4},
          {"cadence", 10},
          {"tol", 0.02},
          {"mass_tol", 1e-8},
          {"positivity_tol", 1e-8},
          {"nse_alpha", "4pi"},
          {"nse_grid", 256},
          {"nse_half_width", 36.0},
          {"nse_rtol", 1e-6},
          {"profile", profile_defaults()}};
}

void self_similarity(const Params& P, std::uint64_t, Book& book, bool dry) {
  const auto opts = P.profile_options();
  const double a = P.mass("alpha");
  check_mass_range(P, {a}, "alpha");
  const Grid2D g = P.grid("grid", "half_width");
  const double t0 = P.positive("t0"), span = P.positive("span");
  P.require(span > 1.0, "span must exceed 1");
  const double rtol = P.num("rtol"), tol = P.positive("tol");
  const int cadence = P.integer("cadence");
  P.require(cadence >= 1 && rtol >= 0.0, "cadence >= 1 and rtol >= 0 required");
  const double mtol = P.positive("mass_tol"), ptol = P.positive("positivity_tol");
  const double na = P.mass("nse_alpha");
  const Grid2D ng = P.grid("nse_grid", "nse_half_width");
  const double nrtol = P.num("nse_rtol");
  if (dry) return;

  Series s{"self_similarity", {"model", "t", "scaled_error", "scaled_sup"}, {}};
  book.group("selfsim.pks", "PKS run from a rescaled profile stays self-similar", [&] {
    auto p = ProfileCache::global().get(a, opts);
    SolverConfig cfg;
    cfg.t_start = t0;
    cfg.t_end = span * t0;
    cfg.rtol = rtol;
    cfg.cadence = cadence;
    cfg.store_fields = true;
    const Trajectory tr = evolve_physical(sample_profile(*p, t0, {}, g), cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const double t = tr.times[i];
      const double e = t * (tr.fields[i] - sample_profile(*p, t, {}, g)).max_abs() / p->G.front();
      worst = std::max(worst, e);
      s.rows.push_back({0.0, t, e, t * tr.fields[i].max()});
    }
    book.check("selfsim.pks", "sup_t t|u - U_self-similar|_inf / |G|_inf", worst, 0.0, tol, Comparison::at_most);
    const auto& d = tr.diagnostics;
    double drift = 0.0, neg = 0.0, hyper = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      drift = std::max(drift, std::abs(d.mass[i] - d.mass.front()) / d.mass.front());
      neg = std::max(neg, -d.min[i] / d.sup[i]);
      hyper = std::max(hyper, d.scaled_sup[i]);
    }
    book.check("selfsim.pks_mass", "mass is conserved", drift, 0.0, mtol, Comparison::at_most);
    book.check("selfsim.pks_positivity", "min u >= -tol max u", neg, 0.0, ptol, Comparison::at_most);
    book.check("selfsim.pks_hypercontractive", "sup_t t|u|_inf is finite and equals |G|_inf", hyper / p->G.front(), 1.0,
               tol, Comparison::rel);
    book.field("pks_final", tr.final_state);
  });

  book.group("selfsim.nse", "Oseen vortex stays self-similar", [&] {
    SolverConfig cfg;
    cfg.model = Model::nse;
    cfg.t_start = t0;
    cfg.t_end = span * t0;
    cfg.rtol = nrtol;
    cfg.cadence = cadence;
    cfg.store_fields = true;
    const Trajectory tr = evolve_physical(heat_gaussian(ng, na, t0), cfg);
    const double peak = na / (4.0 * kPi);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const double t = tr.times[i];
      const double e = t * (tr.fields[i] - heat_gaussian(ng, na, t)).max_abs() / peak;
      worst = std::max(worst, e);
      s.rows.push_back({1.0, t, e, t * tr.fields[i].max()});
    }
    book.check("selfsim.nse", "sup_t t|omega - Oseen|_inf / |Oseen profile|_inf", worst, 0.0, tol, Comparison::at_most);
  });
  book.series(std::move(s));
}

// ---------------------------------------------------------------------------
// attractor

json attractor_defaults() {
  return {{"alpha", "4pi"},
          {"grid", 256},
          {"half_width", 18.0},
          {"tau_span", 8.0},
          {"max_dt", 0.05},
          {"rtol", 1e-6},
          {"cadence", 1},
          {"target", 0.1},
          {"fit_window", {4.0, 8.0}},
          {"rate_factor", 2.0},
          {"energy_slack", 1e-8},
          {"mass_tol", 1e-8},
          {"mode_points", 769},
          {"mode_rmax", 10.0},
          {"profile", profile_defaults()}};
}

void attractor(const Params& P, std::uint64_t, Book& book, bool dry) {
  const auto opts = P.profile_options();
  const double a = P.mass("alpha");
  check_mass_range(P, {a}, "alpha");
  const Grid2D g = P.grid("grid", "half_width");
  const double span = P.positive("tau_span"), max_dt = P.positive("max_dt"), rtol = P.num("rtol");
  const int cadence = P.integer("cadence");
  P.require(cadence >= 1 && rtol >= 0.0, "cadence >= 1 and rtol >= 0 required");
  const double target = P.positive("target"), factor = P.positive("rate_factor"), slack = P.num("energy_slack");
  const double mtol = P.positive("mass_tol");
  const auto window = P.nums("fit_window");
  P.require(window.size() == 2 && window[0] >= 0.0 && window[1] > window[0] && window[1] <= span,
            "fit_window must be [lo, hi] inside [0, tau_span]");
  P.require(factor > 1.0, "rate_factor must exceed 1");
  const int mp = P.integer("mode_points");
  const double mr = P.positive("mode_rmax");
  if (dry) return;

  book.group("attractor", "relaxation of a Gaussian to G_alpha", [&] {
    auto p = ProfileCache::global().get(a, opts);
    const Field2D w0 = Field2D::from_function(g, [a](double x, double y) { return a * standard_gaussian(std::hypot(x, y)); });
    SolverConfig cfg;
    cfg.max_dt = max_dt;
    cfg.rtol = rtol;
    cfg.cadence = cadence;
    const Trajectory tr = evolve_similarity(w0, 0.0, span, cfg, p.get());
    const auto& d = tr.diagnostics;

    Series s{"attractor", {"tau", "l1_distance", "free_energy", "sup"}, {}};
    std::vector<double> x, y;
    double rise = 0.0, drift = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      s.rows.push_back({d.time[i], d.reference_l1[i], d.energy[i], d.sup[i]});
      if (d.time[i] >= window[0] && d.time[i] <= window[1]) {
        x.push_back(d.time[i]);
        y.push_back(std::log(d.reference_l1[i]));
      }
      if (i > 0) rise = std::max(rise, (d.energy[i] - d.energy[i - 1]) / std::max(1.0, std::abs(d.energy[i - 1])));
      drift = std::max(drift, std::abs(d.mass[i] - d.mass.front()) / d.mass.front());
    }
    book.series(std::move(s));
    book.field("final", tr.final_state);

    book.check("attractor.l1_ratio", "|w - G_alpha|_1 drops below the target fraction of its initial value",
               d.reference_l1.back() / d.reference_l1.front(), 0.0, target, Comparison::at_most);
    book.check("attractor.energy_monotone", "similarity free energy is non-increasing (relative rise per step)", rise,
               0.0, slack, Comparison::at_most);
    book.check("attractor.mass", "mass is conserved", drift, 0.0, mtol, Comparison::at_most);

    // radial data only excites n = 0
    const GapSummary gap = linearized_gap(*p, {0}, default_mode_nodes(mp, mr));
    const double rate = x.size() >= 2 ? -slope(x, y) : std::numeric_limits<double>::quiet_NaN();
    book.series({"attractor_rate", {"fitted_rate", "radial_gap"}, {{rate, gap.K}}});
    book.check("attractor.rate_vs_gap", "|log2(fitted rate / radial gap)| within log2(rate_factor)",
               std::abs(std::log2(rate / gap.K)), 0.0, std::log2(factor), Comparison::at_most);
  });
}

// ---------------------------------------------------------------------------
// lipschitz

json lipschitz_defaults() {
  return {{"alpha", "4pi"},
          {"bump", {{"center", {0.5, 0.25}}, {"mass", 2.0}, {"width", 0.15}}},
          {"deltas", {1e-2, 1e-3, 1e-4}},
          {"grid", 512},
          {"half_width", 6.0},
          {"t0", 0.02},
          {"t_end", 0.05},
          {"fixed_dt", 5e-4},
          {"filter", "exponential"},
          {"factor", 2.0},
          {"zero_tol", 1e-12},
          {"profile", profile_defaults()}};
}

void lipschitz(const Params& P, std::uint64_t, Book& book, bool dry) {
  const auto opts = P.profile_options();
  const double a = P.mass("alpha");
  check_mass_range(P, {a}, "alpha");
  const Params B = P.sub("bump");
  const GaussianBump bump{B.point("center"), B.positive("mass"), B.positive("width")};
  const auto deltas = P.nums("deltas");
  for (double d : deltas) P.require(d > 0.0 && a + d <= kMaxProfileMass, "deltas must be positive and keep alpha + delta < 7.9 pi");
  const Grid2D g = P.grid("grid", "half_width");
  const double t0 = P.positive("t0"), t1 = P.positive("t_end"), dt = P.positive("fixed_dt");
  P.require(t1 > t0, "t_end must exceed t0");
  const Filter filter = filter_from_string(P.str("filter"));
  const double factor = P.positive("factor"), ztol = P.positive("zero_tol");
  P.require(factor > 1.0, "factor must exceed 1");
  if (dry) return;

  SolverConfig cfg;
  cfg.t_start = t0;
  cfg.t_end = t1;
  cfg.fixed_dt = dt;
  cfg.filter = filter;
  cfg.store_fields = true;
  cfg.energy = false;
  const auto provider = cached_profiles(opts);
  auto solve = [&](double delta) {
    const MeasureData mu({{{0.0, 0.0}, a + delta}}, {{bump.center, bump.mass + delta, bump.width}}, std::nullopt, true);
    return evolve_physical(regularize(decompose(mu), t0, g, Model::pks, provider), cfg);
  };
  // Delta(T) = sup_t |u1 - u2|_1 + t^{1/4} |u1 - u2|_{4/3}
  auto distance = [](const Trajectory& x, const Trajectory& y) {
    if (x.times != y.times) throw InvalidArgument("lipschitz runs must share their time grid");
    double worst = 0.0;
    for (std::size_t i = 0; i < x.times.size(); ++i) {
      const Field2D d = x.fields[i] - y.fields[i];
      worst = std::max(worst, l1(d) + std::pow(x.times[i], 0.25) * l43(d));
    }
    return worst;
  };

  book.group("lipschitz", "Lipschitz dependence on the initial measure", [&] {
    const Trajectory base = solve(0.0);
    book.check("lipschitz.zero_control", "identical data gives Delta = 0", distance(base, solve(0.0)), 0.0, ztol,
               Comparison::at_most);
    Series s{"lipschitz", {"delta", "Delta", "ratio"}, {}};
    std::vector<double> ratios;
    for (double d : deltas) {
      const double D = distance(base, solve(d));
      ratios.push_back(D / d);
      s.rows.push_back({d, D, D / d});
    }
    book.series(std::move(s));
    book.check("lipschitz.ratio_spread", "Delta(T) / delta is stable across the delta ladder", spread(ratios), 1.0,
               factor - 1.0, Comparison::at_most);
  });
}

// ---------------------------------------------------------------------------
// critical_mass

json critical_mass_defaults() {
  return {{"kappa", 0.1},
          {"bounded",
           {{"mass", "7pi"},
            {"grid", 256},
            {"half_width", 16.0},
            {"tau_span", std::log(10.0)},
            {"max_dt", 0.05},
            {"rtol", 1e-4},
            {"filter", "exponential"},
            {"factor", 3.0}}},
          {"collapse",
           {{"mass", "10pi"},
            {"t0", 0.01},
            {"grid", 512},
            {"half_width", 2.0},
            {"rtol", 1e-4},
            {"filter", "exponential"},
            {"tail_tolerance", 1e-4},
            {"stop_sup_factor", 60.0},
            {"horizon", 2.0}}},
          {"detector", {{"sup_factor", 50.0}, {"mass_fraction", 0.9}}}};
}

void critical_mass(const Params& P, std::uint64_t, Book& book, bool dry) {
  const double kappa = P.positive("kappa");
  const Params Bp = P.sub("bounded"), Cp = P.sub("collapse"), Dp = P.sub("detector");
  const double bm = Bp.mass("mass");
  Bp.require(bm > 0.0 && bm < kCriticalMass, "bounded mass must be subcritical");
  const Grid2D bg = Bp.grid("grid", "half_width");
  const double bspan = Bp.positive("tau_span"), bdt = Bp.positive("max_dt"), brtol = Bp.num("rtol");
  const Filter bf = filter_from_string(Bp.str("filter"));
  const double bfac = Bp.positive("factor");
  const double cm = Cp.mass("mass");
  Cp.require(cm > kCriticalMass, "collapse mass must be supercritical");
  const double ct0 = Cp.positive("t0");
  const Grid2D cg = Cp.grid("grid", "half_width");
  const double crtol = Cp.num("rtol"), ctail = Cp.positive("tail_tolerance"), cstop = Cp.positive("stop_sup_factor");
  const Filter cf = filter_from_string(Cp.str("filter"));
  const double horizon = Cp.positive("horizon");
  Cp.require(horizon > 1.0, "horizon must exceed 1 (multiple of the virial bound)");
  BlowupCriteria crit{Dp.positive("sup_factor"), Dp.positive("mass_fraction")};
  if (dry) return;

  book.group("critical.bounded", "subcritical mass stays bounded", [&] {
    // M Gamma_kappa in similarity variables: t|u|_inf starts at M / (4 pi kappa)
    const Field2D w0 = heat_gaussian(bg, bm, kappa);
    SolverConfig cfg;
    cfg.max_dt = bdt;
    cfg.rtol = brtol;
    cfg.filter = bf;
    cfg.cadence = 5;
    const Trajectory tr = evolve_similarity(w0, 0.0, bspan, cfg);
    const auto& d = tr.diagnostics;
    Series s{"bounded", {"tau", "scaled_sup", "free_energy"}, {}};
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d.size(); ++i) {
      s.rows.push_back({d.time[i], d.scaled_sup[i], d.energy[i]});
      hi = std::max(hi, d.scaled_sup[i]);
      lo = std::min(lo, d.scaled_sup[i]);
    }
    book.series(std::move(s));
    const double init = d.scaled_sup.front();
    book.check("critical.bounded_ratio", "t|u|_inf stays below factor x its initial value over a decade of t",
               hi / init, 0.0, bfac, Comparison::at_most);
    book.check("critical.bounded_floor", "t|u|_inf stays above its initial value / factor", lo / init, 1.0 / bfac, 0.0,
               Comparison::at_least);
    const BlowupVerdict v = detect_blowup(tr, crit);
    book.check("critical.bounded_verdict", "blow-up detector reports bounded", v.blowup ? 1.0 : 0.0, 0.0, 0.0,
               Comparison::abs);
  });

  book.group("critical.collapse", "supercritical mass triggers the blow-up detector", [&] {
    const double t_data = kappa * ct0;
    const Field2D u0 = heat_gaussian(cg, cm, t_data);
    // virial: d/dt M2 = 4M(1 - M / 8 pi), M2(t0) = 4 M kappa t0
    const double m2 = 4.0 * cm * t_data;
    const double bound = ct0 + m2 / (4.0 * cm * (cm / kCriticalMass - 1.0));
    SolverConfig cfg;
    cfg.t_start = ct0;
    cfg.t_end = ct0 + horizon * (bound - ct0);
    cfg.rtol = crtol;
    cfg.filter = cf;
    cfg.tail_tolerance = ctail;
    cfg.stop_sup_factor = cstop;
    const Trajectory tr = run_or_partial([&] { return evolve_physical(u0, cfg); });
    const auto& d = tr.diagnostics;
    Series s{"collapse", {"t", "scaled_sup", "peak_mass", "min_over_max"}, {}};
    for (std::size_t i = 0; i < d.size(); ++i) s.rows.push_back({d.time[i], d.scaled_sup[i], d.peak_mass[i], d.min[i] / d.sup[i]});
    book.series(std::move(s));
    const BlowupVerdict v = detect_blowup(tr, crit);
    book.check("critical.collapse_verdict", "blow-up detector reports blowup", v.blowup ? 1.0 : 0.0, 1.0, 0.0,
               Comparison::abs);
    book.check("critical.collapse_time", "flagged no later than the virial bound on the lifetime", v.time, bound, 0.0,
               Comparison::at_most);
    book.check("critical.collapse_peak_mass", "mass within sqrt t of the peak reaches the detector fraction of 8 pi",
               v.peak_mass, crit.mass_fraction * kCriticalMass, 0.0, Comparison::at_least);
  });
}

// ---------------------------------------------------------------------------
// sn_suite

json sn_suite_defaults() {
  return {{"atoms", json::array({{{"z", {-1.0, 0.0}}, {"mass", "4pi"}}, {{"z", {1.0, 0.0}}, {"mass", "2pi"}}})},
          {"grid", 512},
          {"half_width", 1.0},
          {"nu_offset", {0.05, 0.02}},
          {"nu_age", 1e-4},
          {"ladder", {0.0625, 0.125, 0.25, 0.5}},
          {"factor", 2.0},
          {"heat_tol", 1e-12},
          {"linearity_tol", 1e-12},
          {"linearity_dt", 1e-4},
          {"mass_tol", 1e-10},
          {"decomposition",
           {{"atoms", json::array({{{"z", {-0.5, 0.0}}, {"mass", "4pi"}}, {{"z", {0.5, 0.0}}, {"mass", "2pi"}}})},
            {"bump", {{"center", {0.0, 0.4}}, {"mass", 1.0}, {"width", 0.15}}},
            {"epsilon", 0.5},
            {"grid", 512},
            {"half_width", 4.0},
            {"span", 3.0},
            {"filter", "exponential"},
            {"mass_tol", 1e-6},
            {"start_tol", 1e-12}}},
          {"profile", profile_defaults()}};
}

std::vector<Atom> read_atoms(const Params& P) {
  std::vector<Atom> atoms;
  const json& ja = P.at("atoms");
  P.require(ja.is_array() && ja.size() >= 1, "atoms must be a non-empty array");
  for (std::size_t i = 0; i < ja.size(); ++i) {
    P.require(ja[i].is_object(), "atoms must be objects {z, mass}");
    const Params A(ja[i], "atoms[" + std::to_string(i) + "]");
    atoms.push_back({A.point("z"), A.mass("mass")});
    P.require(atoms.back().mass > 0.0 && atoms.back().mass <= kMaxProfileMass, "atom masses must lie in (0, 7.9 pi]");
  }
  return atoms;
}

void sn_suite(const Params& P, std::uint64_t seed, Book& book, bool dry) {
  const auto opts = P.profile_options();
  const std::vector<Atom> atoms = read_atoms(P);
  const int n = P.integer("grid");
  const double L = P.positive("half_width");
  const Grid2D g{n, L, atoms.front().z};
  g.validate();
  const Vec2 off = P.point("nu_offset");
  const double age = P.positive("nu_age");
  const auto ladder = P.nums("ladder");
  for (double r : ladder) P.require(r > 0.0, "ladder entries must be positive");
  const double factor = P.positive("factor"), htol = P.positive("heat_tol"), ltol = P.positive("linearity_tol");
  const double ldt = P.positive("linearity_dt"), mtol = P.positive("mass_tol");
  const Params D = P.sub("decomposition");
  const std::vector<Atom> datoms = read_atoms(D);
  const Params Db = D.sub("bump");
  const GaussianBump dbump{Db.point("center"), Db.positive("mass"), Db.positive("width")};
  const double eps = D.positive("epsilon");
  const Grid2D dg = D.grid("grid", "half_width");
  const Filter dfilter = filter_from_string(D.str("filter"));
  const double dspan = D.positive("span"), dmtol = D.positive("mass_tol"), dstol = D.positive("start_tol");
  D.require(dspan > 1.0, "span must exceed 1");
  if (dry) return;

  const auto provider = cached_profiles(opts);
  const MeasureData atomic(atoms, {}, std::nullopt, true);
  const Vec2 zc{atoms.front().z.x + off.x, atoms.front().z.y + off.y};

  book.group("sn.hypercontractivity", "(t - s)^{1/4} |S_N(t, s) nu|_{4/3} is bounded on the dyadic ladder", [&] {
    const DecompositionResult d = decompose(atomic);
    const double t0 = default_start_time(d);
    const Field2D nu = heat_gaussian(g, 1.0, age, zc);
    SolverConfig cfg;
    cfg.energy = false;
    Series s{"sn_ladder", {"t_minus_s", "scaled_l43"}, {}};
    std::vector<double> v;
    for (double r : ladder) {
      const double h = r * t0;
      const Field2D out = sn_propagate(nu, t0, t0 + h, d.atoms, cfg, provider);
      v.push_back(std::pow(h, 0.25) * l43(out));
      s.rows.push_back({h, v.back()});
    }
    book.series(std::move(s));
    book.check("sn.hypercontractivity", "(t - s)^{1/4} |S_N(t, s) nu|_{4/3} is bounded on the dyadic ladder",
               spread(v), 1.0, factor - 1.0, Comparison::at_most);
  });

  book.group("sn.heat", "S_N without atoms is the heat semigroup", [&] {
    const Field2D nu = heat_gaussian(g, 1.0, 4.0 * age, zc);
    SolverConfig cfg;
    cfg.energy = false;
    const double s = 0.01, t = 0.02;
    const Field2D out = sn_propagate(nu, s, t, {}, cfg, provider);
    book.check("sn.heat", "S_N without atoms is the heat semigroup", (out - heat_apply(nu, t - s)).max_abs() / nu.max_abs(),
               0.0, htol, Comparison::at_most);
  });

  book.group("sn.linearity", "S_N is linear in the data", [&] {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double a = u(rng), b = u(rng);
    const Vec2 c1{zc.x + 0.05 * u(rng), zc.y + 0.05 * u(rng)}, c2{zc.x + 0.05 * u(rng), zc.y + 0.05 * u(rng)};
    const Field2D f = heat_gaussian(g, 1.0, 4.0 * age, c1), h = heat_gaussian(g, 1.0, 6.0 * age, c2);
    const double t0 = default_start_time(decompose(atomic));
    SolverConfig cfg;
    cfg.energy = false;
    cfg.fixed_dt = ldt;
    const double t1 = t0 + 0.25 * t0;
    const Field2D lhs = sn_propagate(f * a + h * b, t0, t1, atoms, cfg, provider);
    const Field2D rhs = sn_propagate(f, t0, t1, atoms, cfg, provider) * a + sn_propagate(h, t0, t1, atoms, cfg, provider) * b;
    book.check("sn.linearity", "S_N(a f + b h) = a S_N f + b S_N h", (lhs - rhs).max_abs() / lhs.max_abs(), 0.0, ltol,
               Comparison::at_most);
    book.check("sn.mass", "S_N conserves mass", std::abs(lhs.mass() - (f * a + h * b).mass()) / (std::abs(a) + std::abs(b)),
               0.0, mtol, Comparison::at_most);
  });

  book.group("decomposition", "solution splits into rescaled profiles plus a remainder", [&] {
    const MeasureData mu(datoms, {dbump}, std::nullopt, true);
    const DecompositionResult d = decompose(mu, eps);
    const MeasureNorms nm = measure_norms(mu), rn = measure_norms(d.remainder);
    double extracted = 0.0;
    for (const Atom& at : d.atoms) extracted += at.mass;
    book.check("decomposition.atoms", "every atom above epsilon is extracted", static_cast<double>(d.atoms.size()),
               static_cast<double>(datoms.size()), 0.0, Comparison::abs);
    book.check("decomposition.split", "atom masses plus remainder mass equal the total variation",
               std::abs(extracted + rn.tv - nm.tv) / nm.tv, 0.0, 1e-14, Comparison::at_most);
    const double t0 = default_start_time(d);
    SolverConfig cfg;
    cfg.t_start = t0;
    cfg.t_end = dspan * t0;
    cfg.filter = dfilter;
    cfg.store_fields = true;
    cfg.energy = false;
    const Trajectory tr = evolve_physical(regularize(d, t0, dg, Model::pks, provider), cfg);
    Series s{"decomposition", {"t", "remainder_mass", "scaled_l43"}, {}};
    double drift = 0.0, start = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const double t = tr.times[i];
      std::vector<double> prof(dg.size(), 0.0);
      for (const Atom& at : d.atoms) add_sampled_profile(*provider(at.mass), t, at.z, dg, prof);
      const Field2D f = tr.fields[i] - Field2D(dg, std::move(prof));
      if (i == 0) {
        DecompositionResult diffuse = d;
        diffuse.atoms.clear();
        const Field2D heat = regularize(diffuse, t0, dg, Model::pks, provider);
        start = l1(f - heat) / l1(heat);
      }
      drift = std::max(drift, std::abs(f.mass() - dbump.mass) / nm.tv);
      // grows as the cores drift toward each other; recorded, not bounded
      s.rows.push_back({t, f.mass(), std::pow(t, 0.25) * l43(f)});
    }
    book.series(std::move(s));
    book.check("decomposition.remainder_start", "at t0 the remainder is the heat-regularized diffuse part", start, 0.0,
               dstol, Comparison::at_most);
    book.check("decomposition.remainder_mass", "the remainder carries exactly the diffuse mass", drift, 0.0, dmtol,
               Comparison::at_most);
  });
}

// ---------------------------------------------------------------------------

using Runner = void (*)(const Params&, std::uint64_t, Book&, bool);

struct Entry {
  json (*defaults)();
  Runner run;
};

Entry entry(Experiment e) {
  switch (e) {
    case Experiment::profile_suite: return {profile_suite_defaults, profile_suite};
    case Experiment::spectrum_suite: return {spectrum_suite_defaults, spectrum_suite};
    case Experiment::self_similarity: return {self_similarity_defaults, self_similarity};
    case Experiment::attractor: return {attractor_defaults, attractor};
    case Experiment::lipschitz: return {lipschitz_defaults, lipschitz};
    case Experiment::critical_mass: return {critical_mass_defaults, critical_mass};
    case Experiment::sn_suite: return {sn_suite_defaults, sn_suite};
    case Experiment::energy_suite: return {energy_suite_defaults, energy_suite};
  }
  throw InvalidArgument("unknown experiment");
}

}  // namespace

json ExperimentConfig::defaults(Experiment e) { return entry(e).defaults(); }

void ExperimentConfig::validate() const {
  const std::string where = to_string(experiment);
  if (!params.is_object()) throw InvalidArgument(where + ": params must be an object");
  reject_unknown(params, defaults(experiment), where);
  const json p = resolved_params();
  RunReport scratch;
  Book book(scratch);
  try {
    entry(experiment).run(Params(p, where), seed, book, true);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(where + ": " + e.what());
  }
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  RunReport r;
  r.config = cfg;
  r.config_hash = cfg.hash();
  r.environment = environment_stamp();
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  r.started = buf;
  const auto t0 = std::chrono::steady_clock::now();
  Book book(r);
  book.group("config", "configuration is valid", [&] {
    cfg.validate();
    const json p = cfg.resolved_params();
    entry(cfg.experiment).run(Params(p, to_string(cfg.experiment)), cfg.seed, book, false);
  });
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace pkslab
