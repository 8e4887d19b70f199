#include "pkslab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace pkslab {

std::string to_string(Model m) { return m == Model::pks ? "pks" : "nse"; }

Model model_from_string(const std::string& s) {
  if (s == "pks") return Model::pks;
  if (s == "nse") return Model::nse;
  throw InvalidArgument("unknown model '" + s + "'");
}

double GaussianBump::operator()(double x, double y) const {
  const double dx = x - center.x, dy = y - center.y;
  return mass / (2.0 * kPi * width * width) * std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
}

MeasureData::MeasureData(std::vector<Atom> atoms, std::vector<GaussianBump> bumps,
                         std::optional<Field2D> density, bool nonnegative)
    : bumps_(std::move(bumps)), density_(std::move(density)), nonnegative_(nonnegative) {
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.mass) || !std::isfinite(a.z.x) || !std::isfinite(a.z.y))
      throw InvalidArgument("atom with non-finite data");
    auto same = std::find_if(atoms_.begin(), atoms_.end(), [&](const Atom& b) { return b.z == a.z; });
    if (same != atoms_.end())
      same->mass += a.mass;
    else
      atoms_.push_back(a);
  }
  for (const GaussianBump& b : bumps_)
    if (!(b.width > 0.0) || !std::isfinite(b.mass)) throw InvalidArgument("bump needs positive width and finite mass");
  if (nonnegative_) {
    for (const Atom& a : atoms_)
      if (a.mass < 0.0) throw NegativeDensity("negative atom in nonnegative measure");
    for (const GaussianBump& b : bumps_)
      if (b.mass < 0.0) throw NegativeDensity("negative bump in nonnegative measure");
    if (density_ && density_->min() < 0.0) throw NegativeDensity("negative density in nonnegative measure");
  }
}

int MeasureData::merge_within(double radius) {
  int merges = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < atoms_.size() && !changed; ++i)
      for (std::size_t j = i + 1; j < atoms_.size() && !changed; ++j) {
        Atom& a = atoms_[i];
        const Atom& b = atoms_[j];
        if (std::hypot(a.z.x - b.z.x, a.z.y - b.z.y) >= radius) continue;
        const double wa = std::abs(a.mass), wb = std::abs(b.mass);
        if (wa + wb > 0.0) {
          a.z.x = (wa * a.z.x + wb * b.z.x) / (wa + wb);
          a.z.y = (wa * a.z.y + wb * b.z.y) / (wa + wb);
        }
        a.mass += b.mass;
        atoms_.erase(atoms_.begin() + static_cast<std::ptrdiff_t>(j));
        ++merges;
        changed = true;
      }
  }
  return merges;
}

MeasureNorms measure_norms(const MeasureData& mu) {
  MeasureNorms n;
  for (const Atom& a : mu.atoms()) n.atomic += std::abs(a.mass);
  n.tv = n.atomic;
  for (const GaussianBump& b : mu.bumps()) n.tv += std::abs(b.mass);
  if (mu.density()) n.tv += norm_lpm(*mu.density(), {1.0, 0.0});
  return n;
}

DecompositionResult decompose(const MeasureData& mu, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("decomposition threshold must be positive");
  DecompositionResult d;
  d.epsilon = epsilon;
  d.nonnegative = mu.nonnegative();
  std::vector<Atom> small;
  for (const Atom& a : mu.atoms()) {
    if (mu.nonnegative() && a.mass >= kCriticalMass) {
      std::ostringstream msg;
      msg << "atom of mass " << a.mass << " at (" << a.z.x << ", " << a.z.y << ") is not below 8 pi";
      throw CriticalAtom(msg.str());
    }
    (std::abs(a.mass) >= epsilon ? d.atoms : small).push_back(a);
  }
  d.remainder = MeasureData(small, mu.bumps(), mu.density(), mu.nonnegative());
  for (std::size_t i = 0; i < d.atoms.size(); ++i)
    for (std::size_t j = i + 1; j < d.atoms.size(); ++j)
      d.min_distance = std::min(d.min_distance, std::hypot(d.atoms[i].z.x - d.atoms[j].z.x,
                                                           d.atoms[i].z.y - d.atoms[j].z.y));
  return d;
}

double default_start_time(const DecompositionResult& d, double cap) {
  if (!std::isfinite(d.min_distance)) return cap;
  return std::min(cap, d.min_distance * d.min_distance / 64.0);
}

ProfileProvider cached_profiles(const ProfileOptions& opts) {
  return [opts](double alpha) { return ProfileCache::global().get(alpha, opts); };
}

Field2D regularize(const DecompositionResult& d, double t0, const Grid2D& grid, Model model,
                   const ProfileProvider& profiles) {
  if (!(t0 > 0.0)) throw InvalidArgument("start time must be positive");
  grid.validate();
  MeasureData extracted(d.atoms);
  const int merges = extracted.merge_within(grid.spacing());
  if (merges > 0)
    std::clog << "warning: merged " << merges << " atom pair(s) closer than one grid cell\n";

  std::vector<double> v(grid.size(), 0.0);
  // heat flow of the remainder: small atoms and bumps analytically
  std::vector<GaussianBump> heated;
  for (const Atom& a : d.remainder.atoms()) heated.push_back({a.z, a.mass, std::sqrt(2.0 * t0)});
  for (const GaussianBump& b : d.remainder.bumps())
    heated.push_back({b.center, b.mass, std::sqrt(b.width * b.width + 2.0 * t0)});
  for (const Atom& a : extracted.atoms()) {
    if (model == Model::nse || a.mass < 0.0) {
      if (model == Model::pks) throw NegativeDensity("negative atom in PKS data");
      heated.push_back({a.z, a.mass, std::sqrt(2.0 * t0)});
    } else {
      add_sampled_profile(*profiles(a.mass), t0, a.z, grid, v);
    }
  }
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = 0; ix < grid.n; ++ix)
      for (const GaussianBump& b : heated) v[static_cast<std::size_t>(iy) * grid.n + ix] += b(grid.x(ix), grid.y(iy));
  if (d.remainder.density()) {
    const Field2D& rho = *d.remainder.density();
    if (!(rho.grid() == grid)) throw InvalidArgument("diffuse density lives on a different grid");
    const Field2D h = heat_apply(rho, t0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += h.values()[i];
  }
  Field2D out(grid, std::move(v));
  if (tail_fraction(out) > 1e-8) throw SupportOverflow("regularized data leaks past half the box");
  return out;
}

nlohmann::json to_json(const MeasureData& mu) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const Atom& a : mu.atoms()) atoms.push_back({{"x", a.z.x}, {"y", a.z.y}, {"mass", a.mass}});
  nlohmann::json diffuse = nlohmann::json::array();
  for (const GaussianBump& b : mu.bumps())
    diffuse.push_back({{"kind", "gaussian"}, {"center", {b.center.x, b.center.y}}, {"mass", b.mass}, {"width", b.width}});
  nlohmann::json j{{"atoms", atoms}, {"diffuse", diffuse}, {"nonnegative", mu.nonnegative()}};
  if (mu.density()) j["density_grid"] = {{"n", mu.density()->n()}, {"half_width", mu.density()->grid().half_width}};
  return j;
}

MeasureData measure_from_json(const nlohmann::json& j, const std::string& base_dir) {
  std::vector<Atom> atoms;
  for (const auto& a : j.value("atoms", nlohmann::json::array()))
    atoms.push_back({{a.at("x").get<double>(), a.at("y").get<double>()}, a.at("mass").get<double>()});
  std::vector<GaussianBump> bumps;
  std::optional<Field2D> density;
  nlohmann::json diffuse = j.value("diffuse", nlohmann::json::array());
  if (diffuse.is_object()) diffuse = nlohmann::json::array({diffuse});
  for (const auto& d : diffuse) {
    const std::string kind = d.value("kind", "gaussian");
    if (kind == "gaussian") {
      const auto& c = d.at("center");
      bumps.push_back({{c.at(0).get<double>(), c.at(1).get<double>()}, d.at("mass").get<double>(),
                       d.at("width").get<double>()});
    } else if (kind == "field") {
      std::string path = d.at("path").get<std::string>();
      if (!path.empty() && path.front() != '/') path = base_dir + "/" + path;
      density = load_field(path);
    } else {
      throw InvalidArgument("unknown diffuse kind '" + kind + "'");
    }
  }
  return MeasureData(std::move(atoms), std::move(bumps), std::move(density), j.value("nonnegative", false));
}

}  // namespace pkslab
