#pragma once

// Finite measures as atoms plus a diffuse density, their norms, the
// large-atom decomposition and the regularization to a start-time field.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pkslab/fields.hpp"
#include "pkslab/profiles.hpp"

namespace pkslab {

enum class Model { pks, nse };
std::string to_string(Model m);
Model model_from_string(const std::string& s);

struct Atom {
  Vec2 z;
  double mass = 0.0;
};

/// mass / (2 pi w^2) exp(-|x - c|^2 / (2 w^2)).
struct GaussianBump {
  Vec2 center;
  double mass = 0.0;
  double width = 1.0;
  double operator()(double x, double y) const;
};

class MeasureData {
 public:
  MeasureData() = default;
  /// Atoms sharing a position are merged. `nonnegative` marks PKS data and
  /// requires every mass and density value to be >= 0.
  MeasureData(std::vector<Atom> atoms, std::vector<GaussianBump> bumps = {},
              std::optional<Field2D> density = std::nullopt, bool nonnegative = false);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<GaussianBump>& bumps() const { return bumps_; }
  const std::optional<Field2D>& density() const { return density_; }
  bool nonnegative() const { return nonnegative_; }
  bool has_diffuse() const { return !bumps_.empty() || density_.has_value(); }

  /// Merges atoms closer than `radius` (mass-weighted centroid); returns the
  /// number of merges performed.
  int merge_within(double radius);

 private:
  std::vector<Atom> atoms_;
  std::vector<GaussianBump> bumps_;
  std::optional<Field2D> density_;
  bool nonnegative_ = false;
};

struct MeasureNorms {
  double tv = 0.0;
  double atomic = 0.0;
};
MeasureNorms measure_norms(const MeasureData& mu);

struct DecompositionResult {
  std::vector<Atom> atoms;  ///< |alpha_i| >= epsilon
  MeasureData remainder;
  double min_distance = std::numeric_limits<double>::infinity();
  double epsilon = 0.0;
  bool nonnegative = false;
};

/// Throws CriticalAtom for PKS data carrying an atom of mass >= 8 pi.
DecompositionResult decompose(const MeasureData& mu, double epsilon = 0.5);

/// Default start time sqrt(t0) = d/8, capped at `cap` when fewer than two
/// atoms are extracted.
double default_start_time(const DecompositionResult& d, double cap = 0.01);

using ProfileProvider = std::function<std::shared_ptr<const SelfSimilarProfile>(double)>;
ProfileProvider cached_profiles(const ProfileOptions& opts = {});

/// e^{t0 Delta} mu_0 + sum_i t0^-1 G_{alpha_i}((x - z_i)/sqrt t0). For the
/// NSE law the atoms evolve as Oseen vortices alpha_i Gamma_{t0}.
Field2D regularize(const DecompositionResult& d, double t0, const Grid2D& grid,
                   Model model = Model::pks, const ProfileProvider& profiles = cached_profiles());

nlohmann::json to_json(const MeasureData& mu);
/// `base_dir` resolves relative density file paths.
MeasureData measure_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

}  // namespace pkslab
