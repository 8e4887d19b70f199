#pragma once

// Radial self-similar profiles G_alpha = alpha e^{c - r^2/4} / Z with
// -Delta c = G_alpha, solved by damped fixed-point iteration.

#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "pkslab/fields.hpp"

namespace pkslab {

/// Largest supported mass; the fixed point slows down as alpha -> 8 pi.
inline constexpr double kMaxProfileMass = 7.9 * kPi;

/// Unit-mass standard Gaussian (4 pi)^-1 e^{-r^2/4}.
inline double standard_gaussian(double r) { return std::exp(-r * r / 4.0) / (4.0 * kPi); }

struct ProfileOptions {
  double r_max = 20.0;
  int points = 4096;
  double tol = 1e-12;
  int max_iter = 20000;
  double theta = 0.5;

  void validate() const;
  friend bool operator==(const ProfileOptions&, const ProfileOptions&) = default;
};

struct SelfSimilarProfile {
  double alpha = 0.0;
  std::vector<double> r;
  std::vector<double> G;
  std::vector<double> c;   ///< potential, free-space normalization
  std::vector<double> vG;  ///< c'(r)
  double Z = 0.0;
  double residual = 0.0;   ///< sup |G - alpha e^{c-r^2/4}/Z| / sup G
  int iterations = 0;

  RadialField G_field() const { return {r, G}; }
  double second_moment() const;
  /// |second moment - 4 alpha (1 - alpha / 8 pi)| relative to the identity.
  double virial_error() const;
  /// G'(r) = G (c' - r/2).
  std::vector<double> dG() const;
};

SelfSimilarProfile solve_profile(double alpha, const ProfileOptions& opts = {});

/// ||G_alpha - G_beta||_1.
double profile_lipschitz(double alpha, double beta, const ProfileOptions& opts = {});
double profile_l1_distance(const SelfSimilarProfile& a, const SelfSimilarProfile& b);

/// E_alpha^0 = (G_{alpha+h} - G_{alpha-h}) / 2h on the profile grid.
RadialField zero_mode(double alpha, double h, const ProfileOptions& opts = {});

/// x -> t^-1 G_alpha((x - z)/sqrt t) on the grid, monotone cubic
/// interpolation in r. Throws SupportOverflow if the profile does not fit.
Field2D sample_profile(const SelfSimilarProfile& p, double t, Vec2 z, const Grid2D& grid);
/// Adds the sampled profile into `values` (same layout as Field2D).
void add_sampled_profile(const SelfSimilarProfile& p, double t, Vec2 z, const Grid2D& grid,
                         std::vector<double>& values);

enum class Interpolation {
  monotone_cubic,  ///< pchip; shape preserving, C^1
  quintic_spline,  ///< C^4 B-spline on uniform nodes, mirrored through r = 0
};

/// Interpolant of a radial table, zero beyond the last node. The quintic
/// scheme is for fields that get differentiated or divided by: pchip's
/// kinks leak into spectral derivatives. `parity` is the symmetry of f
/// under r -> -r (quintic only).
class RadialInterpolant {
 public:
  RadialInterpolant(std::vector<double> r, std::vector<double> f,
                    Interpolation scheme = Interpolation::monotone_cubic, int parity = 1);
  double operator()(double r) const { return r > r_max_ ? 0.0 : eval_(r); }
  double r_max() const { return r_max_; }

 private:
  std::function<double(double)> eval_;
  double r_max_ = 0.0;
};

/// q(rho) = c'(rho) / rho, so the profile velocity is q(|xi|) xi. Beyond the
/// table all mass is enclosed and q = -alpha / (2 pi rho^2).
class ProfileVelocity {
 public:
  explicit ProfileVelocity(const SelfSimilarProfile& p);
  double operator()(double rho) const;

 private:
  RadialInterpolant q_;
  double alpha_ = 0.0;
  double r_max_ = 0.0;
};

nlohmann::json profile_header(const SelfSimilarProfile& p);
/// CSV with columns r, G, c, vG preceded by a one-line JSON header.
void write_profile_csv(const SelfSimilarProfile& p, std::ostream& os);
void save_profile(const SelfSimilarProfile& p, const std::string& path);

/// Thread-safe memo of solved profiles keyed by (alpha, options).
class ProfileCache {
 public:
  std::shared_ptr<const SelfSimilarProfile> get(double alpha, const ProfileOptions& opts = {});
  static ProfileCache& global();

 private:
  using Key = std::tuple<double, double, int, double, int, double>;
  std::shared_mutex mutex_;
  std::map<Key, std::shared_ptr<const SelfSimilarProfile>> table_;
};

}  // namespace pkslab
