#pragma once

// Time integration. Every flow here has the form
//   u_t = Delta u - div(F(u, t))
// and is advanced by an integrating-factor (Lawson) Bogacki-Shampine 3(2)
// pair in Fourier space: diffusion exactly, the flux explicitly and
// dealiased, dt limited by CFL and optionally by the embedded error.

#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pkslab/energies.hpp"
#include "pkslab/measures.hpp"
#include "pkslab/profiles.hpp"

namespace pkslab {

/// How products are dealiased: truncation of the top modes (`dealias`
/// fraction kept) or the smooth exponential filter, which rings far less
/// once a collapsing core outruns the grid.
enum class Filter { sharp, exponential };
std::string to_string(Filter f);
Filter filter_from_string(const std::string& s);

struct SolverConfig {
  Model model = Model::pks;
  double cfl = 0.4;
  double max_dt = 1e-2;
  double min_dt = 1e-10;       ///< CFL steps below this raise CFLCollapse
  double fixed_dt = 0.0;       ///< > 0 disables CFL and error control
  double rtol = 1e-6;          ///< embedded error tolerance relative to max|u|; 0 disables
  double dealias = 2.0 / 3.0;  ///< kept fraction of modes on products
  Filter filter = Filter::sharp;
  double t_start = 0.01;       ///< physical runs only
  double t_end = 0.04;
  int cadence = 1;             ///< diagnostics every `cadence` accepted steps
  double weight_m = 4.0;       ///< L^2(m) weight in diagnostics
  bool energy = true;
  bool store_fields = false;
  std::vector<double> output_times;  ///< hit exactly, always recorded
  double stop_sup_factor = 0.0;      ///< stop once t|u|_inf exceeds this times its initial value
  double tail_tolerance = 1e-8;
  long max_steps = 10'000'000;
  std::string dump_path;  ///< last finite state is written here on NaN

  void validate() const;
  nlohmann::json to_json() const;
  static SolverConfig from_json(const nlohmann::json& j);
  /// FNV-1a of the canonical JSON dump, hex.
  std::string hash() const;
};

/// One row per snapshot. For similarity and linearized runs `time` is tau
/// and the scaled quantities are the plain norms of w (t|u|_inf = |w|_inf).
struct Diagnostics {
  std::vector<double> time;
  std::vector<double> mass;
  std::vector<double> sup;
  std::vector<double> scaled_sup;      ///< t |u|_inf
  std::vector<double> hyper;           ///< t^{1/4} |u|_{4/3}
  std::vector<double> weighted_l2;     ///< |u|_{L^2(m)}
  std::vector<double> energy;          ///< free energy (or F~ for linearized runs), NaN if not defined
  std::vector<double> min;
  std::vector<double> peak_mass;       ///< mass within sqrt t (or 1) of the argmax
  std::vector<double> reference_l1;    ///< |w - G|_1 when a reference profile is given
  std::vector<double> dt;

  std::size_t size() const { return time.size(); }
  void write_csv(std::ostream& os) const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field2D> fields;  ///< only with store_fields
  Diagnostics diagnostics;
  Field2D final_state;
  long steps = 0;
  long rejected = 0;
  bool stopped_early = false;
  std::string stop_reason;

  nlohmann::json manifest(const SolverConfig& cfg) const;
};

/// Raised when the CFL step underflows min_dt, typically just before blow-up.
/// Carries the trajectory up to the last accepted step.
class CFLCollapse : public Error {
 public:
  CFLCollapse(const std::string& what, std::shared_ptr<const Trajectory> partial)
      : Error("CFLCollapse", what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return *partial_; }

 private:
  std::shared_ptr<const Trajectory> partial_;
};

/// u_t + div(u v(u)) = Delta u on [cfg.t_start, cfg.t_end].
Trajectory evolve_physical(const Field2D& u0, const SolverConfig& cfg);

/// w_tau + div(w grad c) = Delta w + 1/2 div(xi w) on [tau0, tau1]. `reference`
/// adds the |w - G|_1 series. `nonlinear = false` switches transport off and
/// leaves the Fokker-Planck flow.
Trajectory evolve_similarity(const Field2D& w0, double tau0, double tau1, const SolverConfig& cfg,
                             const SelfSimilarProfile* reference = nullptr, bool nonlinear = true);

/// f_t + div(f sum_j t^{-1/2} v^{G_j}((x - z_j)/sqrt t)) = Delta f from s to t.
Field2D sn_propagate(const Field2D& f0, double s, double t, const std::vector<Atom>& centers,
                     const SolverConfig& cfg, const ProfileProvider& profiles = cached_profiles());
/// Same flow with diagnostics; the snapshot grid follows cfg.
Trajectory sn_trajectory(const Field2D& f0, double s, double t, const std::vector<Atom>& centers,
                         const SolverConfig& cfg, const ProfileProvider& profiles = cached_profiles());

/// f_tau = L f - Lambda_alpha f with Lambda f = div(G v^f) + div(f v^G).
Trajectory evolve_linearized(const Field2D& f0, const SelfSimilarProfile& p, double tau0, double tau1,
                             const SolverConfig& cfg);

struct BlowupCriteria {
  double sup_factor = 50.0;
  double mass_fraction = 0.9;  ///< of 8 pi inside the sqrt t ball
};

struct BlowupVerdict {
  bool blowup = false;
  double initial_scaled_sup = 0.0;
  double max_scaled_sup = 0.0;
  double time = std::numeric_limits<double>::quiet_NaN();  ///< first flagged snapshot
  double peak_mass = 0.0;
  std::string verdict() const { return blowup ? "blowup" : "bounded"; }
  nlohmann::json to_json() const;
};

BlowupVerdict detect_blowup(const Trajectory& traj, const BlowupCriteria& c = {});

}  // namespace pkslab
