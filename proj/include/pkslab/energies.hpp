#pragma once

// Free energies, the linearized Lyapunov functional and its dissipation,
// and the coercivity constant C_alpha.

#include <vector>

#include <nlohmann/json.hpp>

#include "pkslab/fields.hpp"
#include "pkslab/profiles.hpp"

namespace pkslab {

struct EnergyReport {
  double value = 0.0;
  double entropy = 0.0;
  double moment = 0.0;
  double interaction = 0.0;
  bool finite = true;
  nlohmann::json to_json() const;
};

/// int w log w + 1/4 int w |xi|^2 + (1/4pi) int int w w log|xi - zeta|.
/// The 1/4 makes the similarity flow its gradient flow and G_alpha its
/// minimizer. Coordinates are absolute grid coordinates.
EnergyReport free_energy_similarity(const Field2D& w);
/// int u log u - 1/2 int u c with -Delta c = u.
EnergyReport free_energy_physical(const Field2D& u);

struct LinearizedEnergy {
  double F = 0.0;  ///< 1/2 int f^2/G - 1/2 int f c_f
  double D = 0.0;  ///< int G |grad(f/G) - grad c_f|^2
};

/// Relative profile level below which 1/G_alpha is not evaluated.
inline constexpr double kProfileFloor = 1e-30;

/// Where 1/G_alpha is cut off. Evolved fields carry time-stepping noise far
/// above round-off in the tail, so diagnostics along a flow use a higher floor.
struct EnergyFloor {
  double floor = kProfileFloor;  ///< relative to G_alpha(0)
  double vanish = 1e-10;         ///< |f| / max|f| allowed below the floor
};
inline constexpr EnergyFloor kFlowEnergyFloor{1e-10, 1e-6};

/// f lives in similarity variables around the origin. Throws MeanNotZero and
/// DivisionUnderflow (|f| > vanish max|f| where G_alpha < floor G_alpha(0)).
LinearizedEnergy linearized_energy(const Field2D& f, const SelfSimilarProfile& p, const EnergyFloor& cut = {});

/// G_alpha sampled at absolute coordinates (no support check).
Field2D profile_on_grid(const SelfSimilarProfile& p, const Grid2D& grid);

/// phi_{n,k}(r) = G_alpha r^n L_k^{(n)}(r^2/4) on the profile grid. The 2D
/// function is phi(r) cos(n theta). For n = 0 the k >= 1 elements have the
/// k = 0 element subtracted so that they are mean zero.
struct BasisFunction {
  int n = 0;
  int k = 0;
  std::vector<double> values;
};
std::vector<BasisFunction> coercivity_basis(const SelfSimilarProfile& p, int size, int max_mode = 2);

struct CoercivityResult {
  double C = 0.0;
  std::vector<double> per_mode;  ///< largest Rayleigh quotient for n = 0..max_mode
  int basis_size = 0;
  /// Rayleigh quotients int f K f / int f^2/G for every basis element.
  std::vector<double> element_quotients;
};

/// Largest Rayleigh quotient over the span of coercivity_basis. Rejects
/// size < 8.
CoercivityResult coercivity_constant(const SelfSimilarProfile& p, int size = 12, int max_mode = 2);

}  // namespace pkslab
