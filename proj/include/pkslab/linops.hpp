#pragma once

// Radial-mode discretizations of the Fokker-Planck operator L, the confined
// operator L - div(f grad c_alpha) and the linearization L - Lambda_alpha,
// with dense spectra, the explicit Fokker-Planck kernel and the elliptic
// mode shooting for Delta h + G_alpha h = 0.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pkslab/fields.hpp"
#include "pkslab/profiles.hpp"

namespace pkslab {

enum class OperatorKind { linearized, confined_fp, fokker_planck };
std::string to_string(OperatorKind k);
OperatorKind operator_kind_from_string(const std::string& s);

/// Default node set for mode operators: uniform on [0, 10]. The spacing
/// resolves the G_{7 pi} core to about 1e-4 in the zero eigenvalue.
std::vector<double> default_mode_nodes(int points = 769, double r_max = 10.0);

/// Every `stride`-th node of the profile table up to r_max, so the
/// operator coefficients are table values rather than interpolants.
std::vector<double> aligned_mode_nodes(const SelfSimilarProfile& p, double r_max, int stride);

/// Dense discretization acting on the unknown values f(r_i) at `unknowns`
/// (indices into `nodes`). f(r_max) = 0 always; f(0) = 0 for n >= 1.
struct ModeOperator {
  OperatorKind kind = OperatorKind::fokker_planck;
  int n = 0;
  double alpha = 0.0;
  std::vector<double> nodes;
  std::vector<int> unknowns;
  Eigen::MatrixXd matrix;
  std::string boundary;
  /// sqrt of the profile (or Gaussian) on the unknowns, used to balance the
  /// matrix before eigen-solving.
  Eigen::VectorXd balance;

  /// Apply to a function sampled on `nodes`; returns values on `nodes`
  /// (zero at the eliminated boundary nodes).
  RadialField apply(const RadialField& f) const;
  /// Expand unknown-vector to all nodes.
  std::vector<double> expand(const Eigen::VectorXd& v) const;
};

ModeOperator assemble(OperatorKind kind, int n, const SelfSimilarProfile* p,
                      const std::vector<double>& nodes);

struct EigenPair {
  std::complex<double> value;
  Eigen::VectorXcd vector;  ///< on the operator's unknowns
  double residual = 0.0;    ///< |A v - l v| / (|A| |v|)
  double mass_fraction = 0.0;  ///< |int f| / int |f| (mode 0 only)
};

struct SpectrumReport {
  OperatorKind kind = OperatorKind::fokker_planck;
  int n = 0;
  double alpha = 0.0;
  std::vector<std::complex<double>> eigenvalues;  ///< sorted by real part, descending
  /// -max Re over admissible eigenpairs (the mass-carrying pair is deflated for n = 0).
  double gap = 0.0;
  std::optional<EigenPair> mass_pair;  ///< n = 0 only
  EigenPair leading;                   ///< leading admissible pair
  nlohmann::json to_json() const;
};

/// Dense eigen-decomposition; `count` limits the listed eigenvalues (0 = all).
SpectrumReport spectrum(const ModeOperator& op, int count = 0);

/// K_alpha = min over modes of the mean-constrained gap.
struct GapSummary {
  double alpha = 0.0;
  std::vector<SpectrumReport> modes;
  double K = 0.0;
  nlohmann::json to_json() const;
};
GapSummary linearized_gap(const SelfSimilarProfile& p, const std::vector<int>& modes,
                          const std::vector<double>& nodes = default_mode_nodes());

/// Explicit Fokker-Planck kernel from tau' to tau:
/// f -> (4 pi a)^-1 int exp(-|xi - e^{(tau'-tau)/2} zeta|^2 / 4a) f(zeta) dzeta,
/// a = 1 - e^{tau'-tau}.
Field2D fp_kernel_apply(const Field2D& f, double tau, double tau_prime);
RadialField fp_kernel_apply(const RadialField& f, double tau, double tau_prime);

struct ShootReport {
  int n = 0;
  double r_max = 0.0;
  std::vector<double> r;
  /// Regular solution, f ~ r^n at the origin; for n = 1 scaled to n_1 = G'/G.
  std::vector<double> f;
  /// Outer fit: f ~ A + B log r (n = 0) or A r^n + B r^-n.
  double A = 0.0;
  double B = 0.0;
  std::string growth;  ///< "logarithmic", "linear", "power" or "bounded"
  bool unbounded = false;
  bool sign_definite = false;  ///< no zero crossing on (0, r_max]
  /// Max relative deviation from the closed-form solution (e = E^0/G for
  /// n = 0, n_1 = G'/G for n = 1); NaN otherwise.
  double reference_deviation = std::numeric_limits<double>::quiet_NaN();
  nlohmann::json to_json() const;
};

ShootReport elliptic_mode_shoot(const SelfSimilarProfile& p, int n, double r_max = 12.0);

}  // namespace pkslab
