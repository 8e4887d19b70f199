#pragma once

// Numerical substrate: uniform square grids, weighted norms, free-space
// Poisson solves, the periodic heat semigroup and radial quadrature.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pkslab/error.hpp"

namespace pkslab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kCriticalMass = 8.0 * kPi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Square uniform grid covering center + [-L, L)^2 with n points per axis.
struct Grid2D {
  int n = 256;
  double half_width = 16.0;
  Vec2 center{};

  double spacing() const { return 2.0 * half_width / n; }
  double cell_area() const { return spacing() * spacing(); }
  double x(int ix) const { return center.x - half_width + ix * spacing(); }
  double y(int iy) const { return center.y - half_width + iy * spacing(); }
  std::size_t size() const { return static_cast<std::size_t>(n) * n; }

  /// Throws InvalidArgument unless n is a power of two >= 16 and L > 0.
  void validate() const;

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Real scalar field sampled on a Grid2D. Storage is row-major with x the
/// fastest index: value(ix, iy) = values[iy * n + ix].
class Field2D {
 public:
  Field2D() = default;
  Field2D(Grid2D grid, std::vector<double> values);

  static Field2D zeros(const Grid2D& grid);
  static Field2D from_function(const Grid2D& grid,
                               const std::function<double(double, double)>& f);

  const Grid2D& grid() const { return grid_; }
  int n() const { return grid_.n; }
  bool empty() const { return values_.empty(); }
  std::span<const double> values() const { return values_; }
  double operator()(int ix, int iy) const {
    return values_[static_cast<std::size_t>(iy) * grid_.n + ix];
  }

  /// Discrete integral: sum of samples times cell area.
  double mass() const;
  double max() const;
  double min() const;
  double max_abs() const;

  Field2D operator+(const Field2D& other) const;
  Field2D operator-(const Field2D& other) const;
  Field2D operator*(double s) const;
  friend Field2D operator*(double s, const Field2D& f) { return f * s; }

 private:
  Grid2D grid_{};
  std::vector<double> values_;
};

/// Samples of a radial profile f(r) on strictly increasing nodes starting at 0.
struct RadialField {
  std::vector<double> nodes;
  std::vector<double> values;

  void validate() const;
  std::size_t size() const { return nodes.size(); }
  /// True when nodes are equispaced starting at r = 0 (enables the
  /// fourth-order quadrature path).
  bool uniform() const;
  double spacing() const { return nodes.size() > 1 ? nodes[1] - nodes[0] : 0.0; }
};

/// Uniform radial nodes r_i = i * r_max / (points - 1).
std::vector<double> uniform_radial_nodes(double r_max, int points);

struct WeightedNormSpec {
  double p = 2.0;  ///< exponent in [1, inf]; use infinity() for the sup norm
  double m = 0.0;  ///< polynomial weight <xi>^m
  void validate() const;
};

/// (sum |<xi>^m f|^p dA)^(1/p) over the grid; the sup over grid points for p = inf.
double norm_lpm(const Field2D& f, const WeightedNormSpec& spec);
/// Same norm for a radially symmetric function of the plane.
double norm_lpm(const RadialField& f, const WeightedNormSpec& spec);

// ---------------------------------------------------------------------------
// Radial quadrature

/// Cumulative integral I_i = int_0^{r_i} F(r) dr on a uniform grid with
/// r_0 = 0. `parity` is +1 or -1: F(-r) = parity * F(r) supplies the ghost
/// value at the origin. Fourth order for smooth F.
std::vector<double> cumulative_integral(std::span<const double> F, double h, int parity);
/// Same, trapezoid rule on arbitrary increasing nodes.
std::vector<double> cumulative_trapezoid(std::span<const double> F,
                                         std::span<const double> nodes);
/// 2 pi int f(r) r dr.
double radial_mass(const RadialField& f);
/// 2 pi int f(r) r^(k+1) dr, e.g. k = 2 gives the second moment.
double radial_moment(const RadialField& f, int k);

// ---------------------------------------------------------------------------
// Poisson solves

/// Potential c with -Delta c = g for radial g: c'(r) = -M(r)/(2 pi r), and c
/// matches the free-space convolution with -(1/2pi) log|x|.
struct RadialPotential {
  RadialField potential;   ///< c(r)
  std::vector<double> derivative;  ///< c'(r)
  std::vector<double> enclosed_mass;  ///< M(r)
};
RadialPotential poisson_radial(const RadialField& g);

/// Angular-mode potential: psi with -(1/r)(r psi')' + n^2/r^2 psi = f for a
/// mode f(r) e^{i n theta}. n = 0 reproduces poisson_radial.
struct ModePotential {
  std::vector<double> potential;
  std::vector<double> derivative;
};
ModePotential poisson_radial_mode(int n, const RadialField& f);

struct PoissonOptions {
  /// Fraction of the L1 mass allowed outside the central half box.
  double tail_tolerance = 1e-8;
  bool potential = true;
  bool gradient = false;
  bool laplacian = false;
};

struct PoissonResult {
  Field2D potential;  ///< c, empty if not requested
  Field2D dx;         ///< d c / dx
  Field2D dy;         ///< d c / dy
  Field2D laplacian;  ///< Delta c from the doubled-domain derivatives, ~ -u
};

/// Free-space solve of -Delta c = u, c = -(1/2pi) log|.| * u, on a doubled
/// domain using the exact transform of the radially truncated log kernel.
/// Throws SupportOverflow when u has too much mass outside [-L/2, L/2]^2.
PoissonResult solve_poisson(const Field2D& u, const PoissonOptions& opts = {});
Field2D poisson_free_space(const Field2D& u, double tail_tolerance = 1e-8);

/// Fraction of |u| mass outside the central half box.
double tail_fraction(const Field2D& u);

// ---------------------------------------------------------------------------
// Periodic spectral calculus on the physical grid

/// e^{t Delta} f as a Fourier multiplier. Throws InvalidArgument for t <= 0.
Field2D heat_apply(const Field2D& f, double t);

/// Spectral partial derivatives on the periodic box.
Field2D spectral_dx(const Field2D& f);
Field2D spectral_dy(const Field2D& f);
Field2D spectral_laplacian(const Field2D& f);

/// Eighth-order central-difference Laplacian; the outer four rows and
/// columns are set to zero.
Field2D fd_laplacian(const Field2D& f);

/// Samples f (as its trigonometric interpolant) on the tensor grid
/// (xs[i], ys[j]); points outside the periodic box evaluate to zero.
Field2D evaluate_trigonometric(const Field2D& f, const Grid2D& target,
                               std::span<const double> xs, std::span<const double> ys);

// ---------------------------------------------------------------------------
// Serialization: one JSON header line {n, half_width, center} then payload.

void write_field_binary(const Field2D& f, std::ostream& os);
Field2D read_field_binary(std::istream& is);
void write_field_csv(const Field2D& f, std::ostream& os);
Field2D read_field_csv(std::istream& is);
void save_field(const Field2D& f, const std::string& path);
Field2D load_field(const std::string& path);

}  // namespace pkslab
