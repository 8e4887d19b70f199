#pragma once

// Nonlocal velocity laws: chemotactic v = grad c with -Delta c = u, and
// Biot-Savart v = grad^perp Psi with Delta Psi = omega.

#include "pkslab/fields.hpp"
#include "pkslab/measures.hpp"

namespace pkslab {

struct VelocityField {
  Field2D vx;
  Field2D vy;
  /// Divergence taken in the doubled-domain calculus of the solve. v decays
  /// like 1/r so it is not periodic on the box.
  Field2D div;
  double max_speed() const;
};

VelocityField velocity_pks(const Field2D& u, double tail_tolerance = 1e-8);
VelocityField velocity_nse(const Field2D& omega, double tail_tolerance = 1e-8);
VelocityField velocity(Model model, const Field2D& density, double tail_tolerance = 1e-8);

/// The solver divergence when present, otherwise periodic spectral.
Field2D divergence(const VelocityField& v);

}  // namespace pkslab
