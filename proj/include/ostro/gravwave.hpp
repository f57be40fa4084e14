#pragma once

#include <array>

#include "ostro/integrate.hpp"

namespace ostro::gravwave {

/// Single transverse Fourier mode of the weak-field wave equation: a scalar
/// amplitude obeying (d^2/dt^2 + c^2 k^2)^2 h = 0. The two transverse
/// polarizations are independent identical copies of this mode.
struct ModeParams {
    double c = 1.0;  // wave speed, > 0
    double k = 1.0;  // spatial wavenumber, >= 0
    std::array<const char*, 2> polarization_labels = {"plus", "cross"};

    double csq_ksq() const { return c * c * k * k; }
};

/// Residual of the fourth-order mode equation:
/// h'''' + 2 c^2 k^2 h'' + c^4 k^4 h.
double mode_residual(const ModeParams& params, double h, double hdot, double hddot,
                     double hdddot, double hddddot);

/// Primary constraint of the mode: psi = h''' + c^2 k^2 h'. Vanishes on pure
/// plane waves and detects the secular solutions, which solve the mode
/// equation but not the constraint.
double mode_constraint(const ModeParams& params, double h, double hdot, double hddot,
                       double hdddot);

/// Conserved energy of the mode flow (zero on the plane-wave manifold).
double mode_energy(const ModeParams& params, const CanonicalState& state);

/// State container mapping: blocks (Q1, Q2, P1, P2) hold (h, h', h'', h''').
CanonicalState mode_state(double h, double hdot, double hddot, double hdddot);

/// First-order system h'''' = -2 c^2 k^2 h'' - c^4 k^4 h together with the
/// constraint set {psi, psi'}; projecting both to zero confines the state to
/// the plane-wave manifold h'' + c^2 k^2 h = 0.
struct ModeModel {
    ModeParams params;
    System system;
    ConstraintChain constraints;
};

ModeModel make_mode_model(const ModeParams& params);

}  // namespace ostro::gravwave
