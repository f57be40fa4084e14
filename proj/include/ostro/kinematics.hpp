#pragma once

#include "ostro/model.hpp"

namespace ostro {

/// q = alpha(qbar) + beta(qbar) qbar_dot.
Vec lift_q(const ModelSpec& spec, const Vec& qbar, const Vec& qbar_dot);

/// qdot, the total time derivative of the lift. Requires jet.qbar_ddot.
Vec lift_qdot(const ModelSpec& spec, const Jet& jet);

/// qddot, the second total time derivative of the lift. Requires the jerk.
Vec lift_qddot(const ModelSpec& spec, const Jet& jet);

/// The higher-order Lagrangian obtained by inserting the lift into the
/// first-order one: L(q(jet), qdot(jet)).
double induced_lagrangian(const ModelSpec& spec, const Jet& jet);

/// Ostrogradsky momenta (P1, P2) of a full jet (jerk required; P2 itself
/// never depends on it).
std::pair<Vec, Vec> momenta(const ModelSpec& spec, const Jet& jet);

/// qbar_ddot reconstructed from (Q1, Q2, P2) through the Gram inverse.
Vec accel_from_canonical(const ModelSpec& spec, const CanonicalState& state);

/// qbar_dddot reconstructed from the full canonical state.
Vec jerk_from_canonical(const ModelSpec& spec, const CanonicalState& state);

/// The mutually inverse maps between jets and canonical states.
CanonicalState canonical_from_jet(const ModelSpec& spec, const Jet& jet);
Jet jet_from_canonical(const ModelSpec& spec, const CanonicalState& state);

}  // namespace ostro
