#pragma once

#include "ostro/model.hpp"

namespace ostro {

/// Antisymmetric curl of u: omega_ij = d u_i / d q_j - d u_j / d q_i.
Mat omega(const ModelSpec& spec, const Vec& q);

/// Residual of the standard second-order problem:
/// m qddot_i + omega_ij qdot_j + dV_i. Zero exactly on its solutions.
Vec second_order_residual(const ModelSpec& spec, const Vec& q, const Vec& qdot,
                          const Vec& qddot);

/// Residual of the K reduced evolution equations,
///   (alpha'_ik + beta'_ilk qd_l) EL_i - d/dt (beta_ik EL_i),
/// with EL the second-order residual and all time derivatives expanded
/// through the chain rule; the fourth qbar derivative enters through the
/// time derivative of qddot. The second derivatives of u and V and the third
/// derivatives of alpha and beta that appear are obtained by central
/// differencing of the supplied first/second-derivative callbacks.
Vec fourth_order_residual(const ModelSpec& spec, const Jet& jet, const Vec& qbar_ddddot);

/// Solves the reduced equations for the fourth derivative. The leading
/// coefficient matrix (m times the Gram matrix of beta) is inverted under the
/// same regularity threshold as gram_inverse.
Vec fourth_derivative(const ModelSpec& spec, const Jet& jet);

/// H = (m/2) qdot.qdot + V(q) + [P1 - (m qdot + u) (alpha' + beta' Q2)] . Q2,
/// with q, qdot reconstructed from the canonical state.
double hamiltonian(const ModelSpec& spec, const CanonicalState& state);

/// Exact partial derivatives of the Hamiltonian with respect to the four
/// canonical blocks.
GradH hamiltonian_gradient(const ModelSpec& spec, const CanonicalState& state);

/// Canonical vector field: (Q1dot, Q2dot, P1dot, P2dot) =
/// (dH/dP1, dH/dP2, -dH/dQ1, -dH/dQ2).
CanonicalState canonical_rhs(const ModelSpec& spec, const CanonicalState& state);

}  // namespace ostro
