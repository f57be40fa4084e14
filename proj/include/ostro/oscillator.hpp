#pragma once

#include <array>

#include "ostro/constraints.hpp"

namespace ostro::oscillator {

/// Three-dimensional harmonic oscillator (I = 3) reduced to two basic
/// variables (K = 2) through a linear transformation with time constant
/// lambda.
struct Params {
    double m = 1.0;
    double h1 = 1.0, h2 = 1.0, h3 = 1.0;
    double lambda = 1.0;

    bool isotropic() const { return h1 == h2 && h2 == h3; }
    double omega(int i) const;                     // sqrt(h_i / m), i in 1..3
    double omega() const { return omega(1); }      // isotropic frequency
    double Omega() const;                          // lambda^2 omega^2 (isotropic)
};

/// Build the model: alpha = (qbar_1, qbar_2, 0), beta rows ((0,lambda),
/// (0,0), (lambda,0)), u = 0, V the diagonal quadratic potential.
/// Rejects lambda = 0 (the transformation would be non-invertible) and
/// non-positive mass or negative spring constants.
ModelSpec make_model(const Params& params);

/// Closed-form solution of the standard problem, q_i = c_i cos(w_i t) +
/// c'_i sin(w_i t), with exact first and second derivatives.
struct SecondOrderSolution {
    Vec q, qdot, qddot;
};
SecondOrderSolution analytic_q(const Params& params, const Vec& c, const Vec& c_prime,
                               double t);

/// General solution of the reduced fourth-order system in the isotropic
/// case: an oscillatory pair (cbar_1..4), a decaying spiral (cbar_5, cbar_6)
/// and a growing spiral (cbar_7, cbar_8) with rate sqrt(3)/(2 lambda).
/// Returns the exact jet with all derivatives up to fourth order.
/// Rejects anisotropic parameters.
JetWithFourth analytic_qbar(const Params& params, const std::array<double, 8>& cbar,
                            double t);

/// Canonical state of the analytic solution at time t.
CanonicalState analytic_canonical(const Params& params, const std::array<double, 8>& cbar,
                                  double t);

/// The four closed-form constraints of the isotropic model:
///   phi_1 = lambda P11 - P22
///   phi_2 = lambda (P12 - m Q22)
///   phi_3 = -P22 + lambda m Q21 - lambda^2 h Q12
///   phi_4 = phi_2 + P21 + lambda^2 h Q11
/// The first two are the lambda-rescaled primary constraints.
Vec paper_constraints(const Params& params, const CanonicalState& state);

/// The same four constraints packaged as a chain with exact constant
/// Jacobians, carrying the closure identity lambda phi4_dot = phi_3 - phi_1.
ConstraintChain paper_constraint_chain(const Params& params);

/// Hamiltonian restricted to the manifold phi_1 = phi_2 = 0; bounded from
/// below by zero for positive m, h.
double constrained_hamiltonian(const Params& params, const CanonicalState& state);

/// Closed-form matrix of Poisson brackets among the four constraints,
/// lambda m times an antisymmetric pattern in Omega = lambda^2 omega^2.
Mat paper_bracket_matrix(const Params& params);

}  // namespace ostro::oscillator
