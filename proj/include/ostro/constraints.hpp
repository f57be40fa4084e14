#pragma once

#include <memory>

#include "ostro/dynamics.hpp"
#include "ostro/kinematics.hpp"

namespace ostro {

// ---------------------------------------------------------------------------
// Phase-space functions and Poisson brackets
// ---------------------------------------------------------------------------

/// Scalar observable on phase space, with an optional analytic gradient in
/// the flat [Q1, Q2, P1, P2] layout. Without one, brackets fall back to a
/// fourth-order central difference.
struct PhaseFunction {
    std::function<double(const CanonicalState&)> value;
    std::function<Vec(const CanonicalState&)> gradient;

    PhaseFunction() = default;
    PhaseFunction(std::function<double(const CanonicalState&)> v) : value(std::move(v)) {}
    PhaseFunction(std::function<double(const CanonicalState&)> v,
                  std::function<Vec(const CanonicalState&)> g)
        : value(std::move(v)), gradient(std::move(g)) {}
};

/// Gradient in the flat layout by a fourth-order central difference with
/// per-coordinate step rel_step * max(1, |x_a|).
Vec numeric_gradient(const std::function<double(const CanonicalState&)>& f,
                     const CanonicalState& state, double rel_step = 1e-3);

/// Apply the symplectic pairing: maps a flat gradient g to J g, so that
/// {f, g} = grad(f) . (J grad(g)).
Vec symplectic_apply(const Vec& grad);

/// Canonical Poisson bracket over the pairs (Q1, P1) and (Q2, P2).
double poisson_bracket(const PhaseFunction& f, const PhaseFunction& g,
                       const CanonicalState& state);
double poisson_bracket(const PhaseFunction& f, const PhaseFunction& g,
                       const CanonicalState& state, const ModelSpec& spec);

/// The Hamiltonian as a PhaseFunction with its exact gradient attached.
/// References the spec, which must outlive the returned function.
PhaseFunction hamiltonian_function(const ModelSpec& spec);

// ---------------------------------------------------------------------------
// Constraints
// ---------------------------------------------------------------------------

/// The K primary constraints phi_k = P1_k - (m qdot_i + u_i)(alpha'_ik +
/// beta'_ilk Q2_l). They vanish on states induced by solutions of the
/// standard second-order problem.
Vec primary_constraints(const ModelSpec& spec, const CanonicalState& state);

struct ConstraintFunction {
    std::string name;
    int level = 1;
    std::function<double(const CanonicalState&)> value;
    std::function<Vec(const CanonicalState&)> jacobian;  // flat layout
};

/// Certificate that the time derivative of the final level is a
/// state-independent linear combination of the retained constraints.
struct ClosureCertificate {
    bool closed = false;
    int level = 0;         // level at which the combination was found
    Mat coefficients;      // one row per component of the closing level
    double fit_residual = 0.0;
};

struct ConstraintChain {
    std::vector<ConstraintFunction> constraints;
    ClosureCertificate closure;

    int size() const { return static_cast<int>(constraints.size()); }
    Vec evaluate(const CanonicalState& state) const;
    Mat jacobian(const CanonicalState& state) const;  // n x 4K
    double max_abs(const CanonicalState& state) const;
};

struct ChainOptions {
    int max_level = 6;
    double closure_tol = 1e-8;
    /// Relative step for the finite-difference gradients used when the
    /// constraint cascade is not affine.
    double fd_step = 0.05;
    double affine_tol = 1e-9;
};

/// Deterministic off-manifold probe states, uniform in [-radius, radius].
std::vector<CanonicalState> default_probe_states(int dim_k, int count, unsigned seed = 12345,
                                                 double radius = 1.0);

/// Iterated constraint chain: level 1 holds the primary constraints, and
/// each further level is the Poisson bracket of the previous one with the
/// Hamiltonian. Iteration stops when the new level is reproduced, at every
/// probe state, by a state-independent linear combination of the existing
/// constraints (the combination is recorded), or when max_level is reached
/// (closed = false).
///
/// Models whose constraint cascade is affine in the canonical variables are
/// detected and handled exactly; otherwise the levels are evaluated through
/// nested finite differences, which limits the attainable closure residual.
/// The chain references the spec, which must outlive it.
ConstraintChain build_constraint_chain(const ModelSpec& spec, int max_level,
                                       const std::vector<CanonicalState>& probe_states,
                                       const ChainOptions& options = {});

/// Same construction for a general first-order flow: each new level is the
/// flow derivative grad(phi) . rhs of the previous one.
ConstraintChain build_constraint_chain_for_flow(
    const std::function<CanonicalState(const CanonicalState&)>& rhs,
    const std::vector<ConstraintFunction>& seeds, int max_level,
    const std::vector<CanonicalState>& probe_states, const ChainOptions& options = {});

/// Antisymmetric matrix of pairwise Poisson brackets among the chain
/// constraints (built antisymmetric: upper triangle computed, mirrored).
Mat constraint_matrix(const ConstraintChain& chain, const CanonicalState& state,
                      const ModelSpec& spec);

/// Dirac bracket {f, g} - {f, phi_a} (C^-1)_ab {phi_b, g}. Requires the
/// constraint matrix C to be invertible at the state (second-class set);
/// otherwise throws SingularityError with the condition estimate.
double dirac_bracket(const PhaseFunction& f, const PhaseFunction& g,
                     const ConstraintChain& chain, const CanonicalState& state,
                     const ModelSpec& spec);

// ---------------------------------------------------------------------------
// Projection onto the constraint manifold
// ---------------------------------------------------------------------------

struct ProjectOptions {
    double tol = 1e-10;   // convergence threshold on max |phi|
    int max_iter = 20;
};

/// Gauss-Newton projection: minimum-norm updates in the Euclidean metric on
/// the flat canonical coordinates until every constraint is below tol.
/// Throws ProjectionError (carrying the final residual) on non-convergence.
CanonicalState project(const ConstraintChain& chain, const CanonicalState& state,
                       const ProjectOptions& options = {});
CanonicalState project(const ModelSpec& spec, const ConstraintChain& chain,
                       const CanonicalState& state, const ProjectOptions& options = {});

}  // namespace ostro
