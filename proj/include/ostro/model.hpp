#pragma once

#include <functional>

#include "ostro/types.hpp"

namespace ostro {

// ---------------------------------------------------------------------------
// Model specification
// ---------------------------------------------------------------------------

/// First-order Lagrangian data: L(q, qdot) = (m/2) qdot.qdot + qdot.u(q) - V(q).
/// The user supplies analytic gradients; the library only cross-checks them
/// against central finite differences (see validate_model).
struct LagrangianSpec {
    double mass = 1.0;
    int dim_i = 0;  // number of q variables

    std::function<Vec(const Vec&)> u;          // I
    std::function<Mat(const Vec&)> du;         // I x I, du(i,j) = d u_i / d q_j
    std::function<double(const Vec&)> V;       // scalar potential
    std::function<Vec(const Vec&)> dV;         // I
};

/// Variable transformation q_i = alpha_i(qbar) + beta_ik(qbar) qbar_dot_k,
/// with its first and second derivatives.
///
/// Index conventions (all derivatives with respect to qbar):
///   dalpha(i,k)      = d alpha_i / d qbar_k
///   dbeta(i,k,l)     = d beta_ik / d qbar_l
///   ddalpha(i,k,l)   = d^2 alpha_i / d qbar_k d qbar_l
///   ddbeta(i,k,l,m)  = d^2 beta_ik / d qbar_l d qbar_m
struct TransformSpec {
    int dim_i = 0;  // I
    int dim_k = 0;  // K, with K <= I

    std::function<Vec(const Vec&)> alpha;         // I
    std::function<Mat(const Vec&)> beta;          // I x K
    std::function<Mat(const Vec&)> dalpha;        // I x K
    std::function<Tensor3(const Vec&)> dbeta;     // I x K x K
    std::function<Tensor3(const Vec&)> ddalpha;   // I x K x K
    std::function<Tensor4(const Vec&)> ddbeta;    // I x K x K x K
};

struct ModelSpec {
    LagrangianSpec lagrangian;
    TransformSpec transform;

    int dim_i() const { return transform.dim_i; }
    int dim_k() const { return transform.dim_k; }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Per-point record of the derivative cross-checks. Mismatches are
/// max-entry deviations between the supplied derivative and a central finite
/// difference, scaled by max(1, largest analytic entry at that point).
struct PointReport {
    Vec point;
    double mismatch_du = 0.0;
    double mismatch_dV = 0.0;
    double mismatch_dalpha = 0.0;
    double mismatch_dbeta = 0.0;
    double mismatch_ddalpha = 0.0;
    double mismatch_ddbeta = 0.0;
    double sigma_min = 0.0;  // smallest singular value of beta
    double sigma_max = 0.0;
    bool rank_ok = false;
    bool pass = false;
};

struct ValidationReport {
    std::vector<PointReport> points;
    bool pass = false;
    /// True when I = (3/2) K, the case where the transformation can be
    /// one-to-one between (q, qdot) and (qbar, qbar_dot, qbar_ddot).
    /// Reported for information only, never enforced.
    bool one_to_one_correspondence = false;
    double tolerance = 1e-5;
};

/// Cross-check every supplied derivative against central finite differences
/// (step max(1e-6, 1e-6|x|)) at the given sample points and verify the
/// regularity assumption rank(beta) = K (sigma_min/sigma_max > 1e-10).
/// Throws StructuralError when a callback's output shape disagrees with the
/// declared I, K.
ValidationReport validate_model(const ModelSpec& spec, const std::vector<Vec>& sample_points);

/// Inverse B of the Gram matrix beta^T beta at qbar. B is symmetric and
/// satisfies B (beta^T beta) = identity. Throws SingularityError (carrying
/// the condition estimate) when cond(beta^T beta) exceeds 1e12.
Mat gram_inverse(const ModelSpec& spec, const Vec& qbar);

// ---------------------------------------------------------------------------
// Evaluation cache
// ---------------------------------------------------------------------------

/// All transformation data evaluated at a single qbar, plus the Gram inverse.
/// Built once per phase-space evaluation and shared by the kinematics and
/// dynamics routines.
struct TransformEval {
    Vec alpha;       // I
    Mat beta;        // I x K
    Mat dalpha;      // I x K
    Tensor3 dbeta;   // I x K x K
    Tensor3 ddalpha; // I x K x K
    Tensor4 ddbeta;  // I x K x K x K
    Mat gram_inv;    // K x K

    int dim_i = 0;
    int dim_k = 0;

    /// Jacobian of q with respect to qbar at fixed qbar_dot:
    /// T_ik = dalpha(i,k) + sum_l dbeta(i,l,k) qd_l.
    Mat jac_q(const Vec& qd) const;

    /// Total time derivative of beta: (d beta/dt)_ik = sum_l dbeta(i,k,l) qd_l.
    Mat beta_dot(const Vec& qd) const;

    /// Velocity-independent part of q_ddot:
    /// A2_i = ddalpha(i,k,l) qd_k qd_l + ddbeta(i,k,l,m) qd_k qd_l qd_m.
    Vec accel_bias(const Vec& qd) const;

    /// Total time derivative of T_ik, with qbar_ddot supplied:
    /// (dT/dt)_ik = ddalpha(i,k,l) qd_l + ddbeta(i,l,k,m) qd_l qd_m + dbeta(i,l,k) qdd_l.
    Mat jac_q_dot(const Vec& qd, const Vec& qdd) const;
};

/// Evaluate the transformation at qbar. With require_gram_inverse the Gram
/// matrix is inverted under the regularity threshold of gram_inverse.
TransformEval eval_transform(const ModelSpec& spec, const Vec& qbar,
                             bool require_gram_inverse = true);

}  // namespace ostro
