#include "ostro/dynamics.hpp"

#include <cmath>

#include "ostro/kinematics.hpp"

namespace ostro {

namespace {

// Step for the internal directional differences below. The built-in models
// have constant or linear derivative callbacks, for which central
// differencing is exact to roundoff.
double dir_step(const Vec& x) { return 6e-6 * std::max(1.0, x.lpNorm<Eigen::Infinity>()); }

/// Directional derivative along v of a matrix-valued callback, D_v f (q).
Mat dir_derivative(const std::function<Mat(const Vec&)>& f, const Vec& q, const Vec& v) {
    const double vn = v.norm();
    if (vn == 0.0) {
        const Mat probe = f(q);
        return Mat::Zero(probe.rows(), probe.cols());
    }
    const double h = dir_step(q);
    const Vec e = v / vn;
    return (f(q + h * e) - f(q - h * e)) * (vn / (2.0 * h));
}

Vec dir_derivative(const std::function<Vec(const Vec&)>& f, const Vec& q, const Vec& v) {
    const double vn = v.norm();
    if (vn == 0.0) return Vec::Zero(f(q).size());
    const double h = dir_step(q);
    const Vec e = v / vn;
    return (f(q + h * e) - f(q - h * e)) * (vn / (2.0 * h));
}

Tensor3 dir_derivative(const std::function<Tensor3(const Vec&)>& f, const Vec& q, const Vec& v) {
    const double vn = v.norm();
    if (vn == 0.0) {
        Tensor3 probe = f(q);
        return Tensor3(probe.dim0(), probe.dim1(), probe.dim2());
    }
    const double h = dir_step(q);
    const Vec e = v / vn;
    Tensor3 fp = f(q + h * e);
    const Tensor3 fm = f(q - h * e);
    const double scale = vn / (2.0 * h);
    for (int i = 0; i < fp.dim0(); ++i)
        for (int j = 0; j < fp.dim1(); ++j)
            for (int k = 0; k < fp.dim2(); ++k)
                fp(i, j, k) = (fp(i, j, k) - fm(i, j, k)) * scale;
    return fp;
}

Tensor4 dir_derivative(const std::function<Tensor4(const Vec&)>& f, const Vec& q, const Vec& v) {
    const double vn = v.norm();
    if (vn == 0.0) {
        Tensor4 probe = f(q);
        return Tensor4(probe.dim0(), probe.dim1(), probe.dim2(), probe.dim3());
    }
    const double h = dir_step(q);
    const Vec e = v / vn;
    Tensor4 fp = f(q + h * e);
    const Tensor4 fm = f(q - h * e);
    const double scale = vn / (2.0 * h);
    for (int i = 0; i < fp.dim0(); ++i)
        for (int j = 0; j < fp.dim1(); ++j)
            for (int k = 0; k < fp.dim2(); ++k)
                for (int l = 0; l < fp.dim3(); ++l)
                    fp(i, j, k, l) = (fp(i, j, k, l) - fm(i, j, k, l)) * scale;
    return fp;
}

}  // namespace

Mat omega(const ModelSpec& spec, const Vec& q) {
    const Mat du = spec.lagrangian.du(q);
    return du - du.transpose();
}

Vec second_order_residual(const ModelSpec& spec, const Vec& q, const Vec& qdot,
                          const Vec& qddot) {
    const auto& lag = spec.lagrangian;
    return lag.mass * qddot + omega(spec, q) * qdot + lag.dV(q);
}

Vec fourth_order_residual(const ModelSpec& spec, const Jet& jet, const Vec& qbar_ddddot) {
    const int I = spec.dim_i();
    const int K = spec.dim_k();
    if (!jet.has_jerk()) throw StructuralError("fourth_order_residual requires the jerk");
    if (qbar_ddddot.size() != K)
        throw StructuralError("fourth_order_residual: qbar_ddddot has wrong dimension");

    const TransformEval ev = eval_transform(spec, jet.qbar, false);
    const auto& lag = spec.lagrangian;
    const auto& tr = spec.transform;
    const double m = lag.mass;
    const Vec& qd = jet.qbar_dot;
    const Vec& qdd = jet.qbar_ddot;
    const Vec& qd3 = *jet.qbar_dddot;

    const Vec q = ev.alpha + ev.beta * qd;
    const Mat T = ev.jac_q(qd);
    const Mat bdot = ev.beta_dot(qd);
    const Vec qdot = T * qd + ev.beta * qdd;
    const Vec qddot = ev.accel_bias(qd) + (T + 2.0 * bdot) * qdd + ev.beta * qd3;

    const Mat om = omega(spec, q);
    const Vec el = m * qddot + om * qdot + lag.dV(q);

    // Time derivative of the acceleration bias A2(qd):
    //   third transform derivatives contracted with qd, plus the second
    //   derivatives hit by qdd.
    const Tensor3 d3a = dir_derivative(tr.ddalpha, jet.qbar, qd);  // alpha''' . qd
    const Tensor4 d3b = dir_derivative(tr.ddbeta, jet.qbar, qd);   // beta'''  . qd
    Vec a2dot = Vec::Zero(I);
    for (int i = 0; i < I; ++i) {
        double s = 0.0;
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < K; ++l) {
                s += d3a(i, k, l) * qd[k] * qd[l];
                s += 2.0 * ev.ddalpha(i, k, l) * qdd[k] * qd[l];
                for (int n = 0; n < K; ++n) {
                    s += d3b(i, k, l, n) * qd[k] * qd[l] * qd[n];
                    s += ev.ddbeta(i, k, l, n) *
                         (qdd[k] * qd[l] * qd[n] + qd[k] * qdd[l] * qd[n] +
                          qd[k] * qd[l] * qdd[n]);
                }
            }
        a2dot[i] = s;
    }

    const Mat Tdot = ev.jac_q_dot(qd, qdd);
    Mat bddot = Mat::Zero(I, K);  // second time derivative of beta
    for (int i = 0; i < I; ++i)
        for (int k = 0; k < K; ++k) {
            double s = 0.0;
            for (int l = 0; l < K; ++l) {
                s += ev.dbeta(i, k, l) * qdd[l];
                for (int n = 0; n < K; ++n) s += ev.ddbeta(i, k, l, n) * qd[l] * qd[n];
            }
            bddot(i, k) = s;
        }

    const Vec qdddot =
        a2dot + (Tdot + 2.0 * bddot) * qdd + (T + 3.0 * bdot) * qd3 + ev.beta * qbar_ddddot;

    const Mat omdot = dir_derivative(spec.lagrangian.du, q, qdot);
    const Vec hessV_qdot = dir_derivative(spec.lagrangian.dV, q, qdot);
    const Vec eldot =
        m * qdddot + (omdot - omdot.transpose()) * qdot + om * qddot + hessV_qdot;

    return T.transpose() * el - bdot.transpose() * el - ev.beta.transpose() * eldot;
}

Vec fourth_derivative(const ModelSpec& spec, const Jet& jet) {
    const TransformEval ev = eval_transform(spec, jet.qbar, true);
    const Vec r0 = fourth_order_residual(spec, jet, Vec::Zero(spec.dim_k()));
    return ev.gram_inv * r0 / spec.lagrangian.mass;
}

double hamiltonian(const ModelSpec& spec, const CanonicalState& state) {
    const TransformEval ev = eval_transform(spec, state.Q1, true);
    const auto& lag = spec.lagrangian;

    const Vec qdd = accel_from_canonical(spec, state);
    const Vec q = ev.alpha + ev.beta * state.Q2;
    const Mat T = ev.jac_q(state.Q2);
    const Vec qdot = T * state.Q2 + ev.beta * qdd;
    const Vec p = lag.mass * qdot + lag.u(q);

    return 0.5 * lag.mass * qdot.squaredNorm() + lag.V(q) +
           (state.P1 - T.transpose() * p).dot(state.Q2);
}

GradH hamiltonian_gradient(const ModelSpec& spec, const CanonicalState& state) {
    const TransformEval ev = eval_transform(spec, state.Q1, true);
    const auto& lag = spec.lagrangian;

    const Vec qdd = accel_from_canonical(spec, state);
    const Vec q = ev.alpha + ev.beta * state.Q2;
    const Mat T = ev.jac_q(state.Q2);
    const Vec qdot = T * state.Q2 + ev.beta * qdd;
    const Vec p = lag.mass * qdot + lag.u(q);

    // w_i = dV_i - (d u_j / d q_i) qdot_j
    const Vec w = lag.dV(q) - lag.du(q).transpose() * qdot;

    GradH g;
    g.dP1 = state.Q2;
    g.dP2 = qdd;
    g.dQ1 = T.transpose() * w - ev.jac_q_dot(state.Q2, qdd).transpose() * p;
    g.dQ2 = state.P1 + ev.beta.transpose() * w -
            (T + ev.beta_dot(state.Q2)).transpose() * p;
    return g;
}

CanonicalState canonical_rhs(const ModelSpec& spec, const CanonicalState& state) {
    GradH g = hamiltonian_gradient(spec, state);
    return {std::move(g.dP1), std::move(g.dP2), Vec(-g.dQ1), Vec(-g.dQ2)};
}

}  // namespace ostro
