#include "ostro/kinematics.hpp"

#include "ostro/dynamics.hpp"

namespace ostro {

namespace {

void require_dims(const ModelSpec& spec, const Jet& jet, bool need_jerk) {
    const int K = spec.dim_k();
    if (jet.qbar.size() != K || jet.qbar_dot.size() != K || jet.qbar_ddot.size() != K)
        throw StructuralError("jet component has wrong dimension");
    if (need_jerk) {
        if (!jet.has_jerk())
            throw StructuralError("operation requires jet.qbar_dddot");
        if (jet.qbar_dddot->size() != K)
            throw StructuralError("jet.qbar_dddot has wrong dimension");
    }
}

}  // namespace

Vec lift_q(const ModelSpec& spec, const Vec& qbar, const Vec& qbar_dot) {
    if (qbar.size() != spec.dim_k() || qbar_dot.size() != spec.dim_k())
        throw StructuralError("lift_q: argument has wrong dimension");
    const TransformEval ev = eval_transform(spec, qbar, false);
    return ev.alpha + ev.beta * qbar_dot;
}

Vec lift_qdot(const ModelSpec& spec, const Jet& jet) {
    require_dims(spec, jet, false);
    const TransformEval ev = eval_transform(spec, jet.qbar, false);
    return ev.jac_q(jet.qbar_dot) * jet.qbar_dot + ev.beta * jet.qbar_ddot;
}

Vec lift_qddot(const ModelSpec& spec, const Jet& jet) {
    require_dims(spec, jet, true);
    const TransformEval ev = eval_transform(spec, jet.qbar, false);
    const Vec& qd = jet.qbar_dot;
    const Vec& qdd = jet.qbar_ddot;
    // qddot = A2 + (T + 2 beta_dot) qbar_ddot + beta qbar_dddot
    return ev.accel_bias(qd) + (ev.jac_q(qd) + 2.0 * ev.beta_dot(qd)) * qdd +
           ev.beta * (*jet.qbar_dddot);
}

double induced_lagrangian(const ModelSpec& spec, const Jet& jet) {
    require_dims(spec, jet, false);
    const Vec q = lift_q(spec, jet.qbar, jet.qbar_dot);
    const Vec qdot = lift_qdot(spec, jet);
    const auto& lag = spec.lagrangian;
    return 0.5 * lag.mass * qdot.squaredNorm() + qdot.dot(lag.u(q)) - lag.V(q);
}

std::pair<Vec, Vec> momenta(const ModelSpec& spec, const Jet& jet) {
    require_dims(spec, jet, true);
    const TransformEval ev = eval_transform(spec, jet.qbar, false);
    const auto& lag = spec.lagrangian;

    const Vec q = ev.alpha + ev.beta * jet.qbar_dot;
    const Vec qdot = ev.jac_q(jet.qbar_dot) * jet.qbar_dot + ev.beta * jet.qbar_ddot;
    const Vec qddot = lift_qddot(spec, jet);

    const Vec p = lag.mass * qdot + lag.u(q);
    const Vec el = lag.mass * qddot + omega(spec, q) * qdot + lag.dV(q);

    const Mat T = ev.jac_q(jet.qbar_dot);
    Vec P2 = ev.beta.transpose() * p;
    Vec P1 = -ev.beta.transpose() * el + T.transpose() * p;
    return {std::move(P1), std::move(P2)};
}

Vec accel_from_canonical(const ModelSpec& spec, const CanonicalState& state) {
    const int K = spec.dim_k();
    if (state.dim() != K) throw StructuralError("canonical state has wrong dimension");
    const TransformEval ev = eval_transform(spec, state.Q1, true);
    const auto& lag = spec.lagrangian;

    const Vec q = ev.alpha + ev.beta * state.Q2;
    const Vec uq = lag.u(q);
    const Vec tq2 = ev.jac_q(state.Q2) * state.Q2;  // (alpha' + beta' qd) qd
    const Vec rhs = state.P2 / lag.mass - ev.beta.transpose() * (uq / lag.mass + tq2);
    return ev.gram_inv * rhs;
}

Vec jerk_from_canonical(const ModelSpec& spec, const CanonicalState& state) {
    const int K = spec.dim_k();
    if (state.dim() != K) throw StructuralError("canonical state has wrong dimension");
    const TransformEval ev = eval_transform(spec, state.Q1, true);
    const auto& lag = spec.lagrangian;
    const double m = lag.mass;

    const Vec qdd = accel_from_canonical(spec, state);
    const Vec q = ev.alpha + ev.beta * state.Q2;
    const Mat T = ev.jac_q(state.Q2);
    const Vec qdot = T * state.Q2 + ev.beta * qdd;
    const Vec uq = lag.u(q);

    const Vec inner = (omega(spec, q) * qdot + lag.dV(q)) / m + ev.accel_bias(state.Q2) +
                      (T + 2.0 * ev.beta_dot(state.Q2)) * qdd;
    const Vec v = state.P1 / m - T.transpose() * (qdot + uq / m) + ev.beta.transpose() * inner;
    return -(ev.gram_inv * v);
}

CanonicalState canonical_from_jet(const ModelSpec& spec, const Jet& jet) {
    require_dims(spec, jet, true);
    auto [p1, p2] = momenta(spec, jet);
    return {jet.qbar, jet.qbar_dot, std::move(p1), std::move(p2)};
}

Jet jet_from_canonical(const ModelSpec& spec, const CanonicalState& state) {
    Jet jet;
    jet.qbar = state.Q1;
    jet.qbar_dot = state.Q2;
    jet.qbar_ddot = accel_from_canonical(spec, state);
    jet.qbar_dddot = jerk_from_canonical(spec, state);
    return jet;
}

}  // namespace ostro
