#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ostro/integrate.hpp"
#include "ostro/oscillator.hpp"
#include "test_helpers.hpp"

using namespace ostro;
using testing::make_nonlinear_model;
using testing::oracle_gradient;
using testing::random_jet;
using testing::random_state;
using testing::random_vec;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

double closed_form_hamiltonian(const oscillator::Params& p, const CanonicalState& s) {
    const double l = p.lambda, m = p.m, h = p.h1;
    const double q11 = s.Q1[0], q12 = s.Q1[1], q21 = s.Q2[0], q22 = s.Q2[1];
    const double p11 = s.P1[0], p12 = s.P1[1], p21 = s.P2[0], p22 = s.P2[1];
    return (p21 * p21 + p22 * p22) / (2.0 * l * l * m) + (p11 - p22 / l) * q21 +
           p12 * q22 - 0.5 * m * q22 * q22 +
           0.5 * h * ((q11 + l * q22) * (q11 + l * q22) + q12 * q12 + l * l * q21 * q21);
}

CanonicalState closed_form_rhs(const oscillator::Params& p, const CanonicalState& s) {
    const double l = p.lambda, m = p.m, h = p.h1;
    CanonicalState dot = CanonicalState::Zero(2);
    dot.Q1[0] = s.Q2[0];
    dot.Q1[1] = s.Q2[1];
    dot.Q2[0] = s.P2[0] / (l * l * m);
    dot.Q2[1] = s.P2[1] / (l * l * m) - s.Q2[0] / l;
    dot.P2[0] = s.P2[1] / l - s.P1[0] - l * l * h * s.Q2[0];
    dot.P2[1] = m * s.Q2[1] - l * h * (s.Q1[0] + l * s.Q2[1]) - s.P1[1];
    dot.P1[0] = -h * (s.Q1[0] + l * s.Q2[1]);
    dot.P1[1] = -h * s.Q1[1];
    return dot;
}

/// The reduced equations of the oscillator written out by expanding the two
/// total time derivatives term by term (first displayed form).
Vec reduced_equations_expanded(const oscillator::Params& p, const Jet& jet, const Vec& q4) {
    const double l = p.lambda, m = p.m, h1 = p.h1, h2 = p.h2, h3 = p.h3;
    const Vec& qb = jet.qbar;
    const Vec& qd = jet.qbar_dot;
    const Vec& qdd = jet.qbar_ddot;
    const Vec& qd3 = *jet.qbar_dddot;
    Vec r(2);
    r[0] = h1 * (qb[0] + l * qd[1]) + m * (qdd[0] + l * qd3[1]) - l * l * h3 * qdd[0] -
           l * l * m * q4[0];
    r[1] = h2 * qb[1] + m * qdd[1] - l * h1 * (qd[0] + l * qdd[1]) -
           l * m * (qd3[0] + l * q4[1]);
    return r;
}

/// Second displayed form: the factorized combination of the standard
/// equations after substituting the lift.
Vec reduced_equations_factorized(const oscillator::Params& p, const Jet& jet, const Vec& q4) {
    const double l = p.lambda, m = p.m, h1 = p.h1, h2 = p.h2, h3 = p.h3;
    const Vec& qb = jet.qbar;
    const Vec& qd = jet.qbar_dot;
    const Vec& qdd = jet.qbar_ddot;
    const Vec& qd3 = *jet.qbar_dddot;
    const double el1 = m * (qdd[0] + l * qd3[1]) + h1 * (qb[0] + l * qd[1]);
    const double el2 = m * qdd[1] + h2 * qb[1];
    const double el1_dot = m * (qd3[0] + l * q4[1]) + h1 * (qd[0] + l * qdd[1]);
    const double el3_dot = m * l * q4[0] + h3 * l * qdd[0];
    Vec r(2);
    r[0] = el1 - l * el3_dot;
    r[1] = el2 - l * el1_dot;
    return r;
}

}  // namespace

TEST_CASE("omega vanishes for the oscillator and picks up the curl of u") {
    const ModelSpec osc = oscillator::make_model({});
    CHECK(omega(osc, vec3(0.3, -1.0, 2.0)).cwiseAbs().maxCoeff() == 0.0);

    ModelSpec spec = oscillator::make_model({});
    spec.lagrangian.u = [](const Vec& q) { return vec3(q[1], 0.0, 0.0); };
    spec.lagrangian.du = [](const Vec&) {
        Mat du = Mat::Zero(3, 3);
        du(0, 1) = 1.0;
        return du;
    };
    const Mat om = omega(spec, vec3(1, 2, 3));
    CHECK(om(0, 1) == doctest::Approx(1.0));
    CHECK(om(1, 0) == doctest::Approx(-1.0));
    CHECK(om.cwiseAbs().sum() == doctest::Approx(2.0));

    const ModelSpec nonlin = make_nonlinear_model(3);
    std::mt19937 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Mat o = omega(nonlin, random_vec(rng, 3));
        CHECK((o + o.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("second-order residual vanishes exactly on solutions") {
    const ModelSpec spec = oscillator::make_model({});
    CHECK(second_order_residual(spec, vec3(1, 0, 0), Vec::Zero(3), vec3(-1, 0, 0)).norm() ==
          0.0);
    CHECK(second_order_residual(spec, vec3(1, 0, 0), Vec::Zero(3), Vec::Zero(3))[0] ==
          doctest::Approx(1.0));

    const oscillator::Params p{};
    const auto sol = oscillator::analytic_q(p, vec3(1, 1, 1), Vec::Zero(3), 0.7);
    CHECK(second_order_residual(spec, sol.q, sol.qdot, sol.qddot).lpNorm<Eigen::Infinity>() <
          1e-12);
}

TEST_CASE("fourth-order residual vanishes on the analytic solutions") {
    const oscillator::Params p{};
    const ModelSpec spec = oscillator::make_model(p);

    Jet zero;
    zero.qbar = vec2(0, 0);
    zero.qbar_dot = vec2(0, 0);
    zero.qbar_ddot = vec2(0, 0);
    zero.qbar_dddot = vec2(0, 0);
    CHECK(fourth_order_residual(spec, zero, vec2(0, 0)).norm() == 0.0);

    std::array<double, 8> osc_mode{1, 0, 0, 0, 0, 0, 0, 0};
    const JetWithFourth a = oscillator::analytic_qbar(p, osc_mode, 0.5);
    CHECK(fourth_order_residual(spec, a.jet, a.qbar_ddddot).lpNorm<Eigen::Infinity>() < 1e-10);

    std::array<double, 8> growing{0, 0, 0, 0, 0, 0, 1, 0};
    const JetWithFourth b = oscillator::analytic_qbar(p, growing, 0.2);
    CHECK(fourth_order_residual(spec, b.jet, b.qbar_ddddot).lpNorm<Eigen::Infinity>() < 1e-9);

    std::array<double, 8> decaying{0, 0, 0, 0, 0.4, -0.7, 0, 0};
    const JetWithFourth c = oscillator::analytic_qbar(p, decaying, 1.1);
    CHECK(fourth_order_residual(spec, c.jet, c.qbar_ddddot).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("the two displayed forms of the reduced equations agree with the residual") {
    const oscillator::Params p{1.0, 1.0, 2.0, 3.0, 0.8};  // anisotropic on purpose
    const ModelSpec spec = oscillator::make_model(p);
    std::mt19937 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Jet jet = random_jet(rng, 2);
        const Vec q4 = random_vec(rng, 2);
        const Vec expanded = reduced_equations_expanded(p, jet, q4);
        const Vec factorized = reduced_equations_factorized(p, jet, q4);
        const Vec generic = fourth_order_residual(spec, jet, q4);
        CHECK((expanded - factorized).lpNorm<Eigen::Infinity>() < 1e-10);
        CHECK((generic - expanded).lpNorm<Eigen::Infinity>() < 1e-9);
    }
}

TEST_CASE("solving for the fourth derivative zeroes the residual") {
    for (int which = 0; which < 2; ++which) {
        const ModelSpec spec = which == 0 ? oscillator::make_model({1, 1, 2, 3, 0.9})
                                          : make_nonlinear_model(14);
        std::mt19937 rng(19 + which);
        for (int trial = 0; trial < 10; ++trial) {
            const Jet jet = random_jet(rng, 2);
            const Vec q4 = fourth_derivative(spec, jet);
            CHECK(fourth_order_residual(spec, jet, q4).lpNorm<Eigen::Infinity>() < 1e-8);
        }
    }
}

TEST_CASE("chain-rule lifts match time differencing along a smooth path") {
    const ModelSpec spec = make_nonlinear_model(25);
    std::mt19937 rng(23);
    const Vec a = random_vec(rng, 2), b = random_vec(rng, 2), c = random_vec(rng, 2),
              d = random_vec(rng, 2), e = random_vec(rng, 2);
    auto path_jet = [&](double t) {
        Jet jet;
        jet.qbar = a + t * b + 0.5 * t * t * c + t * t * t / 6.0 * d + t * t * t * t / 24.0 * e;
        jet.qbar_dot = b + t * c + 0.5 * t * t * d + t * t * t / 6.0 * e;
        jet.qbar_ddot = c + t * d + 0.5 * t * t * e;
        jet.qbar_dddot = Vec(d + t * e);
        return jet;
    };
    const double t0 = 0.37, h = 1e-5;
    const Vec qdot_fd = (lift_q(spec, path_jet(t0 + h).qbar, path_jet(t0 + h).qbar_dot) -
                         lift_q(spec, path_jet(t0 - h).qbar, path_jet(t0 - h).qbar_dot)) /
                        (2.0 * h);
    CHECK((lift_qdot(spec, path_jet(t0)) - qdot_fd).lpNorm<Eigen::Infinity>() < 1e-8);

    const Vec qddot_fd =
        (lift_qdot(spec, path_jet(t0 + h)) - lift_qdot(spec, path_jet(t0 - h))) / (2.0 * h);
    CHECK((lift_qddot(spec, path_jet(t0)) - qddot_fd).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("hamiltonian equals the closed quadratic form") {
    const oscillator::Params p{};
    const ModelSpec spec = oscillator::make_model(p);

    CHECK(hamiltonian(spec, CanonicalState::Zero(2)) == 0.0);

    CanonicalState s = CanonicalState::Zero(2);
    s.Q1 = vec2(1, 0);
    CHECK(hamiltonian(spec, s) == doctest::Approx(0.5));

    std::mt19937 rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        const CanonicalState st = random_state(rng, 2);
        CHECK(hamiltonian(spec, st) ==
              doctest::Approx(closed_form_hamiltonian(p, st)).epsilon(1e-12));
    }
}

TEST_CASE("hamiltonian gradient at simple states and against finite differences") {
    const oscillator::Params p{};
    const ModelSpec spec = oscillator::make_model(p);

    const GradH zero = hamiltonian_gradient(spec, CanonicalState::Zero(2));
    CHECK(flatten(zero).norm() == 0.0);

    CanonicalState s = CanonicalState::Zero(2);
    s.Q1 = vec2(1, 0);
    const GradH g = hamiltonian_gradient(spec, s);
    CHECK(g.dQ1[0] == doctest::Approx(1.0));
    CHECK(g.dQ1[1] == doctest::Approx(0.0));
    CHECK(g.dQ2[0] == doctest::Approx(0.0));
    CHECK(g.dQ2[1] == doctest::Approx(1.0));
    CHECK(g.dP1.norm() == 0.0);
    CHECK(g.dP2.norm() == 0.0);

    for (int which = 0; which < 3; ++which) {
        const ModelSpec m = which == 0   ? oscillator::make_model({})
                            : which == 1 ? oscillator::make_model({1, 1, 2, 3, 0.7})
                                         : make_nonlinear_model(31);
        std::mt19937 rng(100 + which);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const CanonicalState st = random_state(rng, 2);
            const Vec analytic = flatten(hamiltonian_gradient(m, st));
            const Vec fd = oracle_gradient(
                [&m](const CanonicalState& x) { return hamiltonian(m, x); }, st);
            const double scale = std::max(1.0, analytic.lpNorm<Eigen::Infinity>());
            worst = std::max(worst, (analytic - fd).lpNorm<Eigen::Infinity>() / scale);
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("canonical vector field matches the closed-form equations") {
    const oscillator::Params p{};
    const ModelSpec spec = oscillator::make_model(p);

    CHECK(flatten(canonical_rhs(spec, CanonicalState::Zero(2))).norm() == 0.0);

    std::mt19937 rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        const CanonicalState s = random_state(rng, 2);
        const CanonicalState dot = canonical_rhs(spec, s);
        CHECK((dot.Q1 - s.Q2).lpNorm<Eigen::Infinity>() < 1e-12);
        const CanonicalState want = closed_form_rhs(p, s);
        CHECK((flatten(dot) - flatten(want)).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("canonical and jet-space integration produce the same path") {
    const ModelSpec spec = oscillator::make_model({});
    std::mt19937 rng(41);
    const double dt = 1e-3;
    const int steps = 1000;

    auto jet_rhs = [&spec](const Vec& y) {
        Jet jet;
        jet.qbar = y.segment(0, 2);
        jet.qbar_dot = y.segment(2, 2);
        jet.qbar_ddot = y.segment(4, 2);
        jet.qbar_dddot = Vec(y.segment(6, 2));
        Vec dy(8);
        dy.segment(0, 2) = jet.qbar_dot;
        dy.segment(2, 2) = jet.qbar_ddot;
        dy.segment(4, 2) = *jet.qbar_dddot;
        dy.segment(6, 2) = fourth_derivative(spec, jet);
        return dy;
    };
    auto canonical_flat_rhs = [&spec](const Vec& x) {
        return flatten(canonical_rhs(spec, unflatten(x)));
    };

    for (int trial = 0; trial < 10; ++trial) {
        const Jet jet0 = random_jet(rng, 2);
        Vec y(8);
        y.segment(0, 2) = jet0.qbar;
        y.segment(2, 2) = jet0.qbar_dot;
        y.segment(4, 2) = jet0.qbar_ddot;
        y.segment(6, 2) = *jet0.qbar_dddot;
        Vec x = flatten(canonical_from_jet(spec, jet0));

        double worst = 0.0;
        for (int s = 0; s < steps; ++s) {
            y = step_rk4(jet_rhs, y, dt);
            x = step_rk4(canonical_flat_rhs, x, dt);
            worst = std::max(worst,
                             (y.segment(0, 2) - x.segment(0, 2)).lpNorm<Eigen::Infinity>());
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("energy is conserved along canonical trajectories") {
    for (int which = 0; which < 2; ++which) {
        const oscillator::Params p =
            which == 0 ? oscillator::Params{} : oscillator::Params{1.0, 1.0, 2.0, 3.0, 0.8};
        const ModelSpec spec = oscillator::make_model(p);
        const System sys = make_system(spec, "oscillator");
        std::mt19937 rng(200 + which);

        IntegrateOptions opts;
        opts.dt = 1e-3;
        opts.steps = 10000;
        const CanonicalState s0 = random_state(rng, 2);
        const Trajectory traj = integrate(sys, s0, opts);
        REQUIRE_FALSE(traj.metadata.diverged);
        const double h0 = traj.H_values.front();
        double drift = 0.0;
        for (double h : traj.H_values) drift = std::max(drift, std::abs(h - h0));
        CHECK(drift < 1e-6 * std::max(1.0, std::abs(h0)));
    }
}

TEST_CASE("potential shortcut: dV contracted with the lift Jacobians") {
    for (int which = 0; which < 2; ++which) {
        const ModelSpec spec =
            which == 0 ? oscillator::make_model({}) : make_nonlinear_model(47);
        std::mt19937 rng(300 + which);
        for (int trial = 0; trial < 10; ++trial) {
            const CanonicalState s = random_state(rng, 2);
            const TransformEval ev = eval_transform(spec, s.Q1, false);
            const Vec q = ev.alpha + ev.beta * s.Q2;
            const Vec dv = spec.lagrangian.dV(q);
            const Vec viaQ1 = ev.jac_q(s.Q2).transpose() * dv;
            const Vec viaQ2 = ev.beta.transpose() * dv;

            auto vbar = [&spec](const CanonicalState& st) {
                return spec.lagrangian.V(lift_q(spec, st.Q1, st.Q2));
            };
            const Vec fd = oracle_gradient(vbar, s);
            CHECK((viaQ1 - fd.segment(0, 2)).lpNorm<Eigen::Infinity>() < 1e-6);
            CHECK((viaQ2 - fd.segment(2, 2)).lpNorm<Eigen::Infinity>() < 1e-6);
            CHECK(fd.segment(4, 4).lpNorm<Eigen::Infinity>() < 1e-9);
        }
    }
}

TEST_CASE("differential identity for the kinetic momentum along canonical directions") {
    const ModelSpec spec = make_nonlinear_model(53);
    std::mt19937 rng(59);
    auto kinetic_momentum = [&spec](const CanonicalState& s) {
        Jet jet;
        jet.qbar = s.Q1;
        jet.qbar_dot = s.Q2;
        jet.qbar_ddot = accel_from_canonical(spec, s);
        const Vec q = lift_q(spec, s.Q1, s.Q2);
        return Vec(spec.lagrangian.mass * lift_qdot(spec, jet) + spec.lagrangian.u(q));
    };
    for (int trial = 0; trial < 10; ++trial) {
        const CanonicalState s0 = random_state(rng, 2);
        const Vec dir = random_vec(rng, 8);
        const double h = 1e-6;
        const Vec x = flatten(s0);
        const Vec dp =
            (kinetic_momentum(unflatten(x + h * dir)) - kinetic_momentum(unflatten(x - h * dir))) /
            (2.0 * h);

        const TransformEval ev = eval_transform(spec, s0.Q1, false);
        const Vec p = kinetic_momentum(s0);
        const Vec dQ1 = dir.segment(0, 2);
        const Vec dP2 = dir.segment(6, 2);
        Vec lhs = ev.beta.transpose() * dp - dP2;
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 3; ++i)
                for (int l = 0; l < 2; ++l) lhs[k] += p[i] * ev.dbeta(i, k, l) * dQ1[l];
        CHECK(lhs.lpNorm<Eigen::Infinity>() < 1e-6);
    }
}
