#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "ostro/integrate.hpp"
#include "ostro/oscillator.hpp"
#include "test_helpers.hpp"

using namespace ostro;
using oscillator::Params;
using testing::random_state;

namespace {

const double kGrowthRate = std::sqrt(3.0) / 2.0;

CanonicalState constrained_plus_unstable(const Params& p, double unstable_amplitude) {
    std::array<double, 8> cbar{1, 0, 0, 0, 0, 0, unstable_amplitude, 0};
    return oscillator::analytic_canonical(p, cbar, 0.0);
}

}  // namespace

TEST_CASE("rk4 step basics") {
    auto zero_rhs = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    Vec x0(3);
    x0 << 1.0, -2.0, 0.5;
    CHECK((step_rk4(zero_rhs, x0, 0.1) - x0).norm() == 0.0);

    // Exponential growth: one RK4 step of xdot = x from 1 at dt = 0.1 has a
    // local error around 8.5e-8 against e^0.1.
    auto exp_rhs = [](const Vec& x) { return x; };
    Vec one(1);
    one << 1.0;
    const double stepped = step_rk4(exp_rhs, one, 0.1)[0];
    CHECK(std::abs(stepped - std::exp(0.1)) < 1e-7);
    CHECK(std::abs(stepped - std::exp(0.1)) > 1e-9);

    // Harmonic oscillator over one full period.
    auto harmonic = [](const Vec& x) {
        Vec dx(2);
        dx << x[1], -x[0];
        return dx;
    };
    Vec y(2);
    y << 1.0, 0.0;
    const double dt = 1e-3;
    const long steps = std::lround(2.0 * M_PI / dt);
    Vec z = y;
    for (long i = 0; i < steps; ++i) z = step_rk4(harmonic, z, dt);
    // Remaining fraction of the period (2*pi is not a multiple of dt).
    z = step_rk4(harmonic, z, 2.0 * M_PI - steps * dt);
    CHECK((z - y).norm() < 1e-10);
}

TEST_CASE("rk4 step rejects non-finite stages") {
    auto bad_rhs = [](const Vec& x) {
        Vec dx = x;
        dx[0] = std::numeric_limits<double>::quiet_NaN();
        return dx;
    };
    Vec x0(1);
    x0 << 1.0;
    CHECK_THROWS_AS(step_rk4(bad_rhs, x0, 0.1), DivergenceError);
}

TEST_CASE("rk4 global error scales as dt^4") {
    auto harmonic = [](const Vec& x) {
        Vec dx(2);
        dx << x[1], -x[0];
        return dx;
    };
    auto global_error = [&](double dt) {
        Vec z(2);
        z << 1.0, 0.0;
        const long steps = std::lround(1.0 / dt);
        for (long i = 0; i < steps; ++i) z = step_rk4(harmonic, z, dt);
        Vec exact(2);
        exact << std::cos(1.0), -std::sin(1.0);
        return (z - exact).norm();
    };
    const double e1 = global_error(1e-2);
    const double e2 = global_error(5e-3);
    const double e3 = global_error(2.5e-3);
    CHECK(e1 / e2 > 8.0);
    CHECK(e1 / e2 < 32.0);
    CHECK(e2 / e3 > 8.0);
    CHECK(e2 / e3 < 32.0);
}

TEST_CASE("projected oscillator run keeps constraints tight and energy flat") {
    const Params p{};
    const ModelSpec spec = oscillator::make_model(p);
    const System sys = make_system(spec, "oscillator");
    const ConstraintChain chain = oscillator::paper_constraint_chain(p);

    IntegrateOptions opts;
    opts.dt = 1e-3;
    opts.steps = 10000;
    opts.mode = RunMode::projected;
    opts.chain = &chain;

    const CanonicalState s0 = constrained_plus_unstable(p, 0.0);
    const Trajectory traj = integrate(sys, s0, opts);
    REQUIRE(traj.size() == 10001);
    const DriftReport rep = drift_report(traj);
    CHECK(rep.max_constraint_norm < 1e-8);
    CHECK(rep.max_H_drift < 1e-6);
    CHECK_FALSE(rep.diverged);

    // Bounded from below by zero on the constrained manifold.
    for (double h : traj.H_values) CHECK(h >= -1e-10);
}

TEST_CASE("thinned projection bounds the drift between projections") {
    const Params p{};
    const ModelSpec spec = oscillator::make_model(p);
    const System sys = make_system(spec, "oscillator");
    const ConstraintChain chain = oscillator::paper_constraint_chain(p);

    IntegrateOptions opts;
    opts.dt = 1e-3;
    opts.steps = 20000;
    opts.mode = RunMode::projected;
    opts.projection_every = 10;
    opts.chain = &chain;

    const Trajectory traj = integrate(sys, constrained_plus_unstable(p, 1e-6), opts);
    REQUIRE_FALSE(traj.metadata.diverged);
    const DriftReport rep = drift_report(traj);
    // Between projections the residual regrows from the integration error,
    // so the bound is looser than with per-step projection but still tiny.
    CHECK(rep.max_constraint_norm < 1e-6);
    CHECK(rep.max_H_drift < 1e-5);
}

TEST_CASE("free run with an unstable admixture diverges before t = 60") {
    const Params p{};
    const ModelSpec spec = oscillator::make_model(p);
    const System sys = make_system(spec, "oscillator");
    const ConstraintChain chain = oscillator::paper_constraint_chain(p);

    IntegrateOptions opts;
    opts.dt = 1e-3;
    opts.steps = 60000;
    opts.chain = &chain;  // diagnostics only

    const Trajectory traj = integrate(sys, constrained_plus_unstable(p, 1e-6), opts);
    CHECK(traj.metadata.diverged);
    CHECK(traj.metadata.diverged_step * opts.dt < 60.0);
    CHECK(drift_report(traj).diverged);
}

TEST_CASE("zero initial state stays identically zero") {
    const Params p{};
    const ModelSpec spec = oscillator::make_model(p);
    const System sys = make_system(spec, "oscillator");
    const ConstraintChain chain = oscillator::paper_constraint_chain(p);
    for (const RunMode mode : {RunMode::free, RunMode::projected}) {
        IntegrateOptions opts;
        opts.dt = 1e-2;
        opts.steps = 100;
        opts.mode = mode;
        opts.chain = &chain;
        const Trajectory traj = integrate(sys, CanonicalState::Zero(2), opts);
        const DriftReport rep = drift_report(traj);
        CHECK(rep.max_H_drift == 0.0);
        CHECK(rep.max_constraint_norm == 0.0);
        for (const auto& s : traj.states) CHECK(flatten(s).norm() == 0.0);
    }
}

TEST_CASE("growth rate fit recovers the unstable exponent") {
    for (const double lambda : {1.0, 2.0}) {
        const Params p{1.0, 1.0, 1.0, 1.0, lambda};
        const ModelSpec spec = oscillator::make_model(p);
        const System sys = make_system(spec, "oscillator");

        std::array<double, 8> cbar{};
        cbar[6] = 1e-6;
        const CanonicalState s0 = oscillator::analytic_canonical(p, cbar, 0.0);

        IntegrateOptions opts;
        opts.dt = 1e-3;
        const double block = 2.0 * M_PI * lambda;  // one modulation period
        const double t_lo = 5.0, t_hi = t_lo + 4.0 * block;
        opts.steps = std::lround(t_hi / opts.dt) + 10;
        const Trajectory traj = integrate(sys, s0, opts);
        REQUIRE_FALSE(traj.metadata.diverged);

        const GrowthFit fit =
            growth_rate_fit(traj, t_lo, t_hi, EnvelopeModel::exponential, block);
        const double expected = kGrowthRate / lambda;
        CHECK(std::abs(fit.rate - expected) < 0.01 * expected);
        CHECK(fit.r_squared > 0.999);
    }
}

TEST_CASE("projected run shows no growth") {
    const Params p{};
    const ModelSpec spec = oscillator::make_model(p);
    const System sys = make_system(spec, "oscillator");
    const ConstraintChain chain = oscillator::paper_constraint_chain(p);

    IntegrateOptions opts;
    opts.dt = 1e-3;
    opts.steps = 30000;
    opts.mode = RunMode::projected;
    opts.chain = &chain;
    const Trajectory traj = integrate(sys, constrained_plus_unstable(p, 1e-6), opts);
    const GrowthFit fit =
        growth_rate_fit(traj, 1.0, 29.0, EnvelopeModel::exponential, 2.0 * M_PI);
    CHECK(std::abs(fit.rate) < 1e-3);
}

TEST_CASE("forward growth and time-reversed decay agree in magnitude") {
    const Params p{};
    const ModelSpec spec = oscillator::make_model(p);
    const System forward = make_system(spec, "oscillator");
    System backward = forward;
    backward.rhs = [&spec](const CanonicalState& s) {
        const CanonicalState dot = canonical_rhs(spec, s);
        return unflatten(Vec(-flatten(dot)));
    };

    // A larger seed keeps the backward decay above the opposite branch that
    // roundoff re-seeds under time reversal.
    std::array<double, 8> cbar{};
    cbar[6] = 1e-2;
    const CanonicalState s0 = oscillator::analytic_canonical(p, cbar, 0.0);

    IntegrateOptions opts;
    opts.dt = 1e-3;
    opts.steps = 14000;
    const double block = 2.0 * M_PI;
    const Trajectory fwd = integrate(forward, s0, opts);
    const Trajectory bwd = integrate(backward, s0, opts);
    const GrowthFit gf = growth_rate_fit(fwd, 0.5, 0.5 + 2.0 * block,
                                         EnvelopeModel::exponential, block);
    const GrowthFit gb = growth_rate_fit(bwd, 0.5, 0.5 + 2.0 * block,
                                         EnvelopeModel::exponential, block);
    CHECK(gf.rate > 0.0);
    CHECK(gb.rate < 0.0);
    CHECK(std::abs(std::abs(gb.rate) - gf.rate) < 0.02 * gf.rate);
}

TEST_CASE("drift report on a trivial trajectory") {
    Trajectory traj;
    traj.metadata.dim_k = 1;
    for (int i = 0; i < 3; ++i) {
        traj.times.push_back(i * 0.1);
        traj.states.push_back(CanonicalState::Zero(1));
        traj.H_values.push_back(0.0);
        traj.constraint_norms.push_back(0.0);
    }
    const DriftReport rep = drift_report(traj);
    CHECK(rep.max_H_drift == 0.0);
    CHECK(rep.max_constraint_norm == 0.0);
    CHECK_FALSE(rep.diverged);

    Trajectory empty;
    CHECK_THROWS_AS(drift_report(empty), StructuralError);
}

TEST_CASE("batch integration matches individual runs") {
    const Params p{};
    const ModelSpec spec = oscillator::make_model(p);
    const System sys = make_system(spec, "oscillator");
    std::mt19937 rng(7);
    std::vector<CanonicalState> initials;
    for (int i = 0; i < 3; ++i) initials.push_back(random_state(rng, 2));

    IntegrateOptions opts;
    opts.dt = 1e-3;
    opts.steps = 500;
    const auto batch = integrate_batch(sys, initials, opts);
    REQUIRE(batch.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        const Trajectory solo = integrate(sys, initials[i], opts);
        CHECK((flatten(batch[i].states.back()) - flatten(solo.states.back())).norm() == 0.0);
    }
}

TEST_CASE("csv export: fixed column order and reproducible bytes") {
    const Params p{};
    const ModelSpec spec = oscillator::make_model(p);
    const System sys = make_system(spec, "oscillator");
    const ConstraintChain chain = oscillator::paper_constraint_chain(p);
    IntegrateOptions opts;
    opts.dt = 1e-3;
    opts.steps = 5;
    opts.chain = &chain;
    std::mt19937 rng(11);
    const Trajectory traj = integrate(sys, random_state(rng, 2), opts);

    std::ostringstream a, b;
    write_csv(traj, a);
    write_csv(traj, b);
    CHECK(a.str() == b.str());

    std::istringstream in(a.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,Q1_1,Q1_2,Q2_1,Q2_2,P1_1,P1_2,P2_1,P2_2,H,phi_max");

    // 17-significant-digit round trip of the first data value.
    std::string row;
    std::getline(in, row);
    CHECK(row.substr(0, 2) == "0,");
}

TEST_CASE("json export carries metadata and full state blocks") {
    const Params p{};
    const ModelSpec spec = oscillator::make_model(p);
    const System sys = make_system(spec, "oscillator");
    IntegrateOptions opts;
    opts.dt = 0.5;
    opts.steps = 2;
    std::mt19937 rng(13);
    const CanonicalState s0 = random_state(rng, 2);
    const Trajectory traj = integrate(sys, s0, opts);

    std::ostringstream out;
    write_json(traj, out);
    const nlohmann::json j = nlohmann::json::parse(out.str());
    CHECK(j["metadata"]["dt"] == 0.5);
    CHECK(j["metadata"]["steps"] == 2);
    CHECK(j["metadata"]["projected"] == false);
    CHECK(j["metadata"]["model"] == "oscillator");
    REQUIRE(j["records"].size() == 3);
    CHECK(j["records"][0]["Q1"][0].get<double>() == s0.Q1[0]);
    CHECK(j["records"][2]["t"].get<double>() == 1.0);
}

TEST_CASE("growth rate fit input validation") {
    Trajectory traj;
    traj.metadata.dim_k = 1;
    for (int i = 0; i < 10; ++i) {
        traj.times.push_back(i * 0.1);
        traj.states.push_back(CanonicalState::Zero(1));
        traj.H_values.push_back(0.0);
        traj.constraint_norms.push_back(0.0);
    }
    // Zero norms cannot be log-fitted.
    CHECK_THROWS_AS(growth_rate_fit(traj, 0.0, 1.0, EnvelopeModel::exponential),
                    StructuralError);
    // Window outside the trajectory.
    CHECK_THROWS_AS(growth_rate_fit(traj, 5.0, 6.0, EnvelopeModel::linear), StructuralError);
    // Degenerate window.
    CHECK_THROWS_AS(growth_rate_fit(traj, 1.0, 1.0, EnvelopeModel::linear), StructuralError);
}
