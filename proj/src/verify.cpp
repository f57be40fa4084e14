#include "ostro/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "ostro/gravwave.hpp"
#include "ostro/oscillator.hpp"
#include "ostro/registry.hpp"

namespace ostro {

namespace {

Vec random_vec(std::mt19937& rng, int n, double radius = 1.0) {
    std::uniform_real_distribution<double> dist(-radius, radius);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

CanonicalState random_state(std::mt19937& rng, int k, double radius = 1.0) {
    return unflatten(random_vec(rng, 4 * k, radius));
}

CheckResult make_check(std::string name, double metric, double threshold,
                       std::string detail = "") {
    CheckResult r;
    r.name = std::move(name);
    r.metric = metric;
    r.pass = metric < threshold;
    if (detail.empty()) {
        std::ostringstream os;
        os << "metric " << metric << " vs threshold " << threshold;
        detail = os.str();
    }
    r.detail = std::move(detail);
    return r;
}

// Closed-form quadratic Hamiltonian of the isotropic model; verification
// oracle only, the library always evaluates by reconstruction.
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

ModelSpec corrupt_potential_gradient(ModelSpec spec) {
    auto original = spec.lagrangian.dV;
    spec.lagrangian.dV = [original](const Vec& q) { return Vec(2.0 * original(q)); };
    return spec;
}

std::vector<CheckResult> verify_oscillator(const std::map<std::string, double>& params,
                                           const VerifyOptions& options) {
    oscillator::Params p;
    p.m = params.at("m");
    p.h1 = params.at("h1");
    p.h2 = params.at("h2");
    p.h3 = params.at("h3");
    p.lambda = params.at("lambda");

    ModelSpec spec = oscillator::make_model(p);
    if (options.corrupt_dv) spec = corrupt_potential_gradient(spec);
    const int K = spec.dim_k();
    std::mt19937 rng(options.seed);
    std::vector<CheckResult> checks;

    {
        std::vector<Vec> points;
        for (int i = 0; i < 10; ++i) points.push_back(random_vec(rng, K));
        const ValidationReport report = validate_model(spec, points);
        double worst = 0.0;
        for (const auto& pt : report.points)
            worst = std::max({worst, pt.mismatch_du, pt.mismatch_dV, pt.mismatch_dalpha,
                              pt.mismatch_dbeta, pt.mismatch_ddalpha, pt.mismatch_ddbeta});
        CheckResult c = make_check("derivative-cross-check", worst, report.tolerance);
        c.pass = c.pass && report.pass;
        checks.push_back(std::move(c));

        double gram_worst = 0.0;
        for (const auto& pt : points) {
            const Mat b = spec.transform.beta(pt);
            const Mat g = gram_inverse(spec, pt) * (b.transpose() * b);
            gram_worst = std::max(
                gram_worst,
                (g - Mat::Identity(K, K)).cwiseAbs().maxCoeff());
        }
        checks.push_back(make_check("gram-inverse-identity", gram_worst, 1e-10));
    }

    {
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            Jet jet;
            jet.qbar = random_vec(rng, K);
            jet.qbar_dot = random_vec(rng, K);
            jet.qbar_ddot = random_vec(rng, K);
            jet.qbar_dddot = random_vec(rng, K);
            const Jet back = jet_from_canonical(spec, canonical_from_jet(spec, jet));
            worst = std::max({worst, (back.qbar - jet.qbar).lpNorm<Eigen::Infinity>(),
                              (back.qbar_dot - jet.qbar_dot).lpNorm<Eigen::Infinity>(),
                              (back.qbar_ddot - jet.qbar_ddot).lpNorm<Eigen::Infinity>(),
                              (*back.qbar_dddot - *jet.qbar_dddot).lpNorm<Eigen::Infinity>()});
        }
        checks.push_back(make_check("jet-canonical-roundtrip", worst, 1e-9));
    }

    {
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const CanonicalState s = random_state(rng, K);
            const Vec grad = flatten(hamiltonian_gradient(spec, s));
            const Vec x = flatten(s);
            Vec fd(x.size());
            for (long a = 0; a < x.size(); ++a) {
                const double h = 1e-5 * std::max(1.0, std::abs(x[a]));
                Vec xp = x, xm = x;
                xp[a] += h;
                xm[a] -= h;
                fd[a] = (hamiltonian(spec, unflatten(xp)) - hamiltonian(spec, unflatten(xm))) /
                        (2.0 * h);
            }
            const double scale = std::max(1.0, grad.lpNorm<Eigen::Infinity>());
            worst = std::max(worst, (grad - fd).lpNorm<Eigen::Infinity>() / scale);
        }
        checks.push_back(make_check("gradient-finite-difference", worst, 1e-6));
    }

    if (p.isotropic()) {
        {
            double worst = 0.0;
            for (int i = 0; i < 20; ++i) {
                const CanonicalState s = random_state(rng, K);
                worst = std::max(
                    worst, std::abs(hamiltonian(spec, s) - closed_form_hamiltonian(p, s)));
            }
            checks.push_back(make_check("closed-form-hamiltonian", worst, 1e-10));
        }
        {
            double worst = 0.0;
            for (int i = 0; i < 20; ++i) {
                const CanonicalState s = random_state(rng, K);
                const Vec got = flatten(canonical_rhs(spec, s));
                const Vec want = flatten(closed_form_rhs(p, s));
                worst = std::max(worst, (got - want).lpNorm<Eigen::Infinity>());
            }
            checks.push_back(make_check("closed-form-canonical-equations", worst, 1e-10));
        }
        {
            double worst = 0.0;
            std::uniform_real_distribution<double> tdist(0.0, 5.0);
            for (int i = 0; i < 10; ++i) {
                std::array<double, 8> cbar{};
                for (int j = 0; j < 4; ++j) cbar[j] = random_vec(rng, 1)[0];
                const CanonicalState s =
                    oscillator::analytic_canonical(p, cbar, tdist(rng));
                worst = std::max(worst, oscillator::paper_constraints(p, s)
                                            .lpNorm<Eigen::Infinity>());
            }
            checks.push_back(make_check("on-shell-constraints", worst, 1e-8));
        }
        {
            const ConstraintChain chain = oscillator::paper_constraint_chain(p);
            const PhaseFunction ham = hamiltonian_function(spec);
            double worst = 0.0;
            for (int i = 0; i < 20; ++i) {
                const CanonicalState s = random_state(rng, K);
                PhaseFunction phi4{chain.constraints[3].value, chain.constraints[3].jacobian};
                const double lhs = p.lambda * poisson_bracket(phi4, ham, s, spec);
                const Vec phi = oscillator::paper_constraints(p, s);
                worst = std::max(worst, std::abs(lhs - (phi[2] - phi[0])));
            }
            checks.push_back(make_check("closure-identity", worst, 1e-8));
        }
        {
            const ConstraintChain chain = oscillator::paper_constraint_chain(p);
            const CanonicalState s = random_state(rng, K);
            const Mat numeric = constraint_matrix(chain, s, spec);
            const Mat closed = oscillator::paper_bracket_matrix(p);
            checks.push_back(make_check("bracket-matrix",
                                        (numeric - closed).cwiseAbs().maxCoeff(), 1e-10));
        }
        {
            const ConstraintChain chain =
                build_constraint_chain(spec, 6, default_probe_states(K, 32));
            CheckResult c;
            c.name = "chain-closure-level";
            c.pass = chain.closure.closed && chain.closure.level == 4;
            c.metric = chain.closure.fit_residual;
            std::ostringstream os;
            os << "closed=" << (chain.closure.closed ? "true" : "false")
               << " level=" << chain.closure.level;
            c.detail = os.str();
            checks.push_back(std::move(c));
        }
    }
    return checks;
}

std::vector<CheckResult> verify_gravwave(const std::map<std::string, double>& params,
                                         const VerifyOptions& options) {
    gravwave::ModeParams p;
    p.c = params.at("c");
    p.k = params.at("k");
    const double C = p.csq_ksq();
    const double w = std::sqrt(C);
    const gravwave::ModeModel model = gravwave::make_mode_model(p);
    std::mt19937 rng(options.seed);
    std::vector<CheckResult> checks;

    IntegrateOptions opts;
    opts.dt = 1e-3;
    opts.steps = 10000;
    opts.chain = &model.constraints;

    {
        const CanonicalState init = gravwave::mode_state(1.0, 0.0, -C, 0.0);
        const Trajectory traj = integrate(model.system, init, opts);
        double worst = 0.0;
        for (size_t i = 0; i < traj.size(); ++i)
            worst = std::max(worst,
                             std::abs(traj.states[i].Q1[0] - std::cos(w * traj.times[i])));
        checks.push_back(make_check("plane-wave-preservation", worst, 1e-6));
    }
    {
        // d/dt (h'' + C h) along the flow equals the primary constraint.
        double worst = 0.0;
        for (int i = 0; i < 10; ++i) {
            CanonicalState s = random_state(rng, 1);
            const double dt = 1e-4;
            auto box = [&](const CanonicalState& st) { return st.P1[0] + C * st.Q1[0]; };
            const CanonicalState fwd = step_rk4(model.system.rhs, s, dt);
            const CanonicalState bwd = step_rk4(model.system.rhs, s, -dt);
            const double fd = (box(fwd) - box(bwd)) / (2.0 * dt);
            const double psi =
                gravwave::mode_constraint(p, s.Q1[0], s.Q2[0], s.P1[0], s.P2[0]);
            worst = std::max(worst, std::abs(fd - psi) / std::max(1.0, std::abs(psi)));
        }
        checks.push_back(make_check("constraint-flow-derivative", worst, 1e-6));
    }
    {
        // Secular branch t cos(w t): in the residual's kernel, outside the
        // constraint's.
        const double t = 0.7;
        const double cw = std::cos(w * t), sw = std::sin(w * t);
        const double h = t * cw;
        const double hd = cw - w * t * sw;
        const double hdd = -2.0 * w * sw - w * w * t * cw;
        const double hd3 = -3.0 * w * w * cw + w * w * w * t * sw;
        const double hd4 = 4.0 * w * w * w * sw + w * w * w * w * t * cw;
        const double res = gravwave::mode_residual(p, h, hd, hdd, hd3, hd4);
        const double psi = gravwave::mode_constraint(p, h, hd, hdd, hd3);
        CheckResult c;
        c.name = "secular-solution-detection";
        c.metric = std::abs(res);
        c.pass = std::abs(res) < 1e-10 && std::abs(psi) > 1e-3;
        std::ostringstream os;
        os << "residual " << res << ", constraint " << psi;
        c.detail = os.str();
        checks.push_back(std::move(c));
    }
    {
        const CanonicalState init = gravwave::mode_state(0.3, 0.7 * w, -C * 0.3, -C * 0.7 * w);
        const Trajectory traj = integrate(model.system, init, opts);
        double worst = 0.0;
        for (const auto& s : traj.states)
            worst = std::max(worst, std::abs(s.P1[0] + C * s.Q1[0]));
        checks.push_back(make_check("manifold-preservation", worst, 1e-8));
    }
    {
        IntegrateOptions popts = opts;
        popts.mode = RunMode::projected;
        const CanonicalState init = gravwave::mode_state(1.0, 0.0, -C + 0.01, 0.0);
        const Trajectory traj = integrate(model.system, init, popts);
        double worst = 0.0;
        for (const auto& s : traj.states)
            worst = std::max(worst, std::abs(s.P1[0] + C * s.Q1[0]));
        checks.push_back(make_check("projected-run-on-manifold", worst, 1e-8));
    }
    return checks;
}

}  // namespace

std::vector<CheckResult> run_verification(const std::string& model,
                                          const std::map<std::string, double>& params,
                                          const VerifyOptions& options) {
    for (const ModelInfo& info : list_models()) {
        if (info.name != model) continue;
        std::map<std::string, double> merged = info.defaults;
        for (const auto& [key, value] : params) {
            if (merged.find(key) == merged.end())
                throw Error("unknown parameter '" + key + "' for model '" + model + "'");
            merged[key] = value;
        }
        if (model == "oscillator") return verify_oscillator(merged, options);
        return verify_gravwave(merged, options);
    }
    throw Error("unknown model: " + model);
}

}  // namespace ostro
