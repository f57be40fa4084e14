#include "ostro/constraints.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <random>

namespace ostro {

namespace {

double coord_step(double x, double rel) { return rel * std::max(1.0, std::abs(x)); }

/// Second-order central difference gradient; used inside the nested chain
/// evaluation where it is exact for affine functions.
Vec gradient_central2(const std::function<double(const CanonicalState&)>& f,
                      const CanonicalState& state, double rel_step) {
    const Vec x = flatten(state);
    const long n = x.size();
    Vec g(n);
    for (long a = 0; a < n; ++a) {
        const double h = coord_step(x[a], rel_step);
        Vec xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        g[a] = (f(unflatten(xp)) - f(unflatten(xm))) / (2.0 * h);
    }
    return g;
}

}  // namespace

Vec numeric_gradient(const std::function<double(const CanonicalState&)>& f,
                     const CanonicalState& state, double rel_step) {
    const Vec x = flatten(state);
    const long n = x.size();
    Vec g(n);
    for (long a = 0; a < n; ++a) {
        const double h = coord_step(x[a], rel_step);
        Vec x1 = x, x2 = x, x3 = x, x4 = x;
        x1[a] += 2.0 * h;
        x2[a] += h;
        x3[a] -= h;
        x4[a] -= 2.0 * h;
        g[a] = (-f(unflatten(x1)) + 8.0 * f(unflatten(x2)) - 8.0 * f(unflatten(x3)) +
                f(unflatten(x4))) /
               (12.0 * h);
    }
    return g;
}

Vec symplectic_apply(const Vec& grad) {
    const int k = static_cast<int>(grad.size()) / 4;
    Vec out(4 * k);
    out.segment(0, k) = grad.segment(2 * k, k);
    out.segment(k, k) = grad.segment(3 * k, k);
    out.segment(2 * k, k) = -grad.segment(0, k);
    out.segment(3 * k, k) = -grad.segment(k, k);
    return out;
}

double poisson_bracket(const PhaseFunction& f, const PhaseFunction& g,
                       const CanonicalState& state) {
    const Vec gf = f.gradient ? f.gradient(state) : numeric_gradient(f.value, state);
    const Vec gg = g.gradient ? g.gradient(state) : numeric_gradient(g.value, state);
    return gf.dot(symplectic_apply(gg));
}

double poisson_bracket(const PhaseFunction& f, const PhaseFunction& g,
                       const CanonicalState& state, const ModelSpec& spec) {
    if (state.dim() != spec.dim_k())
        throw StructuralError("poisson_bracket: state dimension does not match model");
    return poisson_bracket(f, g, state);
}

PhaseFunction hamiltonian_function(const ModelSpec& spec) {
    PhaseFunction h;
    h.value = [&spec](const CanonicalState& s) { return hamiltonian(spec, s); };
    h.gradient = [&spec](const CanonicalState& s) {
        return flatten(hamiltonian_gradient(spec, s));
    };
    return h;
}

Vec primary_constraints(const ModelSpec& spec, const CanonicalState& state) {
    const TransformEval ev = eval_transform(spec, state.Q1, true);
    const auto& lag = spec.lagrangian;

    const Vec qdd = accel_from_canonical(spec, state);
    const Vec q = ev.alpha + ev.beta * state.Q2;
    const Mat T = ev.jac_q(state.Q2);
    const Vec qdot = T * state.Q2 + ev.beta * qdd;
    const Vec p = lag.mass * qdot + lag.u(q);
    return state.P1 - T.transpose() * p;
}

Vec ConstraintChain::evaluate(const CanonicalState& state) const {
    Vec out(size());
    for (int a = 0; a < size(); ++a) out[a] = constraints[a].value(state);
    return out;
}

Mat ConstraintChain::jacobian(const CanonicalState& state) const {
    const int n = size();
    Mat jac(n, 4 * state.dim());
    for (int a = 0; a < n; ++a) jac.row(a) = constraints[a].jacobian(state);
    return jac;
}

double ConstraintChain::max_abs(const CanonicalState& state) const {
    return size() == 0 ? 0.0 : evaluate(state).lpNorm<Eigen::Infinity>();
}

std::vector<CanonicalState> default_probe_states(int dim_k, int count, unsigned seed,
                                                 double radius) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-radius, radius);
    std::vector<CanonicalState> probes;
    probes.reserve(count);
    for (int i = 0; i < count; ++i) {
        Vec x(4 * dim_k);
        for (long a = 0; a < x.size(); ++a) x[a] = dist(rng);
        probes.push_back(unflatten(x));
    }
    return probes;
}

namespace {

struct AffineScalarForm {
    double c0 = 0.0;
    Vec g;
};

struct AffineFlowForm {
    Vec r0;
    Mat R;
};

constexpr double kAffineProbeStep = 0.25;

AffineScalarForm sample_affine_scalar(const std::function<double(const CanonicalState&)>& f,
                                      int dim4k) {
    AffineScalarForm a;
    a.c0 = f(unflatten(Vec::Zero(dim4k)));
    a.g.resize(dim4k);
    for (int i = 0; i < dim4k; ++i) {
        Vec xp = Vec::Zero(dim4k), xm = Vec::Zero(dim4k);
        xp[i] = kAffineProbeStep;
        xm[i] = -kAffineProbeStep;
        a.g[i] = (f(unflatten(xp)) - f(unflatten(xm))) / (2.0 * kAffineProbeStep);
    }
    return a;
}

AffineFlowForm sample_affine_flow(
    const std::function<CanonicalState(const CanonicalState&)>& rhs, int dim4k) {
    AffineFlowForm m;
    m.r0 = flatten(rhs(unflatten(Vec::Zero(dim4k))));
    m.R.resize(dim4k, dim4k);
    for (int i = 0; i < dim4k; ++i) {
        Vec xp = Vec::Zero(dim4k), xm = Vec::Zero(dim4k);
        xp[i] = kAffineProbeStep;
        xm[i] = -kAffineProbeStep;
        m.R.col(i) = (flatten(rhs(unflatten(xp))) - flatten(rhs(unflatten(xm)))) /
                     (2.0 * kAffineProbeStep);
    }
    return m;
}

bool verify_affine_scalar(const std::function<double(const CanonicalState&)>& f,
                          const AffineScalarForm& a,
                          const std::vector<CanonicalState>& checks, double tol) {
    for (const auto& s : checks) {
        const double exact = f(s);
        const double predicted = a.c0 + a.g.dot(flatten(s));
        if (std::abs(exact - predicted) > tol * (1.0 + std::abs(exact))) return false;
    }
    return true;
}

bool verify_affine_flow(const std::function<CanonicalState(const CanonicalState&)>& rhs,
                        const AffineFlowForm& m, const std::vector<CanonicalState>& checks,
                        double tol) {
    for (const auto& s : checks) {
        const Vec exact = flatten(rhs(s));
        const Vec predicted = m.r0 + m.R * flatten(s);
        const double scale = 1.0 + exact.lpNorm<Eigen::Infinity>();
        if ((exact - predicted).lpNorm<Eigen::Infinity>() > tol * scale) return false;
    }
    return true;
}

ConstraintFunction make_affine_constraint(const std::string& name, int level,
                                          const AffineScalarForm& a) {
    ConstraintFunction c;
    c.name = name;
    c.level = level;
    c.value = [a](const CanonicalState& s) { return a.c0 + a.g.dot(flatten(s)); };
    c.jacobian = [g = a.g](const CanonicalState&) { return g; };
    return c;
}

}  // namespace

ConstraintChain build_constraint_chain_for_flow(
    const std::function<CanonicalState(const CanonicalState&)>& rhs,
    const std::vector<ConstraintFunction>& seeds, int max_level,
    const std::vector<CanonicalState>& probe_states, const ChainOptions& options) {
    if (seeds.empty()) throw StructuralError("constraint chain requires seed constraints");
    if (probe_states.empty())
        throw StructuralError("constraint chain requires probe states");
    if (max_level < 1) throw StructuralError("max_level must be at least 1");

    const int K = probe_states.front().dim();
    const int dim4k = 4 * K;
    const int n_probes = static_cast<int>(probe_states.size());
    const int width = static_cast<int>(seeds.size());

    // Verification points for the affine fast path: the probes plus a fixed
    // independent set at a larger radius.
    std::vector<CanonicalState> checks = probe_states;
    for (const auto& extra : default_probe_states(K, 8, 987u, 2.0)) checks.push_back(extra);

    bool affine = true;
    AffineFlowForm flow;
    std::vector<AffineScalarForm> affine_levels;
    {
        flow = sample_affine_flow(rhs, dim4k);
        affine = verify_affine_flow(rhs, flow, checks, options.affine_tol);
        if (affine) {
            for (const auto& seed : seeds) {
                AffineScalarForm a = sample_affine_scalar(seed.value, dim4k);
                if (!verify_affine_scalar(seed.value, a, checks, options.affine_tol)) {
                    affine = false;
                    break;
                }
                affine_levels.push_back(std::move(a));
            }
        }
    }

    ConstraintChain chain;
    for (const auto& seed : seeds) {
        ConstraintFunction c = seed;
        c.level = 1;
        if (!c.jacobian) {
            auto value = c.value;
            c.jacobian = [value](const CanonicalState& s) {
                return numeric_gradient(value, s, 1e-3);
            };
        }
        chain.constraints.push_back(std::move(c));
    }
    if (affine) {
        for (int c = 0; c < width; ++c)
            chain.constraints[c] = make_affine_constraint(seeds[c].name, 1, affine_levels[c]);
    }

    // Values of all retained constraints at the probes, one column per
    // constraint; grows as levels are appended.
    Mat values(n_probes, width);
    for (int c = 0; c < width; ++c)
        for (int p = 0; p < n_probes; ++p)
            values(p, c) = chain.constraints[c].value(probe_states[p]);

    std::vector<AffineScalarForm> prev_affine = affine_levels;

    for (int level = 2; level <= max_level; ++level) {
        // Derive the new level from the previous one.
        std::vector<ConstraintFunction> fresh(width);
        std::vector<AffineScalarForm> fresh_affine(width);
        const int first_prev = chain.size() - width;
        for (int c = 0; c < width; ++c) {
            const std::string name = "phi_l" + std::to_string(level) + "_" + std::to_string(c + 1);
            if (affine) {
                AffineScalarForm next;
                next.c0 = prev_affine[c].g.dot(flow.r0);
                next.g = flow.R.transpose() * prev_affine[c].g;
                fresh_affine[c] = next;
                fresh[c] = make_affine_constraint(name, level, next);
            } else {
                auto prev_value =
                    std::make_shared<std::function<double(const CanonicalState&)>>(
                        chain.constraints[first_prev + c].value);
                const double step = options.fd_step;
                ConstraintFunction fn;
                fn.name = name;
                fn.level = level;
                fn.value = [prev_value, rhs, step](const CanonicalState& s) {
                    const Vec grad = gradient_central2(*prev_value, s, step);
                    return grad.dot(flatten(rhs(s)));
                };
                auto value = fn.value;
                fn.jacobian = [value, step](const CanonicalState& s) {
                    return numeric_gradient(value, s, step);
                };
                fresh[c] = std::move(fn);
            }
        }

        Mat new_values(n_probes, width);
        for (int c = 0; c < width; ++c)
            for (int p = 0; p < n_probes; ++p)
                new_values(p, c) = fresh[c].value(probe_states[p]);

        // Closure test: each component of the new level must be a fixed
        // linear combination of the retained constraints across all probes.
        const bool enough_probes = n_probes >= values.cols() + 2;
        if (enough_probes) {
            Mat coeffs(width, values.cols());
            double worst = 0.0;
            Eigen::CompleteOrthogonalDecomposition<Mat> cod(values);
            const double scale =
                std::max({1.0, values.cwiseAbs().maxCoeff(), new_values.cwiseAbs().maxCoeff()});
            for (int c = 0; c < width; ++c) {
                const Vec w = cod.solve(new_values.col(c));
                coeffs.row(c) = w.transpose();
                const double resid =
                    (values * w - new_values.col(c)).lpNorm<Eigen::Infinity>();
                worst = std::max(worst, resid);
            }
            if (worst <= options.closure_tol * scale) {
                chain.closure.closed = true;
                chain.closure.level = level;
                chain.closure.coefficients = coeffs;
                chain.closure.fit_residual = worst;
                return chain;
            }
        }

        for (int c = 0; c < width; ++c) chain.constraints.push_back(std::move(fresh[c]));
        if (affine) prev_affine = std::move(fresh_affine);

        Mat grown(n_probes, values.cols() + width);
        grown.leftCols(values.cols()) = values;
        grown.rightCols(width) = new_values;
        values = std::move(grown);
    }

    chain.closure.closed = false;
    chain.closure.level = max_level;
    return chain;
}

ConstraintChain build_constraint_chain(const ModelSpec& spec, int max_level,
                                       const std::vector<CanonicalState>& probe_states,
                                       const ChainOptions& options) {
    const int K = spec.dim_k();
    std::vector<ConstraintFunction> seeds;
    for (int k = 0; k < K; ++k) {
        ConstraintFunction c;
        c.name = "phi_l1_" + std::to_string(k + 1);
        c.level = 1;
        c.value = [&spec, k](const CanonicalState& s) {
            return primary_constraints(spec, s)[k];
        };
        seeds.push_back(std::move(c));
    }
    auto rhs = [&spec](const CanonicalState& s) { return canonical_rhs(spec, s); };
    return build_constraint_chain_for_flow(rhs, seeds, max_level, probe_states, options);
}

Mat constraint_matrix(const ConstraintChain& chain, const CanonicalState& state,
                      const ModelSpec& spec) {
    if (state.dim() != spec.dim_k())
        throw StructuralError("constraint_matrix: state dimension does not match model");
    const int n = chain.size();
    if (n == 0) throw StructuralError("constraint_matrix: empty chain");

    const Mat jac = chain.jacobian(state);
    Mat c = Mat::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        const Vec ja = symplectic_apply(jac.row(a));
        for (int b = a + 1; b < n; ++b) {
            const double v = jac.row(b).dot(ja);  // {phi_b, phi_a}
            c(b, a) = v;
            c(a, b) = -v;
        }
    }
    return c;
}

double dirac_bracket(const PhaseFunction& f, const PhaseFunction& g,
                     const ConstraintChain& chain, const CanonicalState& state,
                     const ModelSpec& spec) {
    const Mat c = constraint_matrix(chain, state, spec);
    {
        Eigen::JacobiSVD<Mat> svd(c);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
        if (!(cond < 1e12))
            throw SingularityError(
                "constraint set is not second-class at this state (singular bracket matrix)",
                cond);
    }

    const Vec gf = f.gradient ? f.gradient(state) : numeric_gradient(f.value, state);
    const Vec gg = g.gradient ? g.gradient(state) : numeric_gradient(g.value, state);
    const Mat jac = chain.jacobian(state);

    const int n = chain.size();
    Vec w(n), v(n);
    for (int a = 0; a < n; ++a) {
        w[a] = gf.dot(symplectic_apply(jac.row(a)));  // {f, phi_a}
        v[a] = jac.row(a).dot(symplectic_apply(gg));  // {phi_a, g}
    }
    const Vec y = c.fullPivLu().solve(v);
    return gf.dot(symplectic_apply(gg)) - w.dot(y);
}

CanonicalState project(const ConstraintChain& chain, const CanonicalState& state,
                       const ProjectOptions& options) {
    Vec x = flatten(state);
    double residual = chain.max_abs(state);
    for (int it = 0; it < options.max_iter; ++it) {
        const CanonicalState s = unflatten(x);
        const Vec phi = chain.evaluate(s);
        residual = phi.lpNorm<Eigen::Infinity>();
        if (residual <= options.tol) return s;
        const Mat jac = chain.jacobian(s);
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(jac);
        x += cod.solve(-phi);
    }
    const CanonicalState s = unflatten(x);
    residual = chain.max_abs(s);
    if (residual <= options.tol) return s;
    throw ProjectionError("constraint projection did not converge", residual);
}

CanonicalState project(const ModelSpec& spec, const ConstraintChain& chain,
                       const CanonicalState& state, const ProjectOptions& options) {
    if (state.dim() != spec.dim_k())
        throw StructuralError("project: state dimension does not match model");
    return project(chain, state, options);
}

}  // namespace ostro
