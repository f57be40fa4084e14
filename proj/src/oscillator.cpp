#include "ostro/oscillator.hpp"

#include <cmath>

namespace ostro::oscillator {

double Params::omega(int i) const {
    const double h = (i == 1) ? h1 : (i == 2) ? h2 : h3;
    return std::sqrt(h / m);
}

double Params::Omega() const {
    const double w = omega();
    return lambda * lambda * w * w;
}

namespace {

void check_params(const Params& p) {
    if (p.lambda == 0.0) throw StructuralError("oscillator: lambda must be nonzero");
    if (!(p.m > 0.0)) throw StructuralError("oscillator: mass must be positive");
    if (p.h1 < 0.0 || p.h2 < 0.0 || p.h3 < 0.0)
        throw StructuralError("oscillator: spring constants must be non-negative");
}

void require_isotropic(const Params& p, const char* what) {
    if (!p.isotropic())
        throw StructuralError(std::string(what) + " is defined for the isotropic case only");
}

/// One e^{a t} (A cos(s t) + B sin(s t)) term; differentiation maps
/// (A, B) to (aA + sB, aB - sA).
struct SpiralTerm {
    double A = 0.0, B = 0.0, a = 0.0, s = 0.0;

    double eval(double t) const {
        return std::exp(a * t) * (A * std::cos(s * t) + B * std::sin(s * t));
    }
    SpiralTerm derivative() const { return {a * A + s * B, a * B - s * A, a, s}; }
};

}  // namespace

ModelSpec make_model(const Params& params) {
    check_params(params);
    const double lambda = params.lambda;

    ModelSpec spec;
    spec.transform.dim_i = 3;
    spec.transform.dim_k = 2;
    spec.transform.alpha = [](const Vec& qb) {
        Vec a(3);
        a << qb[0], qb[1], 0.0;
        return a;
    };
    spec.transform.beta = [lambda](const Vec&) {
        Mat b = Mat::Zero(3, 2);
        b(0, 1) = lambda;
        b(2, 0) = lambda;
        return b;
    };
    spec.transform.dalpha = [](const Vec&) {
        Mat da = Mat::Zero(3, 2);
        da(0, 0) = 1.0;
        da(1, 1) = 1.0;
        return da;
    };
    spec.transform.dbeta = [](const Vec&) { return Tensor3(3, 2, 2); };
    spec.transform.ddalpha = [](const Vec&) { return Tensor3(3, 2, 2); };
    spec.transform.ddbeta = [](const Vec&) { return Tensor4(3, 2, 2, 2); };

    spec.lagrangian.mass = params.m;
    spec.lagrangian.dim_i = 3;
    spec.lagrangian.u = [](const Vec&) { return Vec::Zero(3); };
    spec.lagrangian.du = [](const Vec&) { return Mat::Zero(3, 3); };
    const double h1 = params.h1, h2 = params.h2, h3 = params.h3;
    spec.lagrangian.V = [h1, h2, h3](const Vec& q) {
        return 0.5 * (h1 * q[0] * q[0] + h2 * q[1] * q[1] + h3 * q[2] * q[2]);
    };
    spec.lagrangian.dV = [h1, h2, h3](const Vec& q) {
        Vec dv(3);
        dv << h1 * q[0], h2 * q[1], h3 * q[2];
        return dv;
    };
    return spec;
}

SecondOrderSolution analytic_q(const Params& params, const Vec& c, const Vec& c_prime,
                               double t) {
    check_params(params);
    if (c.size() != 3 || c_prime.size() != 3)
        throw StructuralError("analytic_q: coefficient vectors must have length 3");
    SecondOrderSolution sol;
    sol.q.resize(3);
    sol.qdot.resize(3);
    sol.qddot.resize(3);
    for (int i = 0; i < 3; ++i) {
        const double w = params.omega(i + 1);
        const double cw = std::cos(w * t), sw = std::sin(w * t);
        sol.q[i] = c[i] * cw + c_prime[i] * sw;
        sol.qdot[i] = w * (-c[i] * sw + c_prime[i] * cw);
        sol.qddot[i] = -w * w * sol.q[i];
    }
    return sol;
}

JetWithFourth analytic_qbar(const Params& params, const std::array<double, 8>& cbar,
                            double t) {
    check_params(params);
    require_isotropic(params, "analytic_qbar");
    const double w = params.omega();
    const double gamma = std::sqrt(3.0) / (2.0 * params.lambda);
    const double sigma = 1.0 / (2.0 * params.lambda);

    // Component terms: qbar_1 and qbar_2 pair the spirals with a quarter
    // twist, which is what lets the exponential family solve the reduced
    // system independently of m and h.
    const std::array<SpiralTerm, 3> terms1 = {
        SpiralTerm{cbar[0], cbar[1], 0.0, w},
        SpiralTerm{cbar[4], cbar[5], -gamma, sigma},
        SpiralTerm{cbar[6], cbar[7], gamma, sigma},
    };
    const std::array<SpiralTerm, 3> terms2 = {
        SpiralTerm{cbar[2], cbar[3], 0.0, w},
        SpiralTerm{cbar[5], -cbar[4], -gamma, sigma},
        SpiralTerm{cbar[7], -cbar[6], gamma, sigma},
    };

    std::array<Vec, 5> derivs;
    derivs.fill(Vec::Zero(2));
    auto accumulate = [&](const std::array<SpiralTerm, 3>& terms, int comp) {
        for (SpiralTerm term : terms)
            for (int order = 0; order < 5; ++order) {
                derivs[order][comp] += term.eval(t);
                term = term.derivative();
            }
    };
    accumulate(terms1, 0);
    accumulate(terms2, 1);

    JetWithFourth out;
    out.jet.qbar = derivs[0];
    out.jet.qbar_dot = derivs[1];
    out.jet.qbar_ddot = derivs[2];
    out.jet.qbar_dddot = derivs[3];
    out.qbar_ddddot = derivs[4];
    return out;
}

CanonicalState analytic_canonical(const Params& params, const std::array<double, 8>& cbar,
                                  double t) {
    const ModelSpec spec = make_model(params);
    return canonical_from_jet(spec, analytic_qbar(params, cbar, t).jet);
}

Vec paper_constraints(const Params& params, const CanonicalState& state) {
    check_params(params);
    require_isotropic(params, "paper_constraints");
    if (state.dim() != 2) throw StructuralError("paper_constraints: state must have K = 2");
    const double l = params.lambda, m = params.m, h = params.h1;
    Vec phi(4);
    phi[0] = l * state.P1[0] - state.P2[1];
    phi[1] = l * (state.P1[1] - m * state.Q2[1]);
    phi[2] = -state.P2[1] + l * m * state.Q2[0] - l * l * h * state.Q1[1];
    phi[3] = phi[1] + state.P2[0] + l * l * h * state.Q1[0];
    return phi;
}

ConstraintChain paper_constraint_chain(const Params& params) {
    check_params(params);
    require_isotropic(params, "paper_constraint_chain");
    const double l = params.lambda, m = params.m, h = params.h1;

    // Flat layout: [Q11 Q12 Q21 Q22 P11 P12 P21 P22].
    auto entry = [](std::string name, int level, double c0, Vec g) {
        ConstraintFunction f;
        f.name = std::move(name);
        f.level = level;
        f.value = [c0, g](const CanonicalState& s) { return c0 + g.dot(flatten(s)); };
        f.jacobian = [g](const CanonicalState&) { return g; };
        return f;
    };

    Vec g1 = Vec::Zero(8), g2 = Vec::Zero(8), g3 = Vec::Zero(8), g4 = Vec::Zero(8);
    g1[4] = l;
    g1[7] = -1.0;
    g2[5] = l;
    g2[3] = -l * m;
    g3[7] = -1.0;
    g3[2] = l * m;
    g3[1] = -l * l * h;
    g4 = g2;
    g4[6] = 1.0;
    g4[0] = l * l * h;

    ConstraintChain chain;
    chain.constraints.push_back(entry("phi_1", 1, 0.0, g1));
    chain.constraints.push_back(entry("phi_2", 2, 0.0, g2));
    chain.constraints.push_back(entry("phi_3", 3, 0.0, g3));
    chain.constraints.push_back(entry("phi_4", 4, 0.0, g4));

    // lambda * d(phi_4)/dt = phi_3 - phi_1 on the canonical flow.
    chain.closure.closed = true;
    chain.closure.level = 4;
    chain.closure.coefficients = Mat::Zero(1, 4);
    chain.closure.coefficients(0, 0) = -1.0 / l;
    chain.closure.coefficients(0, 2) = 1.0 / l;
    return chain;
}

double constrained_hamiltonian(const Params& params, const CanonicalState& state) {
    check_params(params);
    require_isotropic(params, "constrained_hamiltonian");
    if (state.dim() != 2)
        throw StructuralError("constrained_hamiltonian: state must have K = 2");
    const double l = params.lambda, m = params.m, h = params.h1;
    const double q11 = state.Q1[0], q12 = state.Q1[1];
    const double q21 = state.Q2[0], q22 = state.Q2[1];
    const double p21 = state.P2[0], p22 = state.P2[1];
    return (p21 * p21 + p22 * p22) / (2.0 * l * l * m) + 0.5 * m * q22 * q22 +
           0.5 * h * ((q11 + l * q22) * (q11 + l * q22) + q12 * q12 + l * l * q21 * q21);
}

Mat paper_bracket_matrix(const Params& params) {
    check_params(params);
    require_isotropic(params, "paper_bracket_matrix");
    const double om = params.Omega();
    Mat c(4, 4);
    c << 0.0, -1.0, 0.0, -1.0 - om,
        1.0, 0.0, 1.0 + om, 0.0,
        0.0, -1.0 - om, 0.0, -om,
        1.0 + om, 0.0, om, 0.0;
    return params.lambda * params.m * c;
}

}  // namespace ostro::oscillator
