#include "ostro/gravwave.hpp"

namespace ostro::gravwave {

namespace {

void check_params(const ModeParams& p) {
    if (!(p.c > 0.0)) throw StructuralError("gravwave mode: wave speed c must be positive");
    if (p.k < 0.0) throw StructuralError("gravwave mode: wavenumber k must be non-negative");
}

}  // namespace

double mode_residual(const ModeParams& params, double h, double, double hddot, double,
                     double hddddot) {
    check_params(params);
    const double C = params.csq_ksq();
    return hddddot + 2.0 * C * hddot + C * C * h;
}

double mode_constraint(const ModeParams& params, double, double hdot, double,
                       double hdddot) {
    check_params(params);
    return hdddot + params.csq_ksq() * hdot;
}

double mode_energy(const ModeParams& params, const CanonicalState& state) {
    const double C = params.csq_ksq();
    const double h = state.Q1[0], hd = state.Q2[0], hdd = state.P1[0], hd3 = state.P2[0];
    return -hd3 * hd - C * hd * hd + 0.5 * hdd * hdd - 0.5 * C * C * h * h;
}

CanonicalState mode_state(double h, double hdot, double hddot, double hdddot) {
    CanonicalState s = CanonicalState::Zero(1);
    s.Q1[0] = h;
    s.Q2[0] = hdot;
    s.P1[0] = hddot;
    s.P2[0] = hdddot;
    return s;
}

ModeModel make_mode_model(const ModeParams& params) {
    check_params(params);
    const double C = params.csq_ksq();

    ModeModel model;
    model.params = params;
    model.system.name = "gravwave-mode";
    model.system.dim_k = 1;
    model.system.rhs = [C](const CanonicalState& s) {
        CanonicalState dot = CanonicalState::Zero(1);
        dot.Q1[0] = s.Q2[0];
        dot.Q2[0] = s.P1[0];
        dot.P1[0] = s.P2[0];
        dot.P2[0] = -2.0 * C * s.P1[0] - C * C * s.Q1[0];
        return dot;
    };
    model.system.energy = [params](const CanonicalState& s) {
        return mode_energy(params, s);
    };

    // Flat layout: [h, h', h'', h'''].
    auto entry = [](std::string name, int level, Vec g) {
        ConstraintFunction f;
        f.name = std::move(name);
        f.level = level;
        f.value = [g](const CanonicalState& s) { return g.dot(flatten(s)); };
        f.jacobian = [g](const CanonicalState&) { return g; };
        return f;
    };
    Vec g1 = Vec::Zero(4), g2 = Vec::Zero(4);
    g1[1] = C;
    g1[3] = 1.0;  // psi = h''' + C h'
    g2[0] = -C * C;
    g2[2] = -C;  // psi' = -C (h'' + C h), via the dynamics
    model.constraints.constraints.push_back(entry("psi", 1, g1));
    model.constraints.constraints.push_back(entry("psi_dot", 2, g2));

    // psi'' = -C psi: the set closes at the next level.
    model.constraints.closure.closed = true;
    model.constraints.closure.level = 3;
    model.constraints.closure.coefficients = Mat::Zero(1, 2);
    model.constraints.closure.coefficients(0, 0) = -C;
    return model;
}

}  // namespace ostro::gravwave
