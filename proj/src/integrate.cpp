#include "ostro/integrate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <ostream>

#include <json.hpp>

namespace ostro {

System make_system(const ModelSpec& spec, std::string name) {
    System sys;
    sys.name = std::move(name);
    sys.dim_k = spec.dim_k();
    sys.rhs = [&spec](const CanonicalState& s) { return canonical_rhs(spec, s); };
    sys.energy = [&spec](const CanonicalState& s) { return hamiltonian(spec, s); };
    return sys;
}

Vec step_rk4(const std::function<Vec(const Vec&)>& rhs, const Vec& state, double dt) {
    if (!(dt != 0.0) || !std::isfinite(dt)) throw StructuralError("step_rk4: invalid dt");
    const Vec k1 = rhs(state);
    const Vec k2 = rhs(state + 0.5 * dt * k1);
    const Vec k3 = rhs(state + 0.5 * dt * k2);
    const Vec k4 = rhs(state + dt * k3);
    if (!k1.allFinite() || !k2.allFinite() || !k3.allFinite() || !k4.allFinite())
        throw DivergenceError("step_rk4: non-finite stage value");
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

CanonicalState step_rk4(const std::function<CanonicalState(const CanonicalState&)>& rhs,
                        const CanonicalState& state, double dt) {
    auto flat_rhs = [&rhs](const Vec& x) { return flatten(rhs(unflatten(x))); };
    return unflatten(step_rk4(flat_rhs, flatten(state), dt));
}

Trajectory integrate(const System& system, const CanonicalState& initial,
                     const IntegrateOptions& options) {
    if (options.dt <= 0.0) throw StructuralError("integrate: dt must be positive");
    if (options.steps < 1) throw StructuralError("integrate: steps must be at least 1");
    if (options.mode == RunMode::projected && options.chain == nullptr)
        throw StructuralError("integrate: projected mode requires a constraint chain");
    if (options.projection_every < 1)
        throw StructuralError("integrate: projection_every must be at least 1");

    Trajectory traj;
    traj.metadata.dt = options.dt;
    traj.metadata.steps = options.steps;
    traj.metadata.projected = (options.mode == RunMode::projected);
    traj.metadata.model = system.name;
    traj.metadata.dim_k = initial.dim();
    traj.times.reserve(options.steps + 1);
    traj.states.reserve(options.steps + 1);

    auto record = [&](double t, const CanonicalState& s) {
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.H_values.push_back(system.energy ? system.energy(s) : 0.0);
        traj.constraint_norms.push_back(options.chain ? options.chain->max_abs(s) : 0.0);
    };

    auto flat_rhs = [&system](const Vec& x) { return flatten(system.rhs(unflatten(x))); };

    Vec x = flatten(initial);
    if (traj.metadata.projected)
        x = flatten(project(*options.chain, initial, options.projection));
    record(0.0, unflatten(x));

    for (long step = 1; step <= options.steps; ++step) {
        try {
            x = step_rk4(flat_rhs, x, options.dt);
        } catch (const DivergenceError&) {
            traj.metadata.diverged = true;
            traj.metadata.diverged_step = step;
            break;
        }
        if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > options.divergence_threshold) {
            traj.metadata.diverged = true;
            traj.metadata.diverged_step = step;
            break;
        }
        if (traj.metadata.projected && step % options.projection_every == 0) {
            const CanonicalState projected =
                project(*options.chain, unflatten(x), options.projection);
            x = flatten(projected);
        }
        record(step * options.dt, unflatten(x));
    }
    return traj;
}

Trajectory integrate(const ModelSpec& spec, const CanonicalState& initial,
                     const IntegrateOptions& options) {
    return integrate(make_system(spec, "model"), initial, options);
}

std::vector<Trajectory> integrate_batch(const System& system,
                                        const std::vector<CanonicalState>& initials,
                                        const IntegrateOptions& options) {
    std::vector<std::future<Trajectory>> futures;
    futures.reserve(initials.size());
    for (const auto& s0 : initials)
        futures.push_back(std::async(std::launch::async,
                                     [&system, s0, &options] { return integrate(system, s0, options); }));
    std::vector<Trajectory> out;
    out.reserve(initials.size());
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

GrowthFit growth_rate_fit(const Trajectory& traj, double t_lo, double t_hi,
                          EnvelopeModel model, double block_length) {
    if (!(t_hi > t_lo)) throw StructuralError("growth_rate_fit: empty window");

    std::vector<double> ts, ys;
    for (size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.times[i];
        if (t < t_lo || t > t_hi) continue;
        ts.push_back(t);
        ys.push_back(flatten(traj.states[i]).norm());
    }
    if (ts.size() < 2) throw StructuralError("growth_rate_fit: window too short");

    std::vector<double> fit_t, fit_y;
    if (block_length > 0.0) {
        double block_start = ts.front();
        double best_t = ts.front(), best_y = -1.0;
        for (size_t i = 0; i < ts.size(); ++i) {
            if (ts[i] - block_start >= block_length) {
                if (best_y >= 0.0) {
                    fit_t.push_back(best_t);
                    fit_y.push_back(best_y);
                }
                block_start = ts[i];
                best_y = -1.0;
            }
            if (ys[i] > best_y) {
                best_y = ys[i];
                best_t = ts[i];
            }
        }
        if (best_y >= 0.0) {
            fit_t.push_back(best_t);
            fit_y.push_back(best_y);
        }
    } else {
        fit_t = ts;
        fit_y = ys;
    }
    if (fit_t.size() < 2) throw StructuralError("growth_rate_fit: too few envelope samples");

    if (model == EnvelopeModel::exponential) {
        for (double& y : fit_y) {
            if (!(y > 0.0))
                throw StructuralError("growth_rate_fit: non-positive norm in window");
            y = std::log(y);
        }
    }

    const size_t n = fit_t.size();
    double st = 0.0, sy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        st += fit_t[i];
        sy += fit_y[i];
    }
    const double mt = st / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dt = fit_t[i] - mt;
        const double dy = fit_y[i] - my;
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    GrowthFit fit;
    fit.rate = sxy / sxx;
    fit.r_squared = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

DriftReport drift_report(const Trajectory& traj) {
    if (traj.size() == 0) throw StructuralError("drift_report: empty trajectory");
    DriftReport rep;
    rep.diverged = traj.metadata.diverged;
    const double h0 = traj.H_values.front();
    for (size_t i = 0; i < traj.size(); ++i) {
        rep.max_H_drift = std::max(rep.max_H_drift, std::abs(traj.H_values[i] - h0));
        rep.max_constraint_norm = std::max(rep.max_constraint_norm, traj.constraint_norms[i]);
    }
    return rep;
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_csv(const Trajectory& traj, std::ostream& out) {
    const int k = traj.metadata.dim_k;
    out << "t";
    for (int i = 1; i <= k; ++i) out << ",Q1_" << i;
    for (int i = 1; i <= k; ++i) out << ",Q2_" << i;
    for (int i = 1; i <= k; ++i) out << ",P1_" << i;
    for (int i = 1; i <= k; ++i) out << ",P2_" << i;
    out << ",H,phi_max\n";
    for (size_t r = 0; r < traj.size(); ++r) {
        out << fmt17(traj.times[r]);
        const CanonicalState& s = traj.states[r];
        for (int i = 0; i < k; ++i) out << ',' << fmt17(s.Q1[i]);
        for (int i = 0; i < k; ++i) out << ',' << fmt17(s.Q2[i]);
        for (int i = 0; i < k; ++i) out << ',' << fmt17(s.P1[i]);
        for (int i = 0; i < k; ++i) out << ',' << fmt17(s.P2[i]);
        out << ',' << fmt17(traj.H_values[r]) << ',' << fmt17(traj.constraint_norms[r])
            << '\n';
    }
}

void write_json(const Trajectory& traj, std::ostream& out) {
    nlohmann::json j;
    j["metadata"] = {
        {"dt", traj.metadata.dt},         {"steps", traj.metadata.steps},
        {"projected", traj.metadata.projected}, {"model", traj.metadata.model},
        {"dim_k", traj.metadata.dim_k},   {"diverged", traj.metadata.diverged},
        {"diverged_step", traj.metadata.diverged_step},
    };
    nlohmann::json records = nlohmann::json::array();
    for (size_t r = 0; r < traj.size(); ++r) {
        const CanonicalState& s = traj.states[r];
        nlohmann::json rec;
        rec["t"] = traj.times[r];
        rec["Q1"] = std::vector<double>(s.Q1.data(), s.Q1.data() + s.Q1.size());
        rec["Q2"] = std::vector<double>(s.Q2.data(), s.Q2.data() + s.Q2.size());
        rec["P1"] = std::vector<double>(s.P1.data(), s.P1.data() + s.P1.size());
        rec["P2"] = std::vector<double>(s.P2.data(), s.P2.data() + s.P2.size());
        rec["H"] = traj.H_values[r];
        rec["phi_max"] = traj.constraint_norms[r];
        records.push_back(std::move(rec));
    }
    j["records"] = std::move(records);
    out << j.dump(1) << '\n';
}

void write_trajectory_file(const Trajectory& traj, const std::string& path,
                           const std::string& format) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file: " + path);
    if (format == "csv")
        write_csv(traj, out);
    else if (format == "json")
        write_json(traj, out);
    else
        throw StructuralError("unknown trajectory format: " + format);
    out.flush();
    if (!out) throw Error("failed writing output file: " + path);
}

}  // namespace ostro
