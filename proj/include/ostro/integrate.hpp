#pragma once

#include <iosfwd>

#include "ostro/constraints.hpp"

namespace ostro {

// ---------------------------------------------------------------------------
// Systems and stepping
// ---------------------------------------------------------------------------

/// First-order flow on a 4K-dimensional state, with an energy diagnostic.
struct System {
    std::string name;
    int dim_k = 0;
    std::function<CanonicalState(const CanonicalState&)> rhs;
    std::function<double(const CanonicalState&)> energy;
};

/// Canonical flow and Hamiltonian of a model. The system references the
/// spec, which must outlive it.
System make_system(const ModelSpec& spec, std::string name);

/// One classical fourth-order Runge-Kutta step. Throws DivergenceError when
/// a stage evaluates to a non-finite value.
Vec step_rk4(const std::function<Vec(const Vec&)>& rhs, const Vec& state, double dt);
CanonicalState step_rk4(const std::function<CanonicalState(const CanonicalState&)>& rhs,
                        const CanonicalState& state, double dt);

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

enum class RunMode { free, projected };

struct IntegrateOptions {
    double dt = 1e-3;
    long steps = 1000;
    RunMode mode = RunMode::free;
    /// Constraint set used for projection (projected mode) and for the
    /// per-step residual diagnostic (both modes, when present).
    const ConstraintChain* chain = nullptr;
    int projection_every = 1;
    double divergence_threshold = 1e12;
    ProjectOptions projection;
};

struct TrajectoryMetadata {
    double dt = 0.0;
    long steps = 0;
    bool projected = false;
    std::string model;
    int dim_k = 0;
    bool diverged = false;
    long diverged_step = -1;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<CanonicalState> states;
    std::vector<double> H_values;
    std::vector<double> constraint_norms;
    TrajectoryMetadata metadata;

    size_t size() const { return times.size(); }
};

/// Fixed-step RK4 run with per-step energy and constraint diagnostics. In
/// projected mode the state is projected onto the constraint manifold every
/// projection_every steps. A state exceeding the divergence threshold (or a
/// non-finite stage) truncates the trajectory and sets the diverged flag;
/// projection failures propagate as ProjectionError.
Trajectory integrate(const System& system, const CanonicalState& initial,
                     const IntegrateOptions& options);
Trajectory integrate(const ModelSpec& spec, const CanonicalState& initial,
                     const IntegrateOptions& options);

/// Independent trajectories from a set of initial states; runs concurrently.
std::vector<Trajectory> integrate_batch(const System& system,
                                        const std::vector<CanonicalState>& initials,
                                        const IntegrateOptions& options);

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct GrowthFit {
    double rate = 0.0;
    double r_squared = 0.0;
};

enum class EnvelopeModel { exponential, linear };

/// Least-squares slope of the state-norm trend over [t_lo, t_hi]:
/// log-norm for the exponential model, plain norm for the linear one.
/// With block_length > 0 the fit runs on per-block norm maxima, which
/// removes the oscillatory carrier of quasi-periodic signals.
GrowthFit growth_rate_fit(const Trajectory& traj, double t_lo, double t_hi,
                          EnvelopeModel model = EnvelopeModel::exponential,
                          double block_length = 0.0);

struct DriftReport {
    double max_H_drift = 0.0;
    double max_constraint_norm = 0.0;
    bool diverged = false;
};

DriftReport drift_report(const Trajectory& traj);

// ---------------------------------------------------------------------------
// Export (CSV columns: t, Q1..., Q2..., P1..., P2..., H, phi_max)
// ---------------------------------------------------------------------------

void write_csv(const Trajectory& traj, std::ostream& out);
void write_json(const Trajectory& traj, std::ostream& out);
void write_trajectory_file(const Trajectory& traj, const std::string& path,
                           const std::string& format);

}  // namespace ostro
