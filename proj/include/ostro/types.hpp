#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ostro {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Callback output shape disagrees with the declared dimensions, or a
/// required jet component is missing.
struct StructuralError : Error {
    using Error::Error;
};

struct SingularityError : Error {
    SingularityError(const std::string& what, double condition_estimate)
        : Error(what), condition(condition_estimate) {}
    double condition;
};

struct ProjectionError : Error {
    ProjectionError(const std::string& what, double final_residual)
        : Error(what), residual(final_residual) {}
    double residual;
};

struct DivergenceError : Error {
    explicit DivergenceError(const std::string& what, long step = -1)
        : Error(what), step_index(step) {}
    long step_index;
};

// ---------------------------------------------------------------------------
// Small dense tensors (rank 3 and 4), row-major flat storage
// ---------------------------------------------------------------------------

class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int n0, int n1, int n2)
        : n0_(n0), n1_(n1), n2_(n2), data_(static_cast<size_t>(n0) * n1 * n2, 0.0) {}

    double& operator()(int i, int j, int k) { return data_[idx(i, j, k)]; }
    double operator()(int i, int j, int k) const { return data_[idx(i, j, k)]; }

    int dim0() const { return n0_; }
    int dim1() const { return n1_; }
    int dim2() const { return n2_; }

private:
    size_t idx(int i, int j, int k) const {
        return (static_cast<size_t>(i) * n1_ + j) * n2_ + k;
    }
    int n0_ = 0, n1_ = 0, n2_ = 0;
    std::vector<double> data_;
};

class Tensor4 {
public:
    Tensor4() = default;
    Tensor4(int n0, int n1, int n2, int n3)
        : n0_(n0), n1_(n1), n2_(n2), n3_(n3),
          data_(static_cast<size_t>(n0) * n1 * n2 * n3, 0.0) {}

    double& operator()(int i, int j, int k, int l) { return data_[idx(i, j, k, l)]; }
    double operator()(int i, int j, int k, int l) const { return data_[idx(i, j, k, l)]; }

    int dim0() const { return n0_; }
    int dim1() const { return n1_; }
    int dim2() const { return n2_; }
    int dim3() const { return n3_; }

private:
    size_t idx(int i, int j, int k, int l) const {
        return ((static_cast<size_t>(i) * n1_ + j) * n2_ + k) * n3_ + l;
    }
    int n0_ = 0, n1_ = 0, n2_ = 0, n3_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Phase-space containers
// ---------------------------------------------------------------------------

/// Configuration together with its time derivatives. The jerk is optional so
/// second-order-only workflows need not fabricate it.
struct Jet {
    Vec qbar;
    Vec qbar_dot;
    Vec qbar_ddot;
    std::optional<Vec> qbar_dddot;

    int dim() const { return static_cast<int>(qbar.size()); }
    bool has_jerk() const { return qbar_dddot.has_value(); }
};

/// Jet extended by the fourth time derivative, as needed by the
/// fourth-order evolution equation.
struct JetWithFourth {
    Jet jet;
    Vec qbar_ddddot;
};

/// Ostrogradsky phase-space point: two configuration blocks and their
/// conjugate momenta, each a K-vector.
struct CanonicalState {
    Vec Q1, Q2, P1, P2;

    int dim() const { return static_cast<int>(Q1.size()); }

    static CanonicalState Zero(int k) {
        return {Vec::Zero(k), Vec::Zero(k), Vec::Zero(k), Vec::Zero(k)};
    }
};

/// Partial derivatives of the Hamiltonian with respect to the four canonical
/// blocks.
struct GradH {
    Vec dQ1, dQ2, dP1, dP2;
};

/// Flatten in block order [Q1, Q2, P1, P2].
inline Vec flatten(const CanonicalState& s) {
    const int k = s.dim();
    Vec out(4 * k);
    out.segment(0, k) = s.Q1;
    out.segment(k, k) = s.Q2;
    out.segment(2 * k, k) = s.P1;
    out.segment(3 * k, k) = s.P2;
    return out;
}

inline CanonicalState unflatten(const Vec& x) {
    const int k = static_cast<int>(x.size()) / 4;
    if (4 * k != x.size())
        throw StructuralError("canonical state vector length must be a multiple of 4");
    return {x.segment(0, k), x.segment(k, k), x.segment(2 * k, k), x.segment(3 * k, k)};
}

inline Vec flatten(const GradH& g) {
    const int k = static_cast<int>(g.dQ1.size());
    Vec out(4 * k);
    out.segment(0, k) = g.dQ1;
    out.segment(k, k) = g.dQ2;
    out.segment(2 * k, k) = g.dP1;
    out.segment(3 * k, k) = g.dP2;
    return out;
}

}  // namespace ostro
