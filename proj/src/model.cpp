#include "ostro/model.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace ostro {

namespace {

double fd_step(double x) { return std::max(1e-6, 1e-6 * std::abs(x)); }

void check_shape(const std::string& field, long rows, long cols, long exp_rows, long exp_cols) {
    if (rows != exp_rows || cols != exp_cols) {
        std::ostringstream os;
        os << "callback '" << field << "' returned shape " << rows << "x" << cols
           << ", expected " << exp_rows << "x" << exp_cols;
        throw StructuralError(os.str());
    }
}

void check_tensor3(const std::string& field, const Tensor3& t, int n0, int n1, int n2) {
    if (t.dim0() != n0 || t.dim1() != n1 || t.dim2() != n2) {
        std::ostringstream os;
        os << "callback '" << field << "' returned shape " << t.dim0() << "x" << t.dim1()
           << "x" << t.dim2() << ", expected " << n0 << "x" << n1 << "x" << n2;
        throw StructuralError(os.str());
    }
}

void check_tensor4(const std::string& field, const Tensor4& t, int n0, int n1, int n2, int n3) {
    if (t.dim0() != n0 || t.dim1() != n1 || t.dim2() != n2 || t.dim3() != n3) {
        std::ostringstream os;
        os << "callback '" << field << "' returned shape " << t.dim0() << "x" << t.dim1()
           << "x" << t.dim2() << "x" << t.dim3() << ", expected " << n0 << "x" << n1 << "x"
           << n2 << "x" << n3;
        throw StructuralError(os.str());
    }
}

void check_spec_shapes(const ModelSpec& spec, const Vec& qbar) {
    const int I = spec.dim_i();
    const int K = spec.dim_k();
    if (spec.lagrangian.dim_i != I)
        throw StructuralError("lagrangian.dim_i does not match transform.dim_i");
    if (K > I) throw StructuralError("transform requires K <= I");

    const Vec a = spec.transform.alpha(qbar);
    check_shape("transform.alpha", a.size(), 1, I, 1);
    const Mat b = spec.transform.beta(qbar);
    check_shape("transform.beta", b.rows(), b.cols(), I, K);
    const Mat da = spec.transform.dalpha(qbar);
    check_shape("transform.dalpha", da.rows(), da.cols(), I, K);
    check_tensor3("transform.dbeta", spec.transform.dbeta(qbar), I, K, K);
    check_tensor3("transform.ddalpha", spec.transform.ddalpha(qbar), I, K, K);
    check_tensor4("transform.ddbeta", spec.transform.ddbeta(qbar), I, K, K, K);

    const Vec q = Vec::Zero(I);
    const Vec uv = spec.lagrangian.u(q);
    check_shape("lagrangian.u", uv.size(), 1, I, 1);
    const Mat duv = spec.lagrangian.du(q);
    check_shape("lagrangian.du", duv.rows(), duv.cols(), I, I);
    const Vec dv = spec.lagrangian.dV(q);
    check_shape("lagrangian.dV", dv.size(), 1, I, 1);
}

double scale_of(double max_abs) { return std::max(1.0, max_abs); }

/// max-entry |fd - analytic| of a vector-valued map, scaled by the analytic
/// block's largest entry (floored at 1).
template <typename F>
double vector_mismatch(const F& f, const Mat& analytic, const Vec& x) {
    const long n = x.size();
    double worst = 0.0;
    double amax = 0.0;
    for (long r = 0; r < analytic.rows(); ++r)
        for (long c = 0; c < analytic.cols(); ++c)
            amax = std::max(amax, std::abs(analytic(r, c)));
    for (long j = 0; j < n; ++j) {
        Vec xp = x, xm = x;
        const double h = fd_step(x[j]);
        xp[j] += h;
        xm[j] -= h;
        const Vec fp = f(xp);
        const Vec fm = f(xm);
        for (long i = 0; i < fp.size(); ++i) {
            const double fd = (fp[i] - fm[i]) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - analytic(i, j)));
        }
    }
    return worst / scale_of(amax);
}

}  // namespace

Mat TransformEval::jac_q(const Vec& qd) const {
    Mat t = dalpha;
    for (int i = 0; i < dim_i; ++i)
        for (int k = 0; k < dim_k; ++k) {
            double s = 0.0;
            for (int l = 0; l < dim_k; ++l) s += dbeta(i, l, k) * qd[l];
            t(i, k) += s;
        }
    return t;
}

Mat TransformEval::beta_dot(const Vec& qd) const {
    Mat bd = Mat::Zero(dim_i, dim_k);
    for (int i = 0; i < dim_i; ++i)
        for (int k = 0; k < dim_k; ++k)
            for (int l = 0; l < dim_k; ++l) bd(i, k) += dbeta(i, k, l) * qd[l];
    return bd;
}

Vec TransformEval::accel_bias(const Vec& qd) const {
    Vec a2 = Vec::Zero(dim_i);
    for (int i = 0; i < dim_i; ++i) {
        double s = 0.0;
        for (int k = 0; k < dim_k; ++k)
            for (int l = 0; l < dim_k; ++l) {
                s += ddalpha(i, k, l) * qd[k] * qd[l];
                for (int m = 0; m < dim_k; ++m)
                    s += ddbeta(i, k, l, m) * qd[k] * qd[l] * qd[m];
            }
        a2[i] = s;
    }
    return a2;
}

Mat TransformEval::jac_q_dot(const Vec& qd, const Vec& qdd) const {
    Mat dt = Mat::Zero(dim_i, dim_k);
    for (int i = 0; i < dim_i; ++i)
        for (int k = 0; k < dim_k; ++k) {
            double s = 0.0;
            for (int l = 0; l < dim_k; ++l) {
                s += ddalpha(i, k, l) * qd[l];
                s += dbeta(i, l, k) * qdd[l];
                for (int m = 0; m < dim_k; ++m) s += ddbeta(i, l, k, m) * qd[l] * qd[m];
            }
            dt(i, k) = s;
        }
    return dt;
}

TransformEval eval_transform(const ModelSpec& spec, const Vec& qbar, bool require_gram_inverse) {
    const int I = spec.dim_i();
    const int K = spec.dim_k();
    if (qbar.size() != K) throw StructuralError("qbar has wrong dimension");

    TransformEval ev;
    ev.dim_i = I;
    ev.dim_k = K;
    ev.alpha = spec.transform.alpha(qbar);
    ev.beta = spec.transform.beta(qbar);
    ev.dalpha = spec.transform.dalpha(qbar);
    ev.dbeta = spec.transform.dbeta(qbar);
    ev.ddalpha = spec.transform.ddalpha(qbar);
    ev.ddbeta = spec.transform.ddbeta(qbar);

    if (ev.alpha.size() != I) throw StructuralError("transform.alpha returned wrong size");
    if (ev.beta.rows() != I || ev.beta.cols() != K)
        throw StructuralError("transform.beta returned wrong shape");

    if (require_gram_inverse) {
        const Mat gram = ev.beta.transpose() * ev.beta;
        Eigen::SelfAdjointEigenSolver<Mat> es(gram);
        const Vec evals = es.eigenvalues();
        const double lo = evals.minCoeff();
        const double hi = evals.maxCoeff();
        const double cond = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
        if (!(cond < 1e12))
            throw SingularityError("Gram matrix of beta is numerically singular", cond);
        Mat inv = es.eigenvectors() * evals.cwiseInverse().asDiagonal() *
                  es.eigenvectors().transpose();
        ev.gram_inv = 0.5 * (inv + inv.transpose());
    }
    return ev;
}

Mat gram_inverse(const ModelSpec& spec, const Vec& qbar) {
    return eval_transform(spec, qbar, true).gram_inv;
}

ValidationReport validate_model(const ModelSpec& spec, const std::vector<Vec>& sample_points) {
    if (sample_points.empty())
        throw StructuralError("validate_model requires at least one sample point");
    const int I = spec.dim_i();
    const int K = spec.dim_k();
    for (const Vec& p : sample_points)
        if (p.size() != K) throw StructuralError("sample point has wrong dimension");

    check_spec_shapes(spec, sample_points.front());

    ValidationReport report;
    report.one_to_one_correspondence = (2 * I == 3 * K);

    const auto& lag = spec.lagrangian;
    const auto& tr = spec.transform;

    for (const Vec& qbar : sample_points) {
        PointReport pr;
        pr.point = qbar;

        // Lagrangian derivatives are checked at the lifted point q(qbar, 0).
        const Vec q = tr.alpha(qbar);
        pr.mismatch_du = vector_mismatch(lag.u, lag.du(q), q);
        {
            Mat dv_row(1, I);
            const Vec dv = lag.dV(q);
            for (int i = 0; i < I; ++i) dv_row(0, i) = dv[i];
            pr.mismatch_dV = vector_mismatch(
                [&](const Vec& x) { return Vec::Constant(1, lag.V(x)); }, dv_row, q);
        }

        pr.mismatch_dalpha = vector_mismatch(tr.alpha, tr.dalpha(qbar), qbar);

        // beta and its derivatives, treated column-block by direction.
        {
            const Tensor3 db = tr.dbeta(qbar);
            double worst = 0.0, amax = 0.0;
            for (int i = 0; i < I; ++i)
                for (int k = 0; k < K; ++k)
                    for (int l = 0; l < K; ++l) amax = std::max(amax, std::abs(db(i, k, l)));
            for (int l = 0; l < K; ++l) {
                Vec xp = qbar, xm = qbar;
                const double h = fd_step(qbar[l]);
                xp[l] += h;
                xm[l] -= h;
                const Mat bp = tr.beta(xp), bm = tr.beta(xm);
                for (int i = 0; i < I; ++i)
                    for (int k = 0; k < K; ++k) {
                        const double fd = (bp(i, k) - bm(i, k)) / (2.0 * h);
                        worst = std::max(worst, std::abs(fd - db(i, k, l)));
                    }
            }
            pr.mismatch_dbeta = worst / scale_of(amax);
        }
        {
            const Tensor3 dda = tr.ddalpha(qbar);
            double worst = 0.0, amax = 0.0;
            for (int i = 0; i < I; ++i)
                for (int k = 0; k < K; ++k)
                    for (int l = 0; l < K; ++l) amax = std::max(amax, std::abs(dda(i, k, l)));
            for (int l = 0; l < K; ++l) {
                Vec xp = qbar, xm = qbar;
                const double h = fd_step(qbar[l]);
                xp[l] += h;
                xm[l] -= h;
                const Mat ap = tr.dalpha(xp), am = tr.dalpha(xm);
                for (int i = 0; i < I; ++i)
                    for (int k = 0; k < K; ++k) {
                        const double fd = (ap(i, k) - am(i, k)) / (2.0 * h);
                        worst = std::max(worst, std::abs(fd - dda(i, k, l)));
                    }
            }
            pr.mismatch_ddalpha = worst / scale_of(amax);
        }
        {
            const Tensor4 ddb = tr.ddbeta(qbar);
            double worst = 0.0, amax = 0.0;
            for (int i = 0; i < I; ++i)
                for (int k = 0; k < K; ++k)
                    for (int l = 0; l < K; ++l)
                        for (int m = 0; m < K; ++m)
                            amax = std::max(amax, std::abs(ddb(i, k, l, m)));
            for (int m = 0; m < K; ++m) {
                Vec xp = qbar, xm = qbar;
                const double h = fd_step(qbar[m]);
                xp[m] += h;
                xm[m] -= h;
                const Tensor3 dp = tr.dbeta(xp), dm = tr.dbeta(xm);
                for (int i = 0; i < I; ++i)
                    for (int k = 0; k < K; ++k)
                        for (int l = 0; l < K; ++l) {
                            const double fd = (dp(i, k, l) - dm(i, k, l)) / (2.0 * h);
                            worst = std::max(worst, std::abs(fd - ddb(i, k, l, m)));
                        }
            }
            pr.mismatch_ddbeta = worst / scale_of(amax);
        }

        Eigen::JacobiSVD<Mat> svd(tr.beta(qbar));
        pr.sigma_min = svd.singularValues().minCoeff();
        pr.sigma_max = svd.singularValues().maxCoeff();
        pr.rank_ok = pr.sigma_max > 0.0 && pr.sigma_min / pr.sigma_max > 1e-10;

        const double tol = report.tolerance;
        pr.pass = pr.rank_ok && pr.mismatch_du < tol && pr.mismatch_dV < tol &&
                  pr.mismatch_dalpha < tol && pr.mismatch_dbeta < tol &&
                  pr.mismatch_ddalpha < tol && pr.mismatch_ddbeta < tol;
        report.points.push_back(std::move(pr));
    }

    report.pass = true;
    for (const auto& pr : report.points) report.pass = report.pass && pr.pass;
    return report;
}

}  // namespace ostro
