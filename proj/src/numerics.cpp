#include "fcs/numerics.hpp"

#include <algorithm>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace fcs::numerics {

namespace {

void require_square(const Mat& m, const char* what) {
    require(m.rows() == m.cols(), "numerics.non_square",
            std::string(what) + ": matrix must be square, got " +
                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

double sym_norm(const Mat& m) { return m.norm(); }

} // namespace

Spectrum spectrum(const Mat& m) {
    require_square(m, "spectrum");
    require(all_finite(m), "numerics.non_finite", "spectrum: non-finite entries");
    if (m.rows() == 0) return {CVec(0)};

    Eigen::EigenSolver<Mat> solver(m, /*computeEigenvectors=*/false);
    require(solver.info() == Eigen::Success, "numerics.eig_no_convergence",
            "spectrum: QR iteration failed to converge within " +
                std::to_string(40 * m.rows()) + " sweeps");

    std::vector<std::complex<double>> eigs(solver.eigenvalues().data(),
                                           solver.eigenvalues().data() + m.rows());
    std::sort(eigs.begin(), eigs.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });

    Spectrum out;
    out.eigenvalues = Eigen::Map<const CVec>(eigs.data(), static_cast<Eigen::Index>(eigs.size()));
    return out;
}

bool is_hurwitz(const Mat& m, double margin) {
    if (m.rows() == 0) return true;
    return spectrum(m).max_real() < -margin;
}

Mat lyapunov_solve(const Mat& a, const Mat& q, const Tolerances& tol) {
    require_square(a, "lyapunov_solve");
    require(q.rows() == a.rows() && q.cols() == a.cols(), "numerics.dim_mismatch",
            "lyapunov_solve: Q must match A");
    require((q - q.transpose()).norm() <= 1e-9 * std::max(1.0, q.norm()),
            "numerics.not_symmetric", "lyapunov_solve: Q must be symmetric");
    require(is_hurwitz(a), "numerics.not_hurwitz",
            "lyapunov_solve: A must be Hurwitz for a unique solution");

    const Eigen::Index n = a.rows();
    const Mat qs = 0.5 * (q + q.transpose());

    // vec(A'P + PA) = (I (x) A' + A' (x) I) vec(P)
    Mat sys = Mat::Zero(n * n, n * n);
    const Mat at = a.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
        sys.block(i * n, i * n, n, n) += at;
    for (Eigen::Index bi = 0; bi < n; ++bi)
        for (Eigen::Index bj = 0; bj < n; ++bj)
            for (Eigen::Index k = 0; k < n; ++k)
                sys(bi * n + k, bj * n + k) += at(bi, bj);

    Vec rhs(n * n);
    for (Eigen::Index j = 0; j < n; ++j)
        rhs.segment(j * n, n) = -qs.col(j);

    Eigen::FullPivLU<Mat> lu(sys);
    require(lu.isInvertible(), "numerics.singular_system",
            "lyapunov_solve: singular Kronecker system");
    const Vec pv = lu.solve(rhs);

    Mat p(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        p.col(j) = pv.segment(j * n, n);
    p = 0.5 * (p + p.transpose());

    const double denom = std::max(sym_norm(qs), 1e-300);
    const double rel = (at * p + p * a + qs).norm() / denom;
    require(rel <= tol.lyapunov_rel_residual || qs.norm() == 0.0, "numerics.residual",
            "lyapunov_solve: relative residual " + std::to_string(rel) + " above tolerance");
    return p;
}

namespace {

// Bass's construction: K0 = B' W^{-1} with (A + beta I) W + W (A + beta I)' = 2 B B'.
Mat stabilizing_gain(const Mat& a, const Mat& b) {
    const Eigen::Index n = a.rows();
    double beta = a.norm() + 0.5;
    for (int attempt = 0; attempt < 4; ++attempt) {
        const Mat shifted = -(a + beta * Mat::Identity(n, n)).transpose();
        Mat w;
        try {
            w = lyapunov_solve(shifted, 2.0 * b * b.transpose());
        } catch (const Error&) {
            beta *= 2.0;
            continue;
        }
        Eigen::FullPivLU<Mat> lu(w);
        if (!lu.isInvertible()) {
            beta *= 2.0;
            continue;
        }
        Mat k0 = b.transpose() * lu.inverse();
        if (is_hurwitz(a - b * k0)) return k0;
        beta *= 2.0;
    }
    throw Error("numerics.no_stabilizing_gain",
                "care_solve: stabilizing initial gain not found (pair may not be stabilizable)");
}

} // namespace

CareSolution care_solve(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                        const Tolerances& tol) {
    require_square(a, "care_solve");
    const Eigen::Index n = a.rows(), m = b.cols();
    require(b.rows() == n, "numerics.dim_mismatch", "care_solve: B row count");
    require(q.rows() == n && q.cols() == n, "numerics.dim_mismatch", "care_solve: Q shape");
    require(r.rows() == m && r.cols() == m, "numerics.dim_mismatch", "care_solve: R shape");
    Eigen::LLT<Mat> rchol(0.5 * (r + r.transpose()));
    require(rchol.info() == Eigen::Success, "numerics.r_not_pd",
            "care_solve: R must be positive definite");

    const Mat qs = 0.5 * (q + q.transpose());
    const Mat rinv_bt = rchol.solve(b.transpose());

    Mat k = is_hurwitz(a) ? Mat::Zero(m, n) : stabilizing_gain(a, b);

    Mat p = Mat::Zero(n, n);
    int iters = 0;
    for (; iters < tol.care_max_iterations; ++iters) {
        const Mat a_cl = a - b * k;
        const Mat qk = qs + k.transpose() * r * k;
        Mat p_next;
        try {
            // Kleinman step tolerates loose intermediate residuals; the final
            // Riccati residual is what gets gated below.
            Tolerances loose = tol;
            loose.lyapunov_rel_residual = 1e-6;
            p_next = lyapunov_solve(a_cl, qk, loose);
        } catch (const Error& e) {
            throw Error("numerics.care_iteration",
                        std::string("care_solve: Kleinman step failed: ") + e.what());
        }
        const Mat k_next = rinv_bt * p_next;
        const double dk = (k_next - k).norm() / std::max(1.0, k.norm());
        p = p_next;
        k = k_next;
        if (dk < 1e-14) break;
    }
    require(iters < tol.care_max_iterations, "numerics.care_no_convergence",
            "care_solve: Kleinman iteration did not converge within " +
                std::to_string(tol.care_max_iterations) + " steps");

    const Mat res = a.transpose() * p + p * a - p * b * rchol.solve(b.transpose() * p) + qs;
    const double denom = std::max(
        1e-300, qs.norm() + (a.transpose() * p).norm() + (p * b * rchol.solve(b.transpose() * p)).norm());
    const double rel = res.norm() / denom;
    require(rel <= tol.care_rel_residual, "numerics.residual",
            "care_solve: relative residual " + std::to_string(rel) + " above tolerance");
    require(is_hurwitz(a - b * k), "numerics.not_stabilizing",
            "care_solve: closed loop not Hurwitz");

    return {std::move(p), std::move(k), rel, iters + 1};
}

double min_singular_value(const CMat& m) {
    require(m.allFinite(), "numerics.non_finite", "min_singular_value: non-finite entries");
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(m);
    return svd.singularValues().minCoeff();
}

CMat freq_response_solve(const Mat& a, const Mat& b, double omega, const Tolerances& tol) {
    require_square(a, "freq_response_solve");
    require(b.rows() == a.rows(), "numerics.dim_mismatch", "freq_response_solve: B row count");

    const Eigen::Index n = a.rows();
    CMat m = -a.cast<std::complex<double>>();
    m.diagonal().array() += std::complex<double>(0.0, omega);

    Eigen::JacobiSVD<CMat> svd(m);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    require(smin > 0.0 && smax / smin <= tol.resolvent_max_condition,
            "numerics.singular_resolvent",
            "freq_response_solve: (jwI - A) numerically singular at w = " + std::to_string(omega));

    const CMat bc = b.cast<std::complex<double>>();
    CMat x = m.partialPivLu().solve(bc);

    const double rel = (m * x - bc).norm() / std::max(bc.norm(), 1e-300);
    require(rel <= 1e-10 || b.norm() == 0.0, "numerics.residual",
            "freq_response_solve: solve residual above tolerance at w = " + std::to_string(omega));
    return x;
}

} // namespace fcs::numerics
