#include "fcs/design.hpp"

#include <limits>

#include <Eigen/SVD>

#include "fcs/numerics.hpp"

namespace fcs::design {

PolynomialSpec PolynomialSpec::from_alpha(const Vec& alpha) {
    PolynomialSpec spec;
    spec.roots.reserve(alpha.size());
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
        spec.roots.push_back({-alpha[i]});
    return spec;
}

Vec PolynomialSpec::alpha() const {
    Vec a(static_cast<Eigen::Index>(roots.size()));
    for (size_t i = 0; i < roots.size(); ++i) {
        double c0 = 1.0;
        for (double root : roots[i]) c0 *= -root;
        a[static_cast<Eigen::Index>(i)] = c0;
    }
    return a;
}

void PolynomialSpec::validate(const std::vector<int>& relative_degrees) const {
    require(roots.size() == relative_degrees.size(), "design.dim",
            "polynomial spec: need one root list per constraint channel (" +
                std::to_string(relative_degrees.size()) + ")");
    for (size_t i = 0; i < roots.size(); ++i) {
        require(roots[i].size() == static_cast<size_t>(relative_degrees[i]), "design.root_count",
                "polynomial spec: channel " + std::to_string(i) + " needs " +
                    std::to_string(relative_degrees[i]) + " roots, got " +
                    std::to_string(roots[i].size()));
        for (double root : roots[i])
            require(root < 0.0, "design.root_not_stable",
                    "polynomial spec: channel " + std::to_string(i) +
                        " has a non-negative root " + std::to_string(root));
    }
}

model::ServoGains lqr_pi_design(const model::Plant& plant, const Mat& q, const Mat& r) {
    plant.validate();
    const int n_p = plant.num_states();
    const int m = plant.num_inputs();
    const int n = n_p + m;
    require(q.rows() == n && q.cols() == n, "design.dim",
            "lqr_pi_design: Q must be " + std::to_string(n) + "x" + std::to_string(n) +
                " over [e_yI; x_p]");
    require(r.rows() == m && r.cols() == m, "design.dim", "lqr_pi_design: R shape");

    Mat a = Mat::Zero(n, n);
    a.topRightCorner(m, n_p) = plant.C_reg;
    a.bottomRightCorner(n_p, n_p) = plant.A_p;
    Mat b(n, m);
    b << plant.D_reg, plant.B_p;

    const auto care = numerics::care_solve(a, b, q, r);

    model::ServoGains gains;
    gains.K_I = care.k.leftCols(m);
    gains.K_P = care.k.rightCols(n_p);

    Eigen::JacobiSVD<Mat> svd(gains.K_I);
    const double smin = svd.singularValues().minCoeff();
    require(smin > 0.0 && svd.singularValues().maxCoeff() / smin <= 1e10, "design.k_i_singular",
            "lqr_pi_design: K_I numerically singular; the design cannot support the "
            "augmentation (try nonzero integrator weights)");
    return gains;
}

std::vector<int> relative_degree(const model::ExtendedSystem& ext) {
    const int n = ext.n();
    const int channels = 2 * ext.m;
    const double a_norm = ext.A.norm();
    const double b_norm = ext.B.norm();

    std::vector<int> degrees(channels, 0);
    for (int i = 0; i < channels; ++i) {
        Eigen::RowVectorXd row = ext.C_lim.row(i);
        const double c_norm = row.norm();
        double a_pow = 1.0;
        for (int k = 1; k <= n; ++k) {
            const double scale = std::max(c_norm * a_pow * b_norm, 1e-300);
            if ((row * ext.B).norm() > 1e-9 * scale) {
                degrees[i] = k;
                break;
            }
            row *= ext.A;
            a_pow *= std::max(a_norm, 1.0);
        }
        require(degrees[i] >= 1, "design.no_relative_degree",
                "relative_degree: channel " + std::to_string(i) +
                    " has no finite relative degree within n differentiations");
        if (i < ext.m)
            require(degrees[i] == 1, "design.input_channel_degree",
                    "relative_degree: input channel " + std::to_string(i) +
                        " must be relative degree one, got " + std::to_string(degrees[i]));
    }
    return degrees;
}

AugmentationDesign build_sensitivities(const model::ExtendedSystem& ext,
                                       const model::ServoGains& gains,
                                       const PolynomialSpec& poly) {
    const int n = ext.n();
    const int m = ext.m;
    const int channels = 2 * m;

    AugmentationDesign out;
    out.relative_degrees = relative_degree(ext);
    poly.validate(out.relative_degrees);
    out.alpha = poly.alpha();

    out.H_x = Mat::Zero(channels, n);
    out.H_u = Mat::Zero(channels, channels);
    for (int i = 0; i < channels; ++i) {
        Eigen::RowVectorXd hx = ext.C_lim.row(i);
        for (double root : poly.roots[static_cast<size_t>(i)])
            hx = hx * ext.A - root * hx;
        out.H_x.row(i) = hx;

        Eigen::RowVectorXd hu = ext.C_lim.row(i);
        for (int k = 1; k < out.relative_degrees[static_cast<size_t>(i)]; ++k) hu *= ext.A;
        out.H_u.row(i) = hu * ext.B;
    }

    // Analytic block structure of the input sensitivity for the PI servo:
    // [ -K_I, -K_I D - K_P B_p ; 0, H_w ] with H_w from the plant maps.
    const Mat d_reg = ext.B.topRightCorner(m, m);
    const Mat b_p = ext.B.bottomRightCorner(ext.n_p, m);
    const Mat a_p = ext.A.bottomRightCorner(ext.n_p, ext.n_p);
    const Mat c_lim_p = ext.C_lim.bottomRightCorner(m, ext.n_p);

    Mat h_w(m, m);
    for (int i = 0; i < m; ++i) {
        Eigen::RowVectorXd row = c_lim_p.row(i);
        for (int k = 1; k < out.relative_degrees[static_cast<size_t>(m + i)]; ++k) row *= a_p;
        h_w.row(i) = row * b_p;
    }
    out.H_w = h_w;

    Mat block(channels, channels);
    block.topLeftCorner(m, m) = -gains.K_I;
    block.topRightCorner(m, m) = -gains.K_I * d_reg - gains.K_P * b_p;
    block.bottomLeftCorner(m, m).setZero();
    block.bottomRightCorner(m, m) = h_w;
    const double mismatch = (out.H_u - block).norm() / std::max(1.0, block.norm());
    require(mismatch <= 1e-10, "design.block_form",
            "build_sensitivities: H_u disagrees with its analytic block form (rel err " +
                std::to_string(mismatch) + "); gains and extended system are inconsistent");

    Eigen::JacobiSVD<Mat> svd(out.H_u);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    out.H_u_condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    require(std::isfinite(out.H_u_condition) && out.H_u_condition <= 1e12, "design.h_u_singular",
            "build_sensitivities: H_u is numerically singular (condition " +
                std::to_string(out.H_u_condition) + "); the limited output lacks a valid "
                "vector relative degree");
    out.H_u_inv = out.H_u.fullPivLu().inverse();
    return out;
}

} // namespace fcs::design
