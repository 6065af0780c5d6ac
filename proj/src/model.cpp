#include "fcs/model.hpp"

#include <Eigen/SVD>

#include "fcs/numerics.hpp"

namespace fcs::model {

void Plant::validate() const {
    const int n_p = num_states();
    const int m = num_inputs();
    require(A_p.rows() == n_p && A_p.cols() == n_p, "model.dim", "plant: A_p must be square");
    require(B_p.rows() == n_p, "model.dim", "plant: B_p rows must match A_p");
    require(C_reg.cols() == n_p, "model.dim", "plant: C_reg cols must match A_p");
    require(C_lim.cols() == n_p, "model.dim", "plant: C_lim cols must match A_p");
    require(C_reg.rows() == m && C_lim.rows() == m && D_reg.rows() == m && D_reg.cols() == m,
            "model.not_square",
            "plant: the toolkit requires #inputs = #regulated = #limited outputs (= " +
                std::to_string(m) + "); got C_reg " + std::to_string(C_reg.rows()) +
                ", C_lim " + std::to_string(C_lim.rows()));
    require(all_finite(A_p) && all_finite(B_p) && all_finite(C_reg) && all_finite(D_reg) &&
                all_finite(C_lim),
            "model.non_finite", "plant: non-finite matrix entries");
    require(is_stabilizable(A_p, B_p), "model.not_stabilizable",
            "plant: (A_p, B_p) fails the PBH stabilizability test");
}

void ConstraintBox::validate(int m) const {
    require(u_min.size() == m && u_max.size() == m && z_min.size() == m && z_max.size() == m,
            "model.dim", "constraint box: bound vectors must have length m");
    require(((u_max - u_min).array() > 0.0).all(), "model.bounds_not_strict",
            "constraint box: u_min < u_max must hold component-wise");
    require(((z_max - z_min).array() > 0.0).all(), "model.bounds_not_strict",
            "constraint box: z_min < z_max must hold component-wise");
}

ExtendedSystem build_extended(const Plant& plant, const ServoGains& gains,
                              const ConstraintBox& box) {
    plant.validate();
    const int n_p = plant.num_states();
    const int m = plant.num_inputs();
    box.validate(m);
    require(gains.K_I.rows() == m && gains.K_I.cols() == m, "model.dim", "gains: K_I shape");
    require(gains.K_P.rows() == m && gains.K_P.cols() == n_p, "model.dim", "gains: K_P shape");
    Eigen::FullPivLU<Mat> lu(gains.K_I);
    require(lu.isInvertible(), "model.k_i_singular", "gains: K_I must be invertible");

    ExtendedSystem ext;
    ext.m = m;
    ext.n_p = n_p;
    const int n = n_p + m;

    ext.A = Mat::Zero(n, n);
    ext.A.topRightCorner(m, n_p) = plant.C_reg;
    ext.A.bottomRightCorner(n_p, n_p) = plant.A_p;

    ext.B = Mat::Zero(n, 2 * m);
    ext.B.topLeftCorner(m, m) = Mat::Identity(m, m);
    ext.B.topRightCorner(m, m) = plant.D_reg;
    ext.B.bottomRightCorner(n_p, m) = plant.B_p;

    ext.C_lim = Mat::Zero(2 * m, n);
    ext.C_lim.topLeftCorner(m, m) = -gains.K_I;
    ext.C_lim.topRightCorner(m, n_p) = -gains.K_P;
    ext.C_lim.bottomRightCorner(m, n_p) = plant.C_lim;

    ext.y_lim_min.resize(2 * m);
    ext.y_lim_min << box.u_min, box.z_min;
    ext.y_lim_max.resize(2 * m);
    ext.y_lim_max << box.u_max, box.z_max;
    return ext;
}

std::pair<Vec, Vec> eval_outputs(const Plant& plant, const Vec& x_p, const Vec& u) {
    require(x_p.size() == plant.num_states() && u.size() == plant.num_inputs(), "model.dim",
            "eval_outputs: state/input sizes");
    return {plant.C_reg * x_p + plant.D_reg * u, plant.C_lim * x_p};
}

std::pair<Vec, Vec> constraint_residuals(const ExtendedSystem& ext, const Vec& x) {
    require(x.size() == ext.n(), "model.dim", "constraint_residuals: state size");
    const Vec y = ext.C_lim * x;
    return {ext.y_lim_min - y, y - ext.y_lim_max};
}

bool is_stabilizable(const Mat& a, const Mat& b) {
    const Eigen::Index n = a.rows();
    const auto eigs = numerics::spectrum(a).eigenvalues;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        if (eigs[i].real() < -1e-9) continue;
        CMat pbh(n, n + b.cols());
        pbh << a.cast<std::complex<double>>() - eigs[i] * CMat::Identity(n, n),
            b.cast<std::complex<double>>();
        Eigen::JacobiSVD<CMat> svd(pbh);
        const double rank_tol = 1e-9 * svd.singularValues().maxCoeff();
        if (svd.singularValues().minCoeff() <= rank_tol) return false;
    }
    return true;
}

} // namespace fcs::model
