#include "fcs/controller.hpp"

namespace fcs::controller {

const char* mode_name(Mode mode) {
    switch (mode) {
        case Mode::Baseline: return "baseline";
        case Mode::HardSaturation: return "saturation";
        case Mode::Augmented: return "augmented";
        case Mode::AwOnly: return "awonly";
    }
    return "?";
}

Mode mode_from_name(const std::string& name) {
    if (name == "baseline") return Mode::Baseline;
    if (name == "saturation") return Mode::HardSaturation;
    if (name == "augmented") return Mode::Augmented;
    if (name == "awonly") return Mode::AwOnly;
    throw Error("controller.bad_mode",
                "unknown mode '" + name + "' (baseline|saturation|augmented|awonly)");
}

Vec baseline_control(const model::ServoGains& gains, const Vec& e_yI, const Vec& x_p) {
    return -gains.K_I * e_yI - gains.K_P * x_p;
}

std::pair<Vec, Vec> delta_h(const design::AugmentationDesign& dsn, const Vec& y_min,
                            const Vec& y_max, const Vec& x, const Vec& base) {
    const Vec drift = dsn.H_x * x + dsn.H_u * base;
    return {-drift + dsn.alpha.cwiseProduct(y_min), drift - dsn.alpha.cwiseProduct(y_max)};
}

std::pair<Vec, Vec> delta_h(const design::AugmentationDesign& dsn,
                            const model::ExtendedSystem& ext, const Vec& x, const Vec& u_bl,
                            const Vec& y_cmd) {
    Vec base(2 * ext.m);
    base << -y_cmd, u_bl;
    return delta_h(dsn, ext.y_lim_min, ext.y_lim_max, x, base);
}

Augmentation augment(const design::AugmentationDesign& dsn, const Vec& dH_min,
                     const Vec& dH_max) {
    const Eigen::Index k = dsn.alpha.size();
    require(dH_min.size() == k && dH_max.size() == k, "controller.dim",
            "augment: branch vectors must have one entry per constraint channel");

    Vec keep(k);
    Augmentation out;
    out.delta = IVec::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        require(!(dH_min[i] > 0.0 && dH_max[i] > 0.0), "controller.branch_conflict",
                "augment: both constraint branches positive in channel " + std::to_string(i) +
                    "; design data is corrupt (bounds must satisfy min < max)");
        keep[i] = std::max(0.0, dH_min[i]) - std::max(0.0, dH_max[i]);
        out.delta[i] = (dH_min[i] > 0.0 || dH_max[i] > 0.0) ? 1 : 0;
    }

    const Vec vw = dsn.H_u_inv * keep;
    const Eigen::Index half = k / 2;
    out.v = vw.head(half);
    out.w = vw.tail(k - half);
    return out;
}

Vec aw_only(const model::ServoGains& gains, const model::Plant& plant, const Vec& alpha_u,
            const Vec& x, const Vec& y_cmd, const Vec& u_min, const Vec& u_max) {
    const int m = plant.num_inputs();
    const int n_p = plant.num_states();
    require(alpha_u.size() == m, "controller.dim", "aw_only: one slope per input channel");

    // Input-channel rows of the modified constraints with w = 0:
    // H_x^u = C_u A + diag(alpha) C_u over the extended state, C_u = [-K_I, -K_P].
    Mat c_u(m, m + n_p);
    c_u << -gains.K_I, -gains.K_P;
    Mat a_ext = Mat::Zero(m + n_p, m + n_p);
    a_ext.topRightCorner(m, n_p) = plant.C_reg;
    a_ext.bottomRightCorner(n_p, n_p) = plant.A_p;
    const Mat h_x_u = c_u * a_ext + alpha_u.asDiagonal() * c_u;
    Mat h_u_u(m, 2 * m);
    h_u_u << -gains.K_I, -gains.K_I * plant.D_reg - gains.K_P * plant.B_p;

    const Vec e_yI = x.head(m);
    const Vec x_p = x.tail(n_p);
    Vec base(2 * m);
    base << -y_cmd, baseline_control(gains, e_yI, x_p);

    const Vec drift = h_x_u * x + h_u_u * base;
    const Vec d_min = -drift + alpha_u.cwiseProduct(u_min);
    const Vec d_max = drift - alpha_u.cwiseProduct(u_max);
    const Vec keep = d_min.cwiseMax(0.0) - d_max.cwiseMax(0.0);
    Eigen::FullPivLU<Mat> lu(gains.K_I);
    require(lu.isInvertible(), "controller.k_i_singular", "aw_only: K_I must be invertible");
    return -lu.solve(keep);
}

Vec hard_saturate(const Vec& u, const model::ConstraintBox& box) {
    return u.cwiseMax(box.u_min).cwiseMin(box.u_max);
}

namespace {

Vec active_bounds(const model::ExtendedSystem& ext, const Vec& dH_min, const Vec& dH_max) {
    Vec y(2 * ext.m);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (dH_min[i] > 0.0)
            y[i] = ext.y_lim_min[i];
        else if (dH_max[i] > 0.0)
            y[i] = ext.y_lim_max[i];
        else
            y[i] = 0.0;
    }
    return y;
}

} // namespace

ControlDecision decide(Mode mode, const design::AugmentationDesign& dsn,
                       const model::ExtendedSystem& ext, const model::ServoGains& gains,
                       const Vec& x, const Vec& y_cmd) {
    const int m = ext.m;
    require(x.size() == ext.n(), "controller.dim", "decide: state size");
    require(y_cmd.size() == m, "controller.dim", "decide: command size");

    ControlDecision d;
    d.u_bl = baseline_control(gains, x.head(m), x.tail(ext.n_p));
    std::tie(d.dH_min, d.dH_max) = delta_h(dsn, ext, x, d.u_bl, y_cmd);
    d.y_lim_minmax = active_bounds(ext, d.dH_min, d.dH_max);
    d.delta = IVec::Zero(2 * m);

    switch (mode) {
        case Mode::Baseline:
            d.v = Vec::Zero(m);
            d.w = Vec::Zero(m);
            d.u_total = d.u_bl;
            break;
        case Mode::HardSaturation: {
            d.v = Vec::Zero(m);
            const Vec sat =
                d.u_bl.cwiseMax(ext.y_lim_min.head(m)).cwiseMin(ext.y_lim_max.head(m));
            d.w = sat - d.u_bl;
            d.u_total = d.u_bl + d.w;
            for (int i = 0; i < m; ++i) d.delta[i] = d.w[i] != 0.0 ? 1 : 0;
            break;
        }
        case Mode::Augmented: {
            const Augmentation aug = augment(dsn, d.dH_min, d.dH_max);
            d.v = aug.v;
            d.w = aug.w;
            d.delta = aug.delta;
            d.u_total = d.u_bl + d.w;
            break;
        }
        case Mode::AwOnly: {
            // Input-channel branches of the full design; output channels ignored.
            Vec keep(2 * m);
            keep.setZero();
            for (int i = 0; i < m; ++i) {
                require(!(d.dH_min[i] > 0.0 && d.dH_max[i] > 0.0), "controller.branch_conflict",
                        "decide: both input branches positive in channel " + std::to_string(i));
                keep[i] = std::max(0.0, d.dH_min[i]) - std::max(0.0, d.dH_max[i]);
                d.delta[i] = (d.dH_min[i] > 0.0 || d.dH_max[i] > 0.0) ? 1 : 0;
            }
            d.v = -gains.K_I.fullPivLu().solve(keep.head(m));
            d.w = Vec::Zero(m);
            d.u_total = d.u_bl;
            break;
        }
    }
    return d;
}

std::pair<Mat, Vec> siso_pi_constrained_matrices(const model::Plant& plant,
                                                 const model::ServoGains& gains,
                                                 double alpha_u) {
    require(plant.num_inputs() == 1, "controller.not_siso",
            "siso_pi_constrained_matrices: single-input configuration required");
    require(alpha_u > 0.0, "controller.bad_slope", "siso_pi_constrained_matrices: alpha_u > 0");
    const double k_i = gains.K_I(0, 0);
    require(k_i != 0.0, "controller.k_i_zero", "siso_pi_constrained_matrices: k_I must be nonzero");

    const int n_p = plant.num_states();
    const Mat& a_p = plant.A_p;
    const Vec b_p = plant.B_p.col(0);
    const Eigen::RowVectorXd k_p = gains.K_P.row(0);

    Mat a_g(n_p + 1, n_p + 1);
    a_g.topLeftCorner(n_p, n_p) = a_p - b_p * k_p;
    a_g.topRightCorner(n_p, 1) = -b_p * k_i;
    a_g.bottomLeftCorner(1, n_p) =
        -(k_p * (a_p - b_p * k_p + alpha_u * Mat::Identity(n_p, n_p))) / k_i;
    a_g(n_p, n_p) = k_p.dot(b_p) - alpha_u;

    Vec b_g = Vec::Zero(n_p + 1);
    b_g[n_p] = -1.0 / k_i;
    return {std::move(a_g), std::move(b_g)};
}

} // namespace fcs::controller
