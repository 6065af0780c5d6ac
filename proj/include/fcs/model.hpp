#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fcs/types.hpp"

namespace fcs::model {

/// Open-loop LTI plant with regulated and limited output maps. The toolkit
/// assumes the square configuration: #inputs = #regulated = #limited = m.
/// All internal data is in radians / seconds / g.
struct Plant {
    Mat A_p;     // n_p x n_p
    Mat B_p;     // n_p x m
    Mat C_reg;   // m x n_p
    Mat D_reg;   // m x m
    Mat C_lim;   // m x n_p

    std::vector<std::string> state_names;
    std::vector<std::string> input_names;
    std::vector<std::string> regulated_names;
    std::vector<std::string> limited_names;

    int num_states() const { return static_cast<int>(A_p.rows()); }
    int num_inputs() const { return static_cast<int>(B_p.cols()); }

    /// Dimension consistency, squareness, and PBH stabilizability of (A_p, B_p).
    void validate() const;
};

/// Component-wise box bounds on inputs and limited outputs (strict min < max).
struct ConstraintBox {
    Vec u_min, u_max;   // m
    Vec z_min, z_max;   // m

    void validate(int m) const;
};

/// Baseline PI servo gains, u_bl = -K_I e_yI - K_P x_p.
struct ServoGains {
    Mat K_I;   // m x m, invertible
    Mat K_P;   // m x n_p

    Mat K_x() const {
        Mat k(K_I.rows(), K_I.cols() + K_P.cols());
        k << K_I, K_P;
        return k;
    }
};

/// Extended open-loop system over x = [e_yI; x_p] with the stacked limited
/// output y_lim = [u_bl; z_lim] = C_lim x and its box bounds.
struct ExtendedSystem {
    Mat A;          // n x n, n = n_p + m
    Mat B;          // n x 2m, columns [command/AW channel | control channel]
    Mat C_lim;      // 2m x n
    Vec y_lim_min;  // 2m
    Vec y_lim_max;  // 2m
    int m = 0;
    int n_p = 0;

    int n() const { return n_p + m; }

    /// Input map of the control channel, B [0; I].
    Mat B_u() const { return B.rightCols(m); }
    /// Input map of the command/AW channel, B [I; 0].
    Mat B_v() const { return B.leftCols(m); }
};

/// Assembles the extended system block structure from plant, gains, and box.
ExtendedSystem build_extended(const Plant& plant, const ServoGains& gains,
                              const ConstraintBox& box);

/// (y_reg, z_lim) at a given plant state and input.
std::pair<Vec, Vec> eval_outputs(const Plant& plant, const Vec& x_p, const Vec& u);

/// (h_min, h_max) = (y_min - C_lim x, C_lim x - y_max); both <= 0 iff satisfied.
std::pair<Vec, Vec> constraint_residuals(const ExtendedSystem& ext, const Vec& x);

/// PBH test: rank [A - lambda I, B] = n at every eigenvalue with Re >= -1e-9.
bool is_stabilizable(const Mat& a, const Mat& b);

} // namespace fcs::model
