#pragma once

#include <vector>

#include "fcs/model.hpp"

namespace fcs::design {

/// Per-channel stable real roots of the constraint-shaping polynomials.
/// Channel i needs r_i roots, all strictly negative; the zero-order
/// coefficient prod(-lambda_ij) becomes that channel's barrier slope.
struct PolynomialSpec {
    std::vector<std::vector<double>> roots;   // one list per constraint channel

    /// Relative-degree-one shorthand: slope alpha_i maps to root -alpha_i.
    static PolynomialSpec from_alpha(const Vec& alpha);

    Vec alpha() const;   // prod(-lambda_ij) per channel
    void validate(const std::vector<int>& relative_degrees) const;
};

/// Offline augmentation data: sensitivity matrices and barrier slopes used by
/// the runtime controller and the margin analysis.
struct AugmentationDesign {
    std::vector<int> relative_degrees;   // 2m, input channels first
    Mat H_x;        // 2m x n
    Mat H_u;        // 2m x 2m
    Mat H_u_inv;    // 2m x 2m
    Mat H_w;        // m x m, lower-right block of H_u
    Vec alpha;      // 2m barrier slopes (diagonal of the slope matrix)
    double H_u_condition = 0.0;

    int num_channels() const { return static_cast<int>(alpha.size()); }
};

/// LQR PI servo gains from the extended system (control channel only).
/// Q weights the extended state [e_yI; x_p], R the physical inputs.
model::ServoGains lqr_pi_design(const model::Plant& plant, const Mat& q, const Mat& r);

/// Smallest k >= 1 with nonzero (C_lim)_i A^{k-1} B per channel. Input-channel
/// rows are relative degree one by construction; that is verified, not assumed.
std::vector<int> relative_degree(const model::ExtendedSystem& ext);

/// Builds H_x / H_u / slopes from the chosen polynomial roots and verifies the
/// analytic block structure of H_u against the row-by-row construction.
AugmentationDesign build_sensitivities(const model::ExtendedSystem& ext,
                                       const model::ServoGains& gains,
                                       const PolynomialSpec& poly);

} // namespace fcs::design
