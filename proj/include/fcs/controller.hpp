#pragma once

#include <utility>

#include "fcs/design.hpp"
#include "fcs/model.hpp"

namespace fcs::controller {

enum class Mode { Baseline, HardSaturation, Augmented, AwOnly };

const char* mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

/// One controller evaluation with full switching diagnostics.
struct ControlDecision {
    Vec u_bl;          // m, baseline command
    Vec v;             // m, integrator (AW) correction
    Vec w;             // m, plant-input correction; u_total - u_bl by definition
    Vec u_total;       // m
    IVec delta;        // 2m, active-channel flags for the mode's own enforcement
    Vec y_lim_minmax;  // 2m, active bound per channel (0 when inactive)
    Vec dH_min;        // 2m
    Vec dH_max;        // 2m
};

/// u_bl = -K_I e_yI - K_P x_p.
Vec baseline_control(const model::ServoGains& gains, const Vec& e_yI, const Vec& x_p);

/// Modified-constraint margins for an arbitrary barrier design: the min branch
/// is -H_x x - H_u base + alpha.*y_min, the max branch its mirror. `base` is
/// the open-loop input vector multiplying H_u ([-y_cmd; u_bl] for the PI servo).
std::pair<Vec, Vec> delta_h(const design::AugmentationDesign& dsn, const Vec& y_min,
                            const Vec& y_max, const Vec& x, const Vec& base);

/// PI-servo form over the extended system.
std::pair<Vec, Vec> delta_h(const design::AugmentationDesign& dsn,
                            const model::ExtendedSystem& ext, const Vec& x, const Vec& u_bl,
                            const Vec& y_cmd);

struct Augmentation {
    Vec v;       // top half of the decision vector
    Vec w;       // bottom half
    IVec delta;  // strict-inequality activation flags
};

/// Min-norm correction H_u^{-1}(max(0, dH_min) - max(0, dH_max)). Faults if a
/// channel reports both branches positive, which the bound geometry excludes.
Augmentation augment(const design::AugmentationDesign& dsn, const Vec& dH_min,
                     const Vec& dH_max);

/// Anti-windup-only law for input-constrained plants without limited-output
/// channels: the integrator correction that keeps u_bl inside [u_min, u_max].
/// Equals the v-component of the full augmentation with output limits removed.
Vec aw_only(const model::ServoGains& gains, const model::Plant& plant, const Vec& alpha_u,
            const Vec& x, const Vec& y_cmd, const Vec& u_min, const Vec& u_max);

/// Component-wise clamp of u into the input box.
Vec hard_saturate(const Vec& u, const model::ConstraintBox& box);

/// Dispatch over the four control laws, populating all diagnostics.
ControlDecision decide(Mode mode, const design::AugmentationDesign& dsn,
                       const model::ExtendedSystem& ext, const model::ServoGains& gains,
                       const Vec& x, const Vec& y_cmd);

/// Closed-loop matrices of the SISO PI loop while an input constraint rides its
/// bound: z = [x_p; e_yI], dz/dt = A_G z + b_G (alpha_u * u_bound). The
/// spectrum of A_G is the plant spectrum plus {-alpha_u}.
std::pair<Mat, Vec> siso_pi_constrained_matrices(const model::Plant& plant,
                                                 const model::ServoGains& gains,
                                                 double alpha_u);

} // namespace fcs::controller
