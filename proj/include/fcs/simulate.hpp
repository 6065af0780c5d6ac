#pragma once

#include <optional>
#include <vector>

#include "fcs/controller.hpp"

namespace fcs::simulate {

/// Piecewise-constant command program; entries start at t = 0 and must line up
/// with the integration grid.
struct CommandSchedule {
    struct Entry {
        double t_start;
        Vec y_cmd;
    };
    std::vector<Entry> entries;
    double horizon = 0.0;

    const Vec& command_at(double t) const;
    void validate(int m, double dt) const;
};

struct SimConfig {
    double dt = 1e-3;
    Vec x0;                          // defaults to zero extended state
    controller::Mode mode = controller::Mode::Augmented;
    double violation_tolerance = 0.01;   // fraction of each channel's range
};

/// Uniformly sampled closed-loop history; one row per grid point.
struct SimTrace {
    Vec t;
    Mat x_p;        // N x n_p
    Mat e_yI;       // N x m
    Mat u_bl, v, w, u_total;   // N x m
    Mat y_reg;      // N x m
    Mat z_lim;      // N x m
    Mat y_cmd;      // N x m
    Eigen::MatrixXi delta;     // N x 2m

    Eigen::Index samples() const { return t.size(); }
};

/// Per-channel constraint outcome over a trace. Constraint channels are the
/// stacked limited outputs [u_bl; z_lim]; total-command excursions are kept
/// separately as diagnostics.
struct ViolationReport {
    Vec max_excursion;                         // 2m, >= 0, units of each channel
    std::vector<std::optional<double>> first_violation;   // 2m, beyond tolerance
    Vec windup;                                // m, max |e_yI| per integrator
    Vec u_total_excursion;                     // m, diagnostic
    std::vector<bool> violated;                // 2m, beyond tolerance
};

/// Classical fixed-step RK4 with the right-hand side re-evaluated per stage.
template <typename Rhs>
Vec rk4_step(const Rhs& rhs, const Vec& x, double t, double dt) {
    const Vec k1 = rhs(t, x);
    const Vec k2 = rhs(t + 0.5 * dt, Vec(x + 0.5 * dt * k1));
    const Vec k3 = rhs(t + 0.5 * dt, Vec(x + 0.5 * dt * k2));
    const Vec k4 = rhs(t + dt, Vec(x + dt * k3));
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// One closed-loop RK4 step of the extended dynamics under the given mode.
Vec step(const model::ExtendedSystem& ext, const design::AugmentationDesign& dsn,
         const model::ServoGains& gains, controller::Mode mode, const Vec& x, const Vec& y_cmd,
         double dt);

/// Full simulation over the schedule horizon.
SimTrace run(const model::ExtendedSystem& ext, const design::AugmentationDesign& dsn,
             const model::ServoGains& gains, const CommandSchedule& schedule,
             const SimConfig& cfg);

/// Scans a trace for bound excursions and integrator windup.
ViolationReport analyze(const SimTrace& trace, const model::ExtendedSystem& ext,
                        double violation_tolerance = 0.01);

} // namespace fcs::simulate
