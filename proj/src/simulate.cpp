#include "fcs/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace fcs::simulate {

const Vec& CommandSchedule::command_at(double t) const {
    require(!entries.empty(), "simulate.empty_schedule", "schedule has no entries");
    size_t lo = 0;
    for (size_t i = entries.size(); i-- > 0;) {
        if (entries[i].t_start <= t + 1e-12) {
            lo = i;
            break;
        }
    }
    return entries[lo].y_cmd;
}

void CommandSchedule::validate(int m, double dt) const {
    require(!entries.empty(), "simulate.empty_schedule", "schedule has no entries");
    require(std::abs(entries.front().t_start) < 1e-12, "simulate.schedule_start",
            "schedule must start at t = 0");
    require(horizon > 0.0, "simulate.horizon", "schedule horizon must be positive");
    double prev = -1.0;
    for (const auto& e : entries) {
        require(e.y_cmd.size() == m, "simulate.dim", "schedule command size");
        require(e.t_start > prev, "simulate.schedule_order",
                "schedule times must be strictly increasing");
        const double steps = e.t_start / dt;
        require(std::abs(steps - std::round(steps)) < 1e-6, "simulate.schedule_grid",
                "schedule time " + std::to_string(e.t_start) +
                    " is not a multiple of dt = " + std::to_string(dt));
        prev = e.t_start;
    }
}

namespace {

Vec closed_loop_rhs(const model::ExtendedSystem& ext, const design::AugmentationDesign& dsn,
                    const model::ServoGains& gains, controller::Mode mode, const Vec& x,
                    const Vec& y_cmd) {
    const auto d = controller::decide(mode, dsn, ext, gains, x, y_cmd);
    Vec input(2 * ext.m);
    input << d.v - y_cmd, d.u_total;
    return ext.A * x + ext.B * input;
}

} // namespace

Vec step(const model::ExtendedSystem& ext, const design::AugmentationDesign& dsn,
         const model::ServoGains& gains, controller::Mode mode, const Vec& x, const Vec& y_cmd,
         double dt) {
    require(dt > 0.0, "simulate.dt", "step: dt must be positive");
    auto rhs = [&](double, const Vec& xs) {
        return closed_loop_rhs(ext, dsn, gains, mode, xs, y_cmd);
    };
    return rk4_step(rhs, x, 0.0, dt);
}

SimTrace run(const model::ExtendedSystem& ext, const design::AugmentationDesign& dsn,
             const model::ServoGains& gains, const CommandSchedule& schedule,
             const SimConfig& cfg) {
    require(cfg.dt > 0.0, "simulate.dt", "run: dt must be positive");
    schedule.validate(ext.m, cfg.dt);
    const int m = ext.m;
    const int n_p = ext.n_p;

    Vec x = cfg.x0.size() == 0 ? Vec(Vec::Zero(ext.n())) : cfg.x0;
    require(x.size() == ext.n(), "simulate.dim", "run: x0 size");

    const auto steps = static_cast<Eigen::Index>(std::floor(schedule.horizon / cfg.dt + 1e-9));
    const Eigen::Index samples = steps + 1;

    SimTrace tr;
    tr.t.resize(samples);
    tr.x_p.resize(samples, n_p);
    tr.e_yI.resize(samples, m);
    tr.u_bl.resize(samples, m);
    tr.v.resize(samples, m);
    tr.w.resize(samples, m);
    tr.u_total.resize(samples, m);
    tr.y_reg.resize(samples, m);
    tr.z_lim.resize(samples, m);
    tr.y_cmd.resize(samples, m);
    tr.delta.resize(samples, 2 * m);

    const Mat c_reg = ext.A.topRightCorner(m, n_p);
    const Mat d_reg = ext.B.topRightCorner(m, m);
    const Mat c_lim_p = ext.C_lim.bottomRightCorner(m, n_p);

    for (Eigen::Index k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        require(x.allFinite(), "simulate.diverged",
                "run: state diverged (non-finite) at t = " + std::to_string(t));
        const Vec& y_cmd = schedule.command_at(t);
        const auto d = controller::decide(cfg.mode, dsn, ext, gains, x, y_cmd);

        tr.t[k] = t;
        tr.e_yI.row(k) = x.head(m);
        tr.x_p.row(k) = x.tail(n_p);
        tr.u_bl.row(k) = d.u_bl;
        tr.v.row(k) = d.v;
        tr.w.row(k) = d.w;
        tr.u_total.row(k) = d.u_total;
        tr.y_reg.row(k) = c_reg * x.tail(n_p) + d_reg * d.u_total;
        tr.z_lim.row(k) = c_lim_p * x.tail(n_p);
        tr.y_cmd.row(k) = y_cmd;
        tr.delta.row(k) = d.delta;

        if (k < steps) x = step(ext, dsn, gains, cfg.mode, x, y_cmd, cfg.dt);
    }
    return tr;
}

ViolationReport analyze(const SimTrace& trace, const model::ExtendedSystem& ext,
                        double violation_tolerance) {
    const int m = ext.m;
    const Eigen::Index n_samples = trace.samples();
    const int channels = 2 * m;

    ViolationReport rep;
    rep.max_excursion = Vec::Zero(channels);
    rep.first_violation.assign(channels, std::nullopt);
    rep.violated.assign(channels, false);
    rep.windup = Vec::Zero(m);
    rep.u_total_excursion = Vec::Zero(m);

    const Vec range = ext.y_lim_max - ext.y_lim_min;

    for (Eigen::Index k = 0; k < n_samples; ++k) {
        for (int c = 0; c < channels; ++c) {
            const double y = c < m ? trace.u_bl(k, c) : trace.z_lim(k, c - m);
            const double exc =
                std::max({0.0, y - ext.y_lim_max[c], ext.y_lim_min[c] - y});
            rep.max_excursion[c] = std::max(rep.max_excursion[c], exc);
            if (exc > violation_tolerance * range[c] && !rep.first_violation[c])
                rep.first_violation[c] = trace.t[k];
        }
        for (int i = 0; i < m; ++i) {
            rep.windup[i] = std::max(rep.windup[i], std::abs(trace.e_yI(k, i)));
            const double u = trace.u_total(k, i);
            rep.u_total_excursion[i] = std::max(
                {rep.u_total_excursion[i], u - ext.y_lim_max[i], ext.y_lim_min[i] - u});
        }
    }
    rep.u_total_excursion = rep.u_total_excursion.cwiseMax(0.0);
    for (int c = 0; c < channels; ++c)
        rep.violated[c] = rep.max_excursion[c] > violation_tolerance * range[c];
    return rep;
}

} // namespace fcs::simulate
