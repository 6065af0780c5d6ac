#include "fcs/margins.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/LU>

#include "fcs/numerics.hpp"

namespace fcs::margins {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStabilityMargin = 1e-9;
} // namespace

DeltaPattern DeltaPattern::none(int channels) {
    DeltaPattern p;
    p.flags = IVec::Zero(channels);
    return p;
}

DeltaPattern DeltaPattern::from_string(const std::string& bits) {
    DeltaPattern p;
    p.flags.resize(static_cast<Eigen::Index>(bits.size()));
    for (size_t i = 0; i < bits.size(); ++i) {
        require(bits[i] == '0' || bits[i] == '1', "margins.bad_pattern",
                "delta pattern must be a bit string, got '" + bits + "'");
        p.flags[static_cast<Eigen::Index>(i)] = bits[i] == '1' ? 1 : 0;
    }
    return p;
}

std::string DeltaPattern::to_string() const {
    std::string s(static_cast<size_t>(flags.size()), '0');
    for (Eigen::Index i = 0; i < flags.size(); ++i)
        if (flags[i]) s[static_cast<size_t>(i)] = '1';
    return s;
}

std::vector<double> FrequencyGrid::omegas() const {
    require(points >= 2 && omega_min > 0.0 && omega_max > omega_min, "margins.bad_grid",
            "frequency grid: need omega_max > omega_min > 0 and at least two points");
    std::vector<double> w(static_cast<size_t>(points));
    const double lmin = std::log10(omega_min);
    const double lmax = std::log10(omega_max);
    for (int i = 0; i < points; ++i)
        w[static_cast<size_t>(i)] =
            std::pow(10.0, lmin + (lmax - lmin) * static_cast<double>(i) / (points - 1));
    return w;
}

LoopGainModel build_loop_model(const model::ExtendedSystem& ext, const model::ServoGains& gains,
                               const design::AugmentationDesign& dsn,
                               const DeltaPattern& pattern) {
    const int m = ext.m;
    require(pattern.flags.size() == 2 * m, "margins.dim",
            "build_loop_model: pattern needs one flag per constraint channel");

    const Mat delta = pattern.flags.cast<double>().asDiagonal();
    Mat e_v = Mat::Zero(2 * m, m);
    e_v.topRows(m) = Mat::Identity(m, m);
    Mat e_w = Mat::Zero(2 * m, m);
    e_w.bottomRows(m) = Mat::Identity(m, m);

    const Mat delta_v = e_v.transpose() * dsn.H_u_inv * delta;
    const Mat delta_w = e_w.transpose() * dsn.H_u_inv * delta;

    // Block-inverse shortcuts for the projections; a disagreement means the
    // design data does not have the PI-servo block structure.
    const Mat d_reg = ext.B.topRightCorner(m, m);
    const Mat b_p = ext.B.bottomRightCorner(ext.n_p, m);
    Eigen::FullPivLU<Mat> hw_lu(dsn.H_w);
    require(hw_lu.isInvertible(), "margins.h_w_singular", "build_loop_model: H_w singular");
    const Mat hw_inv = hw_lu.inverse();
    Eigen::FullPivLU<Mat> ki_lu(gains.K_I);
    require(ki_lu.isInvertible(), "margins.k_i_singular", "build_loop_model: K_I singular");
    const Mat ki_inv = ki_lu.inverse();

    Mat dv_short(m, 2 * m);
    dv_short << -ki_inv, -ki_inv * (gains.K_I * d_reg + gains.K_P * b_p) * hw_inv;
    dv_short *= delta;
    Mat dw_short(m, 2 * m);
    dw_short << Mat::Zero(m, m), hw_inv;
    dw_short *= delta;
    const double scale = std::max(1.0, dsn.H_u_inv.norm());
    require((delta_v - dv_short).norm() <= 1e-10 * scale &&
                (delta_w - dw_short).norm() <= 1e-10 * scale,
            "margins.projection_mismatch",
            "build_loop_model: pattern projections disagree with their block forms");

    const Mat k_x = gains.K_x();
    const Mat coupling = dsn.H_u * e_w * k_x - dsn.H_x;

    LoopGainModel lg;
    lg.pattern = pattern;
    lg.K_eff = k_x - delta_w * coupling;
    lg.A_eff = ext.A + ext.B * e_v * delta_v * coupling;
    lg.B_u = ext.B_u();
    return lg;
}

CMat loop_gain_at(const LoopGainModel& model, double omega) {
    return model.K_eff.cast<std::complex<double>>() *
           numerics::freq_response_solve(model.A_eff, model.B_u, omega);
}

namespace {

// Golden-section minimization in log-frequency; f returns +inf on skipped points.
double refine_minimum(const std::function<double(double)>& f, double w_lo, double w_hi,
                      double f_best) {
    constexpr double gr = 0.6180339887498949;
    double a = std::log(w_lo), b = std::log(w_hi);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(std::exp(c)), fd = f(std::exp(d));
    for (int i = 0; i < 60 && (b - a) > 1e-11; ++i) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = f(std::exp(c));
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = f(std::exp(d));
        }
    }
    return std::min({f_best, fc, fd});
}

// Minimum of f over the grid with refinement around every local minimum.
double sweep_minimum(const std::function<double(double)>& f, const std::vector<double>& w) {
    std::vector<double> s(w.size());
    for (size_t i = 0; i < w.size(); ++i) s[i] = f(w[i]);
    double best = kInf;
    for (size_t i = 0; i < w.size(); ++i) {
        if (!std::isfinite(s[i])) continue;
        best = std::min(best, s[i]);
        const bool left_ok = i == 0 || s[i] <= s[i - 1];
        const bool right_ok = i + 1 == w.size() || s[i] <= s[i + 1];
        if (left_ok && right_ok && i > 0 && i + 1 < w.size())
            best = std::min(best, refine_minimum(f, w[i - 1], w[i + 1], s[i]));
    }
    return best;
}

struct SigmaProbe {
    const LoopGainModel& model;

    double alpha_at(double omega) const {
        try {
            const CMat l = loop_gain_at(model, omega);
            return numerics::min_singular_value(
                CMat(CMat::Identity(l.rows(), l.cols()) + l));
        } catch (const Error&) {
            return kInf;
        }
    }

    double beta_at(double omega) const {
        try {
            const CMat l = loop_gain_at(model, omega);
            Eigen::FullPivLU<CMat> lu(l);
            if (!lu.isInvertible()) return kInf;
            return numerics::min_singular_value(
                CMat(CMat::Identity(l.rows(), l.cols()) + lu.inverse()));
        } catch (const Error&) {
            return kInf;
        }
    }
};

void fill_envelope(MarginReport& rep) {
    const double a = rep.alpha;
    rep.gm_alpha_db_lo = 20.0 * std::log10(1.0 / (1.0 + a));
    rep.gm_alpha_hi_bounded = a < 1.0;
    rep.gm_alpha_db_hi = rep.gm_alpha_hi_bounded ? 20.0 * std::log10(1.0 / (1.0 - a)) : kInf;
    rep.pm_alpha_deg = 2.0 * std::asin(std::min(1.0, a / 2.0)) * kDegPerRad;

    double lo_lin = 1.0 / (1.0 + a);
    double hi_lin = rep.gm_alpha_hi_bounded ? 1.0 / (1.0 - a) : kInf;
    double pm = rep.pm_alpha_deg;

    if (rep.beta_defined) {
        const double b = rep.beta;
        rep.gm_beta_lo_bounded = b < 1.0;
        rep.gm_beta_db_lo = rep.gm_beta_lo_bounded ? 20.0 * std::log10(1.0 - b) : -kInf;
        rep.gm_beta_db_hi = 20.0 * std::log10(1.0 + b);
        rep.pm_beta_deg = 2.0 * std::asin(std::min(1.0, b / 2.0)) * kDegPerRad;
        lo_lin = std::min(lo_lin, rep.gm_beta_lo_bounded ? 1.0 - b : 0.0);
        hi_lin = std::max(hi_lin, 1.0 + b);
        pm = std::max(pm, rep.pm_beta_deg);
    }

    rep.gm_lo_bounded = lo_lin > 0.0;
    rep.gm_db_lo = rep.gm_lo_bounded ? 20.0 * std::log10(lo_lin) : -kInf;
    rep.gm_hi_bounded = std::isfinite(hi_lin);
    rep.gm_db_hi = rep.gm_hi_bounded ? 20.0 * std::log10(hi_lin) : kInf;
    rep.pm_deg = pm;
}

} // namespace

MarginReport mimo_margins(const LoopGainModel& model, const FrequencyGrid& grid) {
    MarginReport rep;
    rep.pattern = model.pattern;
    rep.grid = grid;

    for (int i = 0; i < model.channels(); ++i)
        if (model.K_eff.row(i).norm() == 0.0) rep.open_channels.push_back(i);
    rep.open_loop = static_cast<int>(rep.open_channels.size()) == model.channels();

    rep.stable =
        numerics::is_hurwitz(Mat(model.A_eff - model.B_u * model.K_eff), kStabilityMargin);
    if (!rep.stable) return rep;   // margins undefined for an unstable loop

    const auto w = grid.omegas();
    SigmaProbe probe{model};
    rep.alpha = sweep_minimum([&](double x) { return probe.alpha_at(x); }, w);

    const double beta = sweep_minimum([&](double x) { return probe.beta_at(x); }, w);
    rep.beta_defined = std::isfinite(beta);
    rep.beta = rep.beta_defined ? beta : std::numeric_limits<double>::quiet_NaN();

    fill_envelope(rep);

    for (int i = 0; i < model.channels(); ++i) rep.siso.push_back(siso_margins(model, i, grid));
    return rep;
}

namespace {

// Channel-i open-loop response with every other loop closed:
// g = L_ii - L_iJ (I + L_JJ)^{-1} L_Ji.
std::complex<double> broken_loop_at(const LoopGainModel& model, int channel, double omega) {
    const CMat l = loop_gain_at(model, omega);
    const int k = model.channels();
    if (k == 1) return l(0, 0);

    std::vector<int> others;
    others.reserve(static_cast<size_t>(k) - 1);
    for (int j = 0; j < k; ++j)
        if (j != channel) others.push_back(j);

    CMat l_jj(k - 1, k - 1);
    CVec l_ji(k - 1), l_ij(k - 1);
    for (int r = 0; r < k - 1; ++r) {
        l_ji[r] = l(others[static_cast<size_t>(r)], channel);
        l_ij[r] = l(channel, others[static_cast<size_t>(r)]);
        for (int c = 0; c < k - 1; ++c)
            l_jj(r, c) = l(others[static_cast<size_t>(r)], others[static_cast<size_t>(c)]);
    }
    const CMat closed = CMat::Identity(k - 1, k - 1) + l_jj;
    return l(channel, channel) - (l_ij.transpose() * closed.partialPivLu().solve(l_ji))(0, 0);
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 80 && (hi - lo) > 1e-13 * hi; ++i) {
        const double mid = std::sqrt(lo * hi);
        const double fm = f(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

} // namespace

SisoMargin siso_margins(const LoopGainModel& model, int channel, const FrequencyGrid& grid) {
    require(channel >= 0 && channel < model.channels(), "margins.bad_channel",
            "siso_margins: channel out of range");
    SisoMargin out;
    out.channel = channel;

    const auto w = grid.omegas();
    std::vector<std::complex<double>> g(w.size());
    double max_mag = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        try {
            g[i] = broken_loop_at(model, channel, w[i]);
        } catch (const Error&) {
            g[i] = std::complex<double>(0.0, 0.0);
        }
        max_mag = std::max(max_mag, std::abs(g[i]));
    }
    if (max_mag < 1e-12) {
        out.open_loop = true;
        return out;
    }

    auto eval = [&](double omega) { return broken_loop_at(model, channel, omega); };

    // Phase margin: unity-magnitude crossings.
    double best_pm = kInf;
    for (size_t i = 0; i + 1 < w.size(); ++i) {
        const double a = std::abs(g[i]) - 1.0;
        const double b = std::abs(g[i + 1]) - 1.0;
        if (a == 0.0 || a * b >= 0.0) continue;
        const double wc =
            bisect([&](double x) { return std::abs(eval(x)) - 1.0; }, w[i], w[i + 1]);
        const double phase = std::arg(eval(wc)) * kDegPerRad;
        const double pm = std::abs(std::remainder(180.0 + phase, 360.0));
        if (pm < best_pm) {
            best_pm = pm;
            out.pm_crossover_rad_s = wc;
        }
    }
    if (std::isfinite(best_pm)) {
        out.pm_deg = best_pm;
        out.pm_bounded = true;
    }

    // Gain margins: negative-real-axis crossings.
    double lo_best = 0.0, hi_best = kInf;
    for (size_t i = 0; i + 1 < w.size(); ++i) {
        if (g[i].imag() * g[i + 1].imag() >= 0.0) continue;
        const double wc =
            bisect([&](double x) { return eval(x).imag(); }, w[i], w[i + 1]);
        const double re = eval(wc).real();
        if (re >= -1e-300) continue;
        const double critical = -1.0 / re;   // gain that lands the crossing on -1
        if (critical < 1.0)
            lo_best = std::max(lo_best, critical);
        else if (critical > 1.0)
            hi_best = std::min(hi_best, critical);
    }
    if (lo_best > 0.0) {
        out.gm_lo_db = 20.0 * std::log10(lo_best);
        out.gm_lo_bounded = true;
    }
    if (std::isfinite(hi_best)) {
        out.gm_hi_db = 20.0 * std::log10(hi_best);
        out.gm_hi_bounded = true;
    }
    return out;
}

MarginReport saturation_margins(const model::ExtendedSystem& ext, const model::ServoGains& gains,
                                const std::vector<int>& saturated, const FrequencyGrid& grid) {
    const int m = ext.m;
    for (int c : saturated)
        require(c >= 0 && c < m, "margins.bad_channel",
                "saturation_margins: input channel out of range");

    std::vector<int> remaining;
    for (int i = 0; i < m; ++i)
        if (std::find(saturated.begin(), saturated.end(), i) == saturated.end())
            remaining.push_back(i);

    if (static_cast<int>(remaining.size()) == m) {
        LoopGainModel lg;
        lg.pattern = DeltaPattern::none(2 * m);
        lg.K_eff = gains.K_x();
        lg.A_eff = ext.A;
        lg.B_u = ext.B_u();
        return mimo_margins(lg, grid);
    }

    MarginReport rep;
    rep.grid = grid;
    rep.pattern = DeltaPattern::none(2 * m);
    rep.saturated = saturated;
    rep.open_channels = saturated;
    rep.winding_integrators = saturated;   // their error integrators run unchecked

    if (remaining.empty()) {
        rep.open_loop = true;
        rep.stable = numerics::is_hurwitz(ext.A, kStabilityMargin);
        return rep;
    }

    // Saturated channels leave the loop: drop their feedback rows and their
    // integrator states (exact origin poles unobservable through what remains).
    std::vector<int> keep;
    for (int i : remaining) keep.push_back(i);
    for (int i = 0; i < ext.n_p; ++i) keep.push_back(m + i);

    const auto r = static_cast<Eigen::Index>(remaining.size());
    const auto nk = static_cast<Eigen::Index>(keep.size());
    Mat a_red(nk, nk), b_red(nk, r), k_red(r, nk);
    const Mat k_x = gains.K_x();
    const Mat b_u = ext.B_u();
    for (Eigen::Index i = 0; i < nk; ++i) {
        for (Eigen::Index j = 0; j < nk; ++j)
            a_red(i, j) = ext.A(keep[static_cast<size_t>(i)], keep[static_cast<size_t>(j)]);
        for (Eigen::Index j = 0; j < r; ++j)
            b_red(i, j) = b_u(keep[static_cast<size_t>(i)], remaining[static_cast<size_t>(j)]);
    }
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < nk; ++j)
            k_red(i, j) = k_x(remaining[static_cast<size_t>(i)], keep[static_cast<size_t>(j)]);

    LoopGainModel lg;
    lg.pattern = DeltaPattern::none(2 * m);
    lg.K_eff = k_red;
    lg.A_eff = a_red;
    lg.B_u = b_red;

    MarginReport inner = mimo_margins(lg, grid);
    inner.pattern = rep.pattern;
    inner.saturated = rep.saturated;
    inner.open_channels = rep.open_channels;
    inner.winding_integrators = rep.winding_integrators;
    return inner;
}

std::vector<TableRow> table2_report(const model::ExtendedSystem& ext,
                                    const model::ServoGains& gains,
                                    const design::AugmentationDesign& dsn,
                                    const FrequencyGrid& grid) {
    const int m = ext.m;
    std::vector<std::pair<std::string, std::vector<int>>> scenarios;
    scenarios.emplace_back("none", std::vector<int>{});
    for (int i = 0; i < m; ++i) scenarios.emplace_back("u" + std::to_string(i), std::vector<int>{i});
    if (m > 1) {
        std::vector<int> all(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) all[static_cast<size_t>(i)] = i;
        std::string name = "u0";
        for (int i = 1; i < m; ++i) name += "+u" + std::to_string(i);
        scenarios.emplace_back(name, all);
    }

    std::vector<TableRow> rows;
    for (const auto& [name, active] : scenarios) {
        // Baseline: no enforcement at all; margins only meaningful with nothing active.
        TableRow base{name, active, "baseline", std::nullopt, ""};
        if (active.empty())
            base.report = mimo_margins(build_loop_model(ext, gains, dsn,
                                                        DeltaPattern::none(2 * m)), grid);
        else
            base.note = "n/a (constraint violated)";
        rows.push_back(std::move(base));

        TableRow sat{name, active, "saturation", std::nullopt, ""};
        sat.report = saturation_margins(ext, gains, active, grid);
        if (sat.report->open_loop)
            sat.note = "plant becomes open loop";
        else if (!sat.report->saturated.empty()) {
            sat.note = "saturated channel(s) open loop; integrator(s) wind up";
            if (!sat.report->stable) sat.note += "; remaining loop unstable";
        }
        rows.push_back(std::move(sat));

        TableRow aw{name, active, "aw", std::nullopt, ""};
        DeltaPattern p = DeltaPattern::none(2 * m);
        for (int c : active) p.flags[c] = 1;
        aw.report = mimo_margins(build_loop_model(ext, gains, dsn, p), grid);
        if (!aw.report->stable) aw.note = "closed loop unstable for this pattern";
        rows.push_back(std::move(aw));
    }
    return rows;
}

} // namespace fcs::margins
