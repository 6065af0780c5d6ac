#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fcs/design.hpp"
#include "fcs/model.hpp"

namespace fcs::margins {

/// Constant binary activity pattern over the 2m constraint channels (input
/// channels first). Analysis treats the switching matrix as frozen.
struct DeltaPattern {
    IVec flags;

    static DeltaPattern none(int channels);
    static DeltaPattern from_string(const std::string& bits);
    std::string to_string() const;
    bool any() const { return flags.size() > 0 && flags.maxCoeff() > 0; }
};

/// Effective loop pieces at the plant-input breakpoint for a frozen pattern:
/// u_out = -K_eff x, x' = A_eff x + B_u u_in. With no active channels this is
/// the plain baseline loop (K_x, A).
struct LoopGainModel {
    Mat K_eff;   // k x n
    Mat A_eff;   // n x n
    Mat B_u;     // n x k
    DeltaPattern pattern;

    int channels() const { return static_cast<int>(K_eff.rows()); }
};

struct FrequencyGrid {
    double omega_min = 1e-3;
    double omega_max = 1e4;
    int points = 4000;

    std::vector<double> omegas() const;
};

/// Loop-at-a-time classical margins for one channel (others closed).
struct SisoMargin {
    int channel = 0;
    double gm_lo_db = -std::numeric_limits<double>::infinity();
    double gm_hi_db = std::numeric_limits<double>::infinity();
    bool gm_lo_bounded = false;
    bool gm_hi_bounded = false;
    double pm_deg = std::numeric_limits<double>::infinity();
    bool pm_bounded = false;
    double pm_crossover_rad_s = 0.0;
    bool open_loop = false;
};

/// Singular-value margins plus diagnostics. The reported gain/phase envelope
/// combines the return-difference bound (alpha = min sigma_min(I + L)) and the
/// stability-robustness bound (beta = min sigma_min(I + L^{-1})); both raw
/// intervals are retained.
struct MarginReport {
    DeltaPattern pattern;
    std::vector<int> saturated;            // for saturation analysis reports
    bool stable = false;
    bool open_loop = false;                // no feedback path at all
    std::vector<int> open_channels;
    std::vector<int> winding_integrators;  // integrator states left unchecked

    double alpha = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    bool beta_defined = false;

    double gm_db_lo = 0.0, gm_db_hi = 0.0;
    bool gm_lo_bounded = false, gm_hi_bounded = false;
    double pm_deg = 0.0;

    double gm_alpha_db_lo = 0.0, gm_alpha_db_hi = 0.0;
    bool gm_alpha_hi_bounded = false;
    double gm_beta_db_lo = 0.0, gm_beta_db_hi = 0.0;
    bool gm_beta_lo_bounded = false;
    double pm_alpha_deg = 0.0, pm_beta_deg = 0.0;

    std::vector<SisoMargin> siso;
    FrequencyGrid grid;
};

/// One cell of the pattern-by-treatment comparison table.
struct TableRow {
    std::string scenario;               // "none", "u0", "u0+u1", ...
    std::vector<int> active_inputs;
    std::string treatment;              // "baseline" | "saturation" | "aw"
    std::optional<MarginReport> report;
    std::string note;
};

/// Frozen-pattern loop model; verifies the block-inverse shortcuts for the
/// pattern projections against the direct product.
LoopGainModel build_loop_model(const model::ExtendedSystem& ext, const model::ServoGains& gains,
                               const design::AugmentationDesign& dsn,
                               const DeltaPattern& pattern);

/// L(jw) = K_eff (jw I - A_eff)^{-1} B_u.
CMat loop_gain_at(const LoopGainModel& model, double omega);

/// Singular-value margins over the grid with local golden-section refinement.
MarginReport mimo_margins(const LoopGainModel& model, const FrequencyGrid& grid = {});

/// Classical margins of channel i with all other loops closed.
SisoMargin siso_margins(const LoopGainModel& model, int channel, const FrequencyGrid& grid = {});

/// Margins with the given input channels saturated: their feedback rows are
/// removed and their (now unchecked) integrator states leave the loop model.
MarginReport saturation_margins(const model::ExtendedSystem& ext, const model::ServoGains& gains,
                                const std::vector<int>& saturated,
                                const FrequencyGrid& grid = {});

/// Full comparison: {none, each single input, all inputs} x
/// {baseline, hard saturation, augmentation}.
std::vector<TableRow> table2_report(const model::ExtendedSystem& ext,
                                    const model::ServoGains& gains,
                                    const design::AugmentationDesign& dsn,
                                    const FrequencyGrid& grid = {});

} // namespace fcs::margins
