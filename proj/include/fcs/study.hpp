#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fcs/margins.hpp"
#include "fcs/simulate.hpp"

namespace fcs::study {

/// Everything a study needs, converted to internal units (rad, s, g) at load.
/// The declared per-channel unit strings are kept for display conversion on
/// emitted files.
struct StudyConfig {
    std::string name;
    model::Plant plant;
    model::ConstraintBox box;
    Mat Q;   // extended-state weights, [e_yI; x_p]
    Mat R;   // input weights
    design::PolynomialSpec poly;
    simulate::CommandSchedule schedule;
    simulate::SimConfig sim;
    margins::FrequencyGrid grid;

    std::vector<std::string> state_units;
    std::vector<std::string> input_units;
    std::vector<std::string> regulated_units;
    std::vector<std::string> limited_units;

    std::filesystem::path output_dir = ".";   // default sink for emitted files
};

/// Factor converting a declared unit to the internal frame (deg -> rad etc.).
/// Unknown unit strings are rejected.
double unit_to_internal(const std::string& unit);

/// Display name of a unit after internal conversion ("deg" stays "deg" in
/// emitted files; internal radians convert back on output).
std::string display_unit(const std::string& unit);

StudyConfig load_config(const std::filesystem::path& path);

/// Offline design bundle produced by `fcs design`.
struct DesignRecord {
    model::ServoGains gains;
    design::AugmentationDesign dsn;
    double care_residual = 0.0;
    double K_I_condition = 0.0;
    bool closed_loop_hurwitz = false;
};

DesignRecord run_design(const StudyConfig& cfg);

std::string design_record_to_json(const DesignRecord& rec);
DesignRecord design_record_from_json(const std::string& text);

std::string margin_report_to_json(const margins::MarginReport& rep);
std::string table_to_json(const std::vector<margins::TableRow>& rows,
                          const std::vector<std::string>& input_names);

/// Trace CSV with angle channels converted to degrees (documented in the
/// header row), 9 significant digits, one row per step.
void write_trace_csv(const simulate::SimTrace& trace, const StudyConfig& cfg,
                     const std::filesystem::path& path);

/// Plot-ready per-panel series (operational limits, states, integrators).
void write_panel_csvs(const simulate::SimTrace& trace, const StudyConfig& cfg,
                      const std::string& prefix, const std::filesystem::path& dir);

struct TradeStudyResult {
    std::vector<controller::Mode> modes;
    std::vector<simulate::ViolationReport> violations;
    std::vector<margins::TableRow> table;
};

/// Runs the three-controller comparison plus the margin table; emits CSVs and
/// summary.json under `out_dir`. Parallelism is capped by FCS_THREADS.
TradeStudyResult run_tradestudy(const StudyConfig& cfg, const std::filesystem::path& out_dir);

std::string tradestudy_summary_json(const StudyConfig& cfg, const TradeStudyResult& result);

} // namespace fcs::study
