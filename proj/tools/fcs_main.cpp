#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fcs/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int fail(const std::string& code, const std::string& message) {
    json j;
    j["error"] = {{"code", code}, {"message", message}};
    std::cerr << j.dump(2) << std::endl;
    return 1;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out.good()) throw fcs::Error("io.open", "cannot open " + path.string() + " for writing");
    out << text << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained linear servo-control toolkit: LQR PI design, min-norm "
                 "barrier augmentation, closed-loop simulation, and MIMO margins"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string mode = "augmented";
    std::string delta_bits;
    double dt_override = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "study configuration (JSON)")->required();
        sub->add_option("-o,--output", out_path, "output file or directory");
    };

    auto* cmd_design = app.add_subcommand("design", "synthesize gains and augmentation data");
    add_common(cmd_design);

    auto* cmd_sim = app.add_subcommand("simulate", "closed-loop simulation over the schedule");
    add_common(cmd_sim);
    cmd_sim->add_option("--mode", mode, "baseline|saturation|augmented|awonly");
    cmd_sim->add_option("--dt", dt_override, "integration step override (s)");

    auto* cmd_margins = app.add_subcommand("margins", "singular-value margins for a pattern");
    add_common(cmd_margins);
    cmd_margins->add_option("--delta", delta_bits,
                            "constraint-activity bits, one per channel (inputs first)");

    auto* cmd_trade = app.add_subcommand("tradestudy",
                                         "three-controller comparison plus margin table");
    add_common(cmd_trade);
    cmd_trade->add_option("--dt", dt_override, "integration step override (s)");

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = fcs::study::load_config(config_path);
        if (dt_override > 0.0) cfg.sim.dt = dt_override;

        auto default_out = [&](const char* name) {
            fs::create_directories(cfg.output_dir);
            return cfg.output_dir / name;
        };

        if (cmd_design->parsed()) {
            const auto rec = fcs::study::run_design(cfg);
            const fs::path path = out_path.empty() ? default_out("design.json") : fs::path(out_path);
            write_file(path, fcs::study::design_record_to_json(rec));
            std::printf("design written to %s (CARE residual %.3e, closed loop %s)\n",
                        path.string().c_str(), rec.care_residual,
                        rec.closed_loop_hurwitz ? "Hurwitz" : "NOT Hurwitz");
        } else if (cmd_sim->parsed()) {
            const auto rec = fcs::study::run_design(cfg);
            const auto ext = fcs::model::build_extended(cfg.plant, rec.gains, cfg.box);
            fcs::simulate::SimConfig sc = cfg.sim;
            sc.mode = fcs::controller::mode_from_name(mode);
            const auto trace = fcs::simulate::run(ext, rec.dsn, rec.gains, cfg.schedule, sc);
            const fs::path path = out_path.empty() ? default_out("trace.csv") : fs::path(out_path);
            fcs::study::write_trace_csv(trace, cfg, path);
            const auto rep = fcs::simulate::analyze(trace, ext, cfg.sim.violation_tolerance);
            std::printf("trace written to %s (%lld samples)\n", path.string().c_str(),
                        static_cast<long long>(trace.samples()));
            for (int c = 0; c < 2 * ext.m; ++c)
                if (rep.violated[static_cast<size_t>(c)])
                    std::printf("  channel %d violated: max excursion %.6g\n", c,
                                rep.max_excursion[c]);
        } else if (cmd_margins->parsed()) {
            const auto rec = fcs::study::run_design(cfg);
            const auto ext = fcs::model::build_extended(cfg.plant, rec.gains, cfg.box);
            if (delta_bits.empty()) delta_bits.assign(static_cast<size_t>(2 * ext.m), '0');
            const auto pattern = fcs::margins::DeltaPattern::from_string(delta_bits);
            const auto model = fcs::margins::build_loop_model(ext, rec.gains, rec.dsn, pattern);
            const auto rep = fcs::margins::mimo_margins(model, cfg.grid);
            const fs::path path = out_path.empty() ? default_out("margins.json") : fs::path(out_path);
            write_file(path, fcs::study::margin_report_to_json(rep));
            if (rep.stable)
                std::printf("pattern %s: GM = [%.2f, %.2f] dB, PM = +-%.2f deg -> %s\n",
                            pattern.to_string().c_str(), rep.gm_db_lo, rep.gm_db_hi, rep.pm_deg,
                            path.string().c_str());
            else
                std::printf("pattern %s: closed loop unstable; margins undefined -> %s\n",
                            pattern.to_string().c_str(), path.string().c_str());
        } else if (cmd_trade->parsed()) {
            const fs::path dir = out_path.empty() ? cfg.output_dir / "tradestudy" : fs::path(out_path);
            const auto result = fcs::study::run_tradestudy(cfg, dir);
            std::printf("trade study written to %s\n", dir.string().c_str());
            for (size_t i = 0; i < result.modes.size(); ++i) {
                const auto& rep = result.violations[i];
                bool any = false;
                for (bool v : rep.violated) any = any || v;
                std::printf("  %-10s max windup %.4f, %s\n",
                            fcs::controller::mode_name(result.modes[i]),
                            rep.windup.maxCoeff(), any ? "CONSTRAINTS VIOLATED" : "constraints ok");
            }
        }
    } catch (const fcs::Error& e) {
        return fail(e.code(), e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
