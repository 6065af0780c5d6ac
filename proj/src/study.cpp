#include "fcs/study.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>
#include <thread>

#include <Eigen/SVD>
#include <json.hpp>

#include "fcs/numerics.hpp"

namespace fcs::study {

using nlohmann::json;

namespace {

Mat mat_from_json(const json& j, const std::string& where) {
    require(j.is_array() && !j.empty() && j.front().is_array(), "config.schema",
            where + ": expected an array of row arrays");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<size_t>(r)];
        require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, "config.schema",
                where + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            require(row[static_cast<size_t>(c)].is_number(), "config.schema",
                    where + ": non-numeric entry");
            m(r, c) = row[static_cast<size_t>(c)].get<double>();
        }
    }
    return m;
}

Vec vec_from_json(const json& j, const std::string& where) {
    require(j.is_array(), "config.schema", where + ": expected an array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        require(j[static_cast<size_t>(i)].is_number(), "config.schema",
                where + ": non-numeric entry");
        v[i] = j[static_cast<size_t>(i)].get<double>();
    }
    return v;
}

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

std::vector<std::string> names_from_json(const json& j, const std::string& where, size_t count) {
    require(j.is_array() && j.size() == count, "config.schema",
            where + ": expected " + std::to_string(count) + " entries");
    std::vector<std::string> out;
    for (const auto& e : j) out.push_back(e.get<std::string>());
    return out;
}

const json& at(const json& j, const std::string& key, const std::string& where) {
    require(j.contains(key), "config.schema", where + ": missing field '" + key + "'");
    return j.at(key);
}

Vec convert_channels(const Vec& v, const std::vector<std::string>& units,
                     const std::string& where) {
    require(static_cast<size_t>(v.size()) == units.size(), "config.schema",
            where + ": unit list length");
    Vec out = v;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out[i] *= unit_to_internal(units[static_cast<size_t>(i)]);
    return out;
}

} // namespace

double unit_to_internal(const std::string& unit) {
    if (unit == "rad" || unit == "rad/s" || unit == "g" || unit == "g*s" || unit == "" ||
        unit == "1" || unit == "s")
        return 1.0;
    if (unit == "deg" || unit == "deg/s") return kPi / 180.0;
    throw Error("config.unit", "unrecognized unit '" + unit + "'");
}

std::string display_unit(const std::string& unit) {
    if (unit == "rad" || unit == "deg") return "deg";
    if (unit == "rad/s" || unit == "deg/s") return "deg/s";
    return unit.empty() ? "1" : unit;
}

StudyConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "config.io", "cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("config.parse", "config parse error in " + path.string() + ": " + e.what());
    }

    StudyConfig cfg;
    cfg.name = j.value("name", path.stem().string());

    const json& jp = at(j, "plant", "config");
    cfg.plant.A_p = mat_from_json(at(jp, "A_p", "plant"), "plant.A_p");
    cfg.plant.B_p = mat_from_json(at(jp, "B_p", "plant"), "plant.B_p");
    cfg.plant.C_reg = mat_from_json(at(jp, "C_reg", "plant"), "plant.C_reg");
    cfg.plant.D_reg = mat_from_json(at(jp, "D_reg", "plant"), "plant.D_reg");
    cfg.plant.C_lim = mat_from_json(at(jp, "C_lim", "plant"), "plant.C_lim");

    const auto n_p = static_cast<size_t>(cfg.plant.A_p.rows());
    const auto m = static_cast<size_t>(cfg.plant.B_p.cols());
    cfg.plant.state_names = names_from_json(at(jp, "states", "plant"), "plant.states", n_p);
    cfg.plant.input_names = names_from_json(at(jp, "inputs", "plant"), "plant.inputs", m);
    cfg.plant.regulated_names =
        names_from_json(at(jp, "regulated_outputs", "plant"), "plant.regulated_outputs", m);
    cfg.plant.limited_names =
        names_from_json(at(jp, "limited_outputs", "plant"), "plant.limited_outputs", m);
    cfg.state_units = names_from_json(at(jp, "state_units", "plant"), "plant.state_units", n_p);
    cfg.input_units = names_from_json(at(jp, "input_units", "plant"), "plant.input_units", m);
    cfg.regulated_units =
        names_from_json(at(jp, "regulated_units", "plant"), "plant.regulated_units", m);
    cfg.limited_units =
        names_from_json(at(jp, "limited_units", "plant"), "plant.limited_units", m);
    cfg.plant.validate();

    const json& jc = at(j, "constraints", "config");
    const auto u_units = names_from_json(at(jc, "u_units", "constraints"), "constraints.u_units", m);
    const auto z_units = names_from_json(at(jc, "z_units", "constraints"), "constraints.z_units", m);
    cfg.box.u_min = convert_channels(vec_from_json(at(jc, "u_min", "constraints"), "constraints.u_min"),
                                     u_units, "constraints.u_min");
    cfg.box.u_max = convert_channels(vec_from_json(at(jc, "u_max", "constraints"), "constraints.u_max"),
                                     u_units, "constraints.u_max");
    cfg.box.z_min = convert_channels(vec_from_json(at(jc, "z_min", "constraints"), "constraints.z_min"),
                                     z_units, "constraints.z_min");
    cfg.box.z_max = convert_channels(vec_from_json(at(jc, "z_max", "constraints"), "constraints.z_max"),
                                     z_units, "constraints.z_max");
    cfg.box.validate(static_cast<int>(m));

    const json& jl = at(j, "lqr", "config");
    const auto n_ext = static_cast<Eigen::Index>(n_p + m);
    if (jl.contains("Q_diag")) {
        const Vec d = vec_from_json(jl.at("Q_diag"), "lqr.Q_diag");
        require(d.size() == n_ext, "config.schema",
                "lqr.Q_diag: expected " + std::to_string(n_ext) + " extended-state weights");
        cfg.Q = d.asDiagonal();
    } else {
        cfg.Q = mat_from_json(at(jl, "Q", "lqr"), "lqr.Q");
    }
    if (jl.contains("R_diag")) {
        const Vec d = vec_from_json(jl.at("R_diag"), "lqr.R_diag");
        require(d.size() == static_cast<Eigen::Index>(m), "config.schema",
                "lqr.R_diag: expected one weight per input");
        cfg.R = d.asDiagonal();
    } else {
        cfg.R = mat_from_json(at(jl, "R", "lqr"), "lqr.R");
    }

    const json& jb = at(j, "cbf", "config");
    if (jb.contains("alpha")) {
        const Vec alpha = vec_from_json(jb.at("alpha"), "cbf.alpha");
        require(alpha.size() == static_cast<Eigen::Index>(2 * m), "config.schema",
                "cbf.alpha: expected 2m slopes (input channels first)");
        require((alpha.array() > 0.0).all(), "config.schema", "cbf.alpha: slopes must be positive");
        cfg.poly = design::PolynomialSpec::from_alpha(alpha);
    } else {
        const json& jr = at(jb, "roots", "cbf");
        require(jr.is_array() && jr.size() == 2 * m, "config.schema",
                "cbf.roots: expected 2m root lists");
        for (const auto& lst : jr) {
            std::vector<double> roots;
            for (const auto& r : lst) roots.push_back(r.get<double>());
            cfg.poly.roots.push_back(std::move(roots));
        }
    }

    const json& js = at(j, "schedule", "config");
    cfg.schedule.horizon = at(js, "horizon", "schedule").get<double>();
    const auto cmd_units =
        names_from_json(at(js, "command_units", "schedule"), "schedule.command_units", m);
    for (const auto& step : at(js, "steps", "schedule")) {
        simulate::CommandSchedule::Entry e;
        e.t_start = at(step, "t", "schedule.steps").get<double>();
        e.y_cmd = convert_channels(vec_from_json(at(step, "y_cmd", "schedule.steps"),
                                                 "schedule.steps.y_cmd"),
                                   cmd_units, "schedule.steps.y_cmd");
        cfg.schedule.entries.push_back(std::move(e));
    }

    if (j.contains("sim")) {
        const json& jm = j.at("sim");
        cfg.sim.dt = jm.value("dt", 1e-3);
        cfg.sim.violation_tolerance = jm.value("violation_tolerance", 0.01);
        if (jm.contains("x0")) cfg.sim.x0 = vec_from_json(jm.at("x0"), "sim.x0");
    }
    require(cfg.sim.dt > 0.0, "config.schema", "sim.dt must be positive");

    if (j.contains("margins")) {
        const json& jm = j.at("margins");
        cfg.grid.omega_min = jm.value("omega_min", 1e-3);
        cfg.grid.omega_max = jm.value("omega_max", 1e4);
        cfg.grid.points = jm.value("points", 4000);
    }
    cfg.output_dir = j.value("output_dir", std::string("."));
    return cfg;
}

DesignRecord run_design(const StudyConfig& cfg) {
    DesignRecord rec;
    rec.gains = design::lqr_pi_design(cfg.plant, cfg.Q, cfg.R);
    const auto ext = model::build_extended(cfg.plant, rec.gains, cfg.box);
    rec.dsn = design::build_sensitivities(ext, rec.gains, cfg.poly);

    Mat a = ext.A;
    Mat b = ext.B_u();
    const auto care = numerics::care_solve(a, b, cfg.Q, cfg.R);
    rec.care_residual = care.residual;
    rec.closed_loop_hurwitz = numerics::is_hurwitz(Mat(a - b * care.k));

    Eigen::JacobiSVD<Mat> svd(rec.gains.K_I);
    rec.K_I_condition = svd.singularValues().maxCoeff() / svd.singularValues().minCoeff();
    return rec;
}

std::string design_record_to_json(const DesignRecord& rec) {
    json j;
    j["K_I"] = mat_to_json(rec.gains.K_I);
    j["K_P"] = mat_to_json(rec.gains.K_P);
    j["H_x"] = mat_to_json(rec.dsn.H_x);
    j["H_u"] = mat_to_json(rec.dsn.H_u);
    j["H_w"] = mat_to_json(rec.dsn.H_w);
    j["alpha_pi"] = vec_to_json(rec.dsn.alpha);
    j["relative_degrees"] = rec.dsn.relative_degrees;
    j["H_u_condition"] = rec.dsn.H_u_condition;
    j["K_I_condition"] = rec.K_I_condition;
    j["care_residual"] = rec.care_residual;
    j["closed_loop_hurwitz"] = rec.closed_loop_hurwitz;
    return j.dump(2);
}

DesignRecord design_record_from_json(const std::string& text) {
    const json j = json::parse(text);
    DesignRecord rec;
    rec.gains.K_I = mat_from_json(j.at("K_I"), "design.K_I");
    rec.gains.K_P = mat_from_json(j.at("K_P"), "design.K_P");
    rec.dsn.H_x = mat_from_json(j.at("H_x"), "design.H_x");
    rec.dsn.H_u = mat_from_json(j.at("H_u"), "design.H_u");
    rec.dsn.H_w = mat_from_json(j.at("H_w"), "design.H_w");
    rec.dsn.alpha = vec_from_json(j.at("alpha_pi"), "design.alpha_pi");
    rec.dsn.relative_degrees = j.at("relative_degrees").get<std::vector<int>>();
    rec.dsn.H_u_condition = j.at("H_u_condition").get<double>();
    rec.dsn.H_u_inv = rec.dsn.H_u.fullPivLu().inverse();
    rec.K_I_condition = j.at("K_I_condition").get<double>();
    rec.care_residual = j.at("care_residual").get<double>();
    rec.closed_loop_hurwitz = j.at("closed_loop_hurwitz").get<bool>();
    return rec;
}

namespace {

json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? json("inf") : json("-inf");
}

json margin_report_json(const margins::MarginReport& rep) {
    json j;
    j["pattern"] = rep.pattern.to_string();
    j["stable"] = rep.stable;
    j["open_loop"] = rep.open_loop;
    j["open_channels"] = rep.open_channels;
    j["winding_integrators"] = rep.winding_integrators;
    j["saturated"] = rep.saturated;
    if (rep.stable) {
        j["alpha"] = rep.alpha;
        j["beta"] = rep.beta_defined ? json(rep.beta) : json();
        j["gm_db"] = {finite_or_string(rep.gm_db_lo), finite_or_string(rep.gm_db_hi)};
        j["pm_deg"] = rep.pm_deg;
        j["gm_db_from_alpha"] = {finite_or_string(rep.gm_alpha_db_lo),
                                 finite_or_string(rep.gm_alpha_db_hi)};
        j["pm_deg_from_alpha"] = rep.pm_alpha_deg;
        if (rep.beta_defined) {
            j["gm_db_from_beta"] = {finite_or_string(rep.gm_beta_db_lo),
                                    finite_or_string(rep.gm_beta_db_hi)};
            j["pm_deg_from_beta"] = rep.pm_beta_deg;
        }
        json siso = json::array();
        for (const auto& s : rep.siso) {
            json e;
            e["channel"] = s.channel;
            e["open_loop"] = s.open_loop;
            e["gm_db"] = {s.gm_lo_bounded ? json(s.gm_lo_db) : json("-inf"),
                          s.gm_hi_bounded ? json(s.gm_hi_db) : json("inf")};
            e["pm_deg"] = s.pm_bounded ? json(s.pm_deg) : json("inf");
            if (s.pm_bounded) e["pm_crossover_rad_s"] = s.pm_crossover_rad_s;
            siso.push_back(std::move(e));
        }
        j["siso"] = std::move(siso);
    }
    j["grid"] = {{"min", rep.grid.omega_min}, {"max", rep.grid.omega_max},
                 {"points", rep.grid.points}};
    return j;
}

} // namespace

std::string margin_report_to_json(const margins::MarginReport& rep) {
    return margin_report_json(rep).dump(2);
}

std::string table_to_json(const std::vector<margins::TableRow>& rows,
                          const std::vector<std::string>& input_names) {
    json j = json::array();
    for (const auto& row : rows) {
        json e;
        std::string scenario = row.scenario;
        if (!row.active_inputs.empty()) {
            scenario.clear();
            for (int c : row.active_inputs) {
                if (!scenario.empty()) scenario += "+";
                scenario += c < static_cast<int>(input_names.size()) ? input_names[static_cast<size_t>(c)]
                                                                     : ("u" + std::to_string(c));
            }
        }
        e["scenario"] = scenario;
        e["active_inputs"] = row.active_inputs;
        e["treatment"] = row.treatment;
        e["note"] = row.note;
        if (row.report) e["margins"] = margin_report_json(*row.report);
        j.push_back(std::move(e));
    }
    return j.dump(2);
}

namespace {

// Emitted files carry angles in degrees regardless of how the channel was
// declared; internal values are radians.
double display_factor(const std::string& unit) {
    if (unit == "rad" || unit == "rad/s" || unit == "deg" || unit == "deg/s")
        return kDegPerRad;
    return 1.0;
}

void print_row(std::FILE* f, const std::vector<double>& vals) {
    for (size_t i = 0; i < vals.size(); ++i)
        std::fprintf(f, i == 0 ? "%.9g" : ",%.9g", vals[i]);
    std::fprintf(f, "\n");
}

struct Column {
    std::string label;
    std::function<double(Eigen::Index)> value;
};

void write_csv(const std::filesystem::path& path, const std::vector<Column>& cols,
               Eigen::Index samples) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    require(f != nullptr, "io.open", "cannot open " + path.string() + " for writing");
    for (size_t i = 0; i < cols.size(); ++i)
        std::fprintf(f, i == 0 ? "%s" : ",%s", cols[i].label.c_str());
    std::fprintf(f, "\n");
    std::vector<double> row(cols.size());
    for (Eigen::Index k = 0; k < samples; ++k) {
        for (size_t i = 0; i < cols.size(); ++i) row[i] = cols[i].value(k);
        print_row(f, row);
    }
    std::fclose(f);
}

} // namespace

void write_trace_csv(const simulate::SimTrace& trace, const StudyConfig& cfg,
                     const std::filesystem::path& path) {
    const auto& p = cfg.plant;
    const int m = p.num_inputs();
    const int n_p = p.num_states();

    std::vector<Column> cols;
    cols.push_back({"t_s", [&](Eigen::Index k) { return trace.t[k]; }});
    for (int i = 0; i < n_p; ++i) {
        const double f = display_factor(cfg.state_units[static_cast<size_t>(i)]);
        cols.push_back({p.state_names[static_cast<size_t>(i)] + "_" +
                            display_unit(cfg.state_units[static_cast<size_t>(i)]),
                        [&trace, i, f](Eigen::Index k) { return trace.x_p(k, i) * f; }});
    }
    for (int i = 0; i < m; ++i)
        cols.push_back({"eI_" + p.regulated_names[static_cast<size_t>(i)],
                        [&trace, i](Eigen::Index k) { return trace.e_yI(k, i); }});
    auto input_cols = [&](const char* tag, const Mat& src) {
        for (int i = 0; i < m; ++i) {
            const double f = display_factor(cfg.input_units[static_cast<size_t>(i)]);
            cols.push_back({std::string(tag) + "_" + p.input_names[static_cast<size_t>(i)] + "_" +
                                display_unit(cfg.input_units[static_cast<size_t>(i)]),
                            [&src, i, f](Eigen::Index k) { return src(k, i) * f; }});
        }
    };
    input_cols("u_bl", trace.u_bl);
    input_cols("u", trace.u_total);
    input_cols("w", trace.w);
    for (int i = 0; i < m; ++i)
        cols.push_back({"v_" + p.regulated_names[static_cast<size_t>(i)],
                        [&trace, i](Eigen::Index k) { return trace.v(k, i); }});
    for (int i = 0; i < m; ++i) {
        const double f = display_factor(cfg.regulated_units[static_cast<size_t>(i)]);
        cols.push_back({"y_" + p.regulated_names[static_cast<size_t>(i)] + "_" +
                            display_unit(cfg.regulated_units[static_cast<size_t>(i)]),
                        [&trace, i, f](Eigen::Index k) { return trace.y_reg(k, i) * f; }});
        cols.push_back({"ycmd_" + p.regulated_names[static_cast<size_t>(i)] + "_" +
                            display_unit(cfg.regulated_units[static_cast<size_t>(i)]),
                        [&trace, i, f](Eigen::Index k) { return trace.y_cmd(k, i) * f; }});
    }
    for (int i = 0; i < m; ++i) {
        const double f = display_factor(cfg.limited_units[static_cast<size_t>(i)]);
        cols.push_back({"z_" + p.limited_names[static_cast<size_t>(i)] + "_" +
                            display_unit(cfg.limited_units[static_cast<size_t>(i)]),
                        [&trace, i, f](Eigen::Index k) { return trace.z_lim(k, i) * f; }});
    }
    for (int i = 0; i < 2 * m; ++i)
        cols.push_back({"delta_" + std::to_string(i),
                        [&trace, i](Eigen::Index k) { return static_cast<double>(trace.delta(k, i)); }});

    write_csv(path, cols, trace.samples());
}

void write_panel_csvs(const simulate::SimTrace& trace, const StudyConfig& cfg,
                      const std::string& prefix, const std::filesystem::path& dir) {
    const auto& p = cfg.plant;
    const int m = p.num_inputs();
    const int n_p = p.num_states();

    {   // operational limits panel: physical inputs with their bounds
        std::vector<Column> cols{{"t_s", [&](Eigen::Index k) { return trace.t[k]; }}};
        for (int i = 0; i < m; ++i) {
            const double f = display_factor(cfg.input_units[static_cast<size_t>(i)]);
            const std::string unit = display_unit(cfg.input_units[static_cast<size_t>(i)]);
            cols.push_back({p.input_names[static_cast<size_t>(i)] + "_" + unit,
                            [&trace, i, f](Eigen::Index k) { return trace.u_total(k, i) * f; }});
            const double lo = cfg.box.u_min[i] * f, hi = cfg.box.u_max[i] * f;
            cols.push_back({p.input_names[static_cast<size_t>(i)] + "_min_" + unit,
                            [lo](Eigen::Index) { return lo; }});
            cols.push_back({p.input_names[static_cast<size_t>(i)] + "_max_" + unit,
                            [hi](Eigen::Index) { return hi; }});
        }
        write_csv(dir / (prefix + "_inputs.csv"), cols, trace.samples());
    }
    {   // limited outputs with bounds
        std::vector<Column> cols{{"t_s", [&](Eigen::Index k) { return trace.t[k]; }}};
        for (int i = 0; i < m; ++i) {
            const double f = display_factor(cfg.limited_units[static_cast<size_t>(i)]);
            const std::string unit = display_unit(cfg.limited_units[static_cast<size_t>(i)]);
            cols.push_back({p.limited_names[static_cast<size_t>(i)] + "_" + unit,
                            [&trace, i, f](Eigen::Index k) { return trace.z_lim(k, i) * f; }});
            const double lo = cfg.box.z_min[i] * f, hi = cfg.box.z_max[i] * f;
            cols.push_back({p.limited_names[static_cast<size_t>(i)] + "_min_" + unit,
                            [lo](Eigen::Index) { return lo; }});
            cols.push_back({p.limited_names[static_cast<size_t>(i)] + "_max_" + unit,
                            [hi](Eigen::Index) { return hi; }});
        }
        write_csv(dir / (prefix + "_outputs.csv"), cols, trace.samples());
    }
    {   // aircraft states
        std::vector<Column> cols{{"t_s", [&](Eigen::Index k) { return trace.t[k]; }}};
        for (int i = 0; i < n_p; ++i) {
            const double f = display_factor(cfg.state_units[static_cast<size_t>(i)]);
            cols.push_back({p.state_names[static_cast<size_t>(i)] + "_" +
                                display_unit(cfg.state_units[static_cast<size_t>(i)]),
                            [&trace, i, f](Eigen::Index k) { return trace.x_p(k, i) * f; }});
        }
        write_csv(dir / (prefix + "_states.csv"), cols, trace.samples());
    }
    {   // integrator states
        std::vector<Column> cols{{"t_s", [&](Eigen::Index k) { return trace.t[k]; }}};
        for (int i = 0; i < m; ++i)
            cols.push_back({"eI_" + p.regulated_names[static_cast<size_t>(i)],
                            [&trace, i](Eigen::Index k) { return trace.e_yI(k, i); }});
        write_csv(dir / (prefix + "_integrators.csv"), cols, trace.samples());
    }
}

namespace {

int thread_cap() {
    if (const char* env = std::getenv("FCS_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace

TradeStudyResult run_tradestudy(const StudyConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const DesignRecord rec = run_design(cfg);
    const auto ext = model::build_extended(cfg.plant, rec.gains, cfg.box);

    TradeStudyResult result;
    result.modes = {controller::Mode::Baseline, controller::Mode::HardSaturation,
                    controller::Mode::Augmented};

    std::vector<simulate::SimTrace> traces(result.modes.size());
    const auto cap = static_cast<size_t>(thread_cap());
    for (size_t base = 0; base < result.modes.size(); base += cap) {
        std::vector<std::future<simulate::SimTrace>> wave;
        const size_t end = std::min(base + cap, result.modes.size());
        for (size_t i = base; i < end; ++i)
            wave.push_back(std::async(std::launch::async, [&, i]() {
                simulate::SimConfig sc = cfg.sim;
                sc.mode = result.modes[i];
                return simulate::run(ext, rec.dsn, rec.gains, cfg.schedule, sc);
            }));
        for (size_t i = base; i < end; ++i) traces[i] = wave[i - base].get();
    }

    for (size_t i = 0; i < result.modes.size(); ++i) {
        result.violations.push_back(
            simulate::analyze(traces[i], ext, cfg.sim.violation_tolerance));
        const std::string prefix = controller::mode_name(result.modes[i]);
        write_trace_csv(traces[i], cfg, out_dir / (prefix + "_trace.csv"));
        write_panel_csvs(traces[i], cfg, prefix, out_dir);
    }

    result.table = margins::table2_report(ext, rec.gains, rec.dsn, cfg.grid);

    std::ofstream design_out(out_dir / "design.json");
    design_out << design_record_to_json(rec) << "\n";
    std::ofstream summary(out_dir / "summary.json");
    summary << tradestudy_summary_json(cfg, result) << "\n";
    return result;
}

std::string tradestudy_summary_json(const StudyConfig& cfg, const TradeStudyResult& result) {
    json j;
    j["study"] = cfg.name;
    json runs = json::array();
    for (size_t i = 0; i < result.modes.size(); ++i) {
        const auto& rep = result.violations[i];
        json r;
        r["mode"] = controller::mode_name(result.modes[i]);
        r["max_excursion"] = vec_to_json(rep.max_excursion);
        r["u_total_excursion"] = vec_to_json(rep.u_total_excursion);
        r["windup"] = vec_to_json(rep.windup);
        r["violated"] = rep.violated;
        json fv = json::array();
        for (const auto& t : rep.first_violation) fv.push_back(t ? json(*t) : json());
        r["first_violation_s"] = std::move(fv);
        runs.push_back(std::move(r));
    }
    j["runs"] = std::move(runs);
    j["margin_table"] = json::parse(table_to_json(result.table, cfg.plant.input_names));
    return j.dump(2);
}

} // namespace fcs::study
