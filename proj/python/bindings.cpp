#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fcs/numerics.hpp"
#include "fcs/study.hpp"

namespace py = pybind11;
using namespace fcs;

namespace {

py::dict violation_dict(const simulate::ViolationReport& rep) {
    py::dict d;
    d["max_excursion"] = rep.max_excursion;
    d["windup"] = rep.windup;
    d["u_total_excursion"] = rep.u_total_excursion;
    py::list violated;
    for (bool v : rep.violated) violated.append(v);
    d["violated"] = violated;
    return d;
}

py::dict margin_dict(const margins::MarginReport& rep) {
    py::dict d;
    d["pattern"] = rep.pattern.to_string();
    d["stable"] = rep.stable;
    d["open_loop"] = rep.open_loop;
    d["open_channels"] = rep.open_channels;
    if (rep.stable) {
        d["alpha"] = rep.alpha;
        if (rep.beta_defined) d["beta"] = rep.beta;
        d["gm_db"] = py::make_tuple(rep.gm_db_lo, rep.gm_db_hi);
        d["pm_deg"] = rep.pm_deg;
    }
    return d;
}

} // namespace

PYBIND11_MODULE(_fcs, mod) {
    mod.doc() = "Constrained linear servo-control toolkit: LQR PI design, min-norm "
                "barrier augmentation, closed-loop simulation, MIMO margins";

    py::register_exception<Error>(mod, "FcsError");

    py::class_<model::Plant>(mod, "Plant")
        .def(py::init<>())
        .def_readwrite("A_p", &model::Plant::A_p)
        .def_readwrite("B_p", &model::Plant::B_p)
        .def_readwrite("C_reg", &model::Plant::C_reg)
        .def_readwrite("D_reg", &model::Plant::D_reg)
        .def_readwrite("C_lim", &model::Plant::C_lim)
        .def("validate", &model::Plant::validate);

    py::class_<model::ConstraintBox>(mod, "ConstraintBox")
        .def(py::init<>())
        .def_readwrite("u_min", &model::ConstraintBox::u_min)
        .def_readwrite("u_max", &model::ConstraintBox::u_max)
        .def_readwrite("z_min", &model::ConstraintBox::z_min)
        .def_readwrite("z_max", &model::ConstraintBox::z_max);

    py::class_<model::ServoGains>(mod, "ServoGains")
        .def(py::init<>())
        .def_readwrite("K_I", &model::ServoGains::K_I)
        .def_readwrite("K_P", &model::ServoGains::K_P)
        .def("K_x", &model::ServoGains::K_x);

    py::class_<model::ExtendedSystem>(mod, "ExtendedSystem")
        .def_readonly("A", &model::ExtendedSystem::A)
        .def_readonly("B", &model::ExtendedSystem::B)
        .def_readonly("C_lim", &model::ExtendedSystem::C_lim)
        .def_readonly("y_lim_min", &model::ExtendedSystem::y_lim_min)
        .def_readonly("y_lim_max", &model::ExtendedSystem::y_lim_max);

    py::class_<design::AugmentationDesign>(mod, "AugmentationDesign")
        .def_readonly("H_x", &design::AugmentationDesign::H_x)
        .def_readonly("H_u", &design::AugmentationDesign::H_u)
        .def_readonly("H_w", &design::AugmentationDesign::H_w)
        .def_readonly("alpha", &design::AugmentationDesign::alpha)
        .def_readonly("relative_degrees", &design::AugmentationDesign::relative_degrees)
        .def_readonly("H_u_condition", &design::AugmentationDesign::H_u_condition);

    py::enum_<controller::Mode>(mod, "Mode")
        .value("Baseline", controller::Mode::Baseline)
        .value("HardSaturation", controller::Mode::HardSaturation)
        .value("Augmented", controller::Mode::Augmented)
        .value("AwOnly", controller::Mode::AwOnly);

    py::class_<simulate::SimTrace>(mod, "SimTrace")
        .def_readonly("t", &simulate::SimTrace::t)
        .def_readonly("x_p", &simulate::SimTrace::x_p)
        .def_readonly("e_yI", &simulate::SimTrace::e_yI)
        .def_readonly("u_bl", &simulate::SimTrace::u_bl)
        .def_readonly("v", &simulate::SimTrace::v)
        .def_readonly("w", &simulate::SimTrace::w)
        .def_readonly("u_total", &simulate::SimTrace::u_total)
        .def_readonly("y_reg", &simulate::SimTrace::y_reg)
        .def_readonly("z_lim", &simulate::SimTrace::z_lim)
        .def_readonly("y_cmd", &simulate::SimTrace::y_cmd);

    mod.def("spectrum", [](const Mat& m) { return numerics::spectrum(m).eigenvalues; },
            py::arg("m"), "Eigenvalues sorted by real part");
    mod.def("is_hurwitz", &numerics::is_hurwitz, py::arg("m"), py::arg("margin") = 0.0);
    mod.def("care_solve",
            [](const Mat& a, const Mat& b, const Mat& q, const Mat& r) {
                const auto sol = numerics::care_solve(a, b, q, r);
                return py::make_tuple(sol.p, sol.k, sol.residual);
            },
            py::arg("a"), py::arg("b"), py::arg("q"), py::arg("r"),
            "Stabilizing CARE solution (P, K, residual)");

    mod.def("lqr_pi_design", &design::lqr_pi_design, py::arg("plant"), py::arg("Q"),
            py::arg("R"));
    mod.def("build_extended", &model::build_extended, py::arg("plant"), py::arg("gains"),
            py::arg("box"));
    mod.def("build_sensitivities",
            [](const model::ExtendedSystem& ext, const model::ServoGains& gains,
               const Vec& alpha) {
                return design::build_sensitivities(ext, gains,
                                                   design::PolynomialSpec::from_alpha(alpha));
            },
            py::arg("ext"), py::arg("gains"), py::arg("alpha"),
            "Augmentation data for relative-degree-one channels (one slope each)");

    mod.def("simulate_run",
            [](const model::ExtendedSystem& ext, const design::AugmentationDesign& dsn,
               const model::ServoGains& gains, const std::vector<std::pair<double, Vec>>& steps,
               double horizon, double dt, controller::Mode mode) {
                simulate::CommandSchedule sched;
                for (const auto& [t, cmd] : steps) sched.entries.push_back({t, cmd});
                sched.horizon = horizon;
                simulate::SimConfig sc;
                sc.dt = dt;
                sc.mode = mode;
                return simulate::run(ext, dsn, gains, sched, sc);
            },
            py::arg("ext"), py::arg("dsn"), py::arg("gains"), py::arg("schedule"),
            py::arg("horizon"), py::arg("dt") = 1e-3,
            py::arg("mode") = controller::Mode::Augmented);
    mod.def("analyze",
            [](const simulate::SimTrace& trace, const model::ExtendedSystem& ext, double tol) {
                return violation_dict(simulate::analyze(trace, ext, tol));
            },
            py::arg("trace"), py::arg("ext"), py::arg("tolerance") = 0.01);

    mod.def("mimo_margins",
            [](const model::ExtendedSystem& ext, const model::ServoGains& gains,
               const design::AugmentationDesign& dsn, const std::string& pattern) {
                const auto lg = margins::build_loop_model(
                    ext, gains, dsn, margins::DeltaPattern::from_string(pattern));
                return margin_dict(margins::mimo_margins(lg));
            },
            py::arg("ext"), py::arg("gains"), py::arg("dsn"), py::arg("pattern"));
    mod.def("saturation_margins",
            [](const model::ExtendedSystem& ext, const model::ServoGains& gains,
               const std::vector<int>& saturated) {
                return margin_dict(margins::saturation_margins(ext, gains, saturated));
            },
            py::arg("ext"), py::arg("gains"), py::arg("saturated"));

    mod.def("load_config", [](const std::filesystem::path& path) {
        const auto cfg = study::load_config(path);
        py::dict d;
        d["name"] = cfg.name;
        py::object plant = py::cast(cfg.plant);
        d["plant"] = plant;
        py::object box = py::cast(cfg.box);
        d["box"] = box;
        d["Q"] = cfg.Q;
        d["R"] = cfg.R;
        d["alpha"] = cfg.poly.alpha();
        py::list steps;
        for (const auto& e : cfg.schedule.entries)
            steps.append(py::make_tuple(e.t_start, e.y_cmd));
        d["schedule"] = steps;
        d["horizon"] = cfg.schedule.horizon;
        d["dt"] = cfg.sim.dt;
        return d;
    });

    mod.attr("__version__") = "0.1.0";
}
