"""Smoke tests for the python extension: design, simulate, margins on the
bundled aircraft study."""

import math
import os
import sys

import numpy as np

for entry in os.environ["FCS_PYTHON_DIR"].split(";"):
    sys.path.insert(0, entry)
import fcs  # noqa: E402

CONFIG = os.path.join(os.environ["FCS_CONFIG_DIR"], "aircraft_lateral.json")
D2R = math.pi / 180.0


def make_plant():
    p = fcs.Plant()
    p.A_p = np.array([[-0.11794, 0.00085, -1.0001],
                      [-7.0113, -1.4492, 0.22059],
                      [6.3035, 0.06511, -0.41172]])
    p.B_p = np.array([[0.0, 0.015257], [-7.9662, 2.6875], [0.60926, -2.3577]])
    p.C_reg = np.array([[0.0, 1.0, 0.0], [-2.6049, 0.018724, 0.067695]])
    p.D_reg = np.array([[0.0, 0.0], [0.0, 0.33698]])
    p.C_lim = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    return p


def make_box():
    box = fcs.ConstraintBox()
    box.u_min = np.array([-3.0 * D2R, -2.0 * D2R])
    box.u_max = np.array([3.0 * D2R, 2.0 * D2R])
    box.z_min = np.array([-18.0 * D2R, -0.5 * D2R])
    box.z_max = np.array([18.0 * D2R, 0.5 * D2R])
    return box


def test_spectrum_and_care():
    eigs = fcs.spectrum(np.diag([-1.0, -2.0]))
    assert abs(eigs[0] - (-2.0)) < 1e-12
    assert fcs.is_hurwitz(np.diag([-1.0, -2.0]))
    p, k, res = fcs.care_solve(np.array([[0.0]]), np.array([[1.0]]),
                               np.array([[1.0]]), np.array([[1.0]]))
    assert abs(p[0, 0] - 1.0) < 1e-9
    assert res < 1e-9


def test_design_pipeline():
    plant = make_plant()
    gains = fcs.lqr_pi_design(plant, np.diag([1.025, 1.0289, 0.0, 0.0, 1.6021]),
                              np.diag([1.0, 0.49129]))
    assert gains.K_I.shape == (2, 2)
    ext = fcs.build_extended(plant, gains, make_box())
    dsn = fcs.build_sensitivities(ext, gains, np.array([80.0, 8.0, 40.0, 40.0]))
    assert dsn.relative_degrees == [1, 1, 1, 1]
    assert dsn.H_u_condition < 1e6
    return plant, gains, ext, dsn


def test_simulation_enforces_constraints():
    _, gains, ext, dsn = test_design_pipeline()
    schedule = [(0.0, np.array([15.0 * D2R, 0.0312])), (5.0, np.array([0.0, 0.0]))]
    trace = fcs.simulate_run(ext, dsn, gains, schedule, horizon=10.0, dt=1e-3,
                             mode=fcs.Mode.Augmented)
    assert trace.t.shape[0] == 10001
    rep = fcs.analyze(trace, ext, tolerance=0.01)
    assert not any(rep["violated"])
    # baseline violates the sideslip channel on the same maneuver
    trace_b = fcs.simulate_run(ext, dsn, gains, schedule, horizon=10.0, dt=1e-3,
                               mode=fcs.Mode.Baseline)
    rep_b = fcs.analyze(trace_b, ext, tolerance=0.01)
    assert rep_b["violated"][3]


def test_margins():
    _, gains, ext, dsn = test_design_pipeline()
    rep = fcs.mimo_margins(ext, gains, dsn, "0000")
    assert rep["stable"]
    assert 0.9 <= rep["alpha"] <= 1.0
    assert rep["gm_db"][0] < 0.0 < rep["gm_db"][1]
    sat = fcs.saturation_margins(ext, gains, [0, 1])
    assert sat["open_loop"]


def test_load_config():
    cfg = fcs.load_config(CONFIG)
    assert cfg["name"] == "aircraft_lateral"
    assert abs(cfg["plant"].A_p[0, 0] - (-0.11794)) == 0.0
    assert abs(cfg["box"].u_max[0] - 3.0 * D2R) < 1e-14
    assert len(cfg["schedule"]) == 4


def main():
    tests = [test_spectrum_and_care, test_design_pipeline,
             test_simulation_enforces_constraints, test_margins, test_load_config]
    for t in tests:
        t()
        print(f"ok: {t.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    main()
