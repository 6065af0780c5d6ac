"""Constrained linear servo-control toolkit.

LQR PI servo design for MIMO LTI plants, min-norm barrier augmentation for
box constraints on inputs and limited outputs, switched closed-loop
simulation, and singular-value stability margins.
"""

import importlib

try:
    # wheel layout: the extension lives inside the package
    _impl = importlib.import_module("._fcs", __name__)
except ImportError:
    # in-tree builds place the extension next to the package directory
    _impl = importlib.import_module("_fcs")

_EXPORTS = [
    "AugmentationDesign",
    "ConstraintBox",
    "ExtendedSystem",
    "FcsError",
    "Mode",
    "Plant",
    "ServoGains",
    "SimTrace",
    "analyze",
    "build_extended",
    "build_sensitivities",
    "care_solve",
    "is_hurwitz",
    "load_config",
    "lqr_pi_design",
    "mimo_margins",
    "saturation_margins",
    "simulate_run",
    "spectrum",
    "__version__",
]

for _name in _EXPORTS:
    globals()[_name] = getattr(_impl, _name)

__all__ = [n for n in _EXPORTS if not n.startswith("__")]
