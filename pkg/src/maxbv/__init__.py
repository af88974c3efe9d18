"""Exact and grid-based local maximal functions and their variation.

The 1D layer works on rational step functions with exact arithmetic; the 2D
layer works on cell-constant grids in binary64 and reuses the same
candidate enumeration for its sup-of-averages kernel.
"""

__version__ = "0.1.0"

from .core import Interval, StepFn, as_rat, constant, indicator, rat_str, step_new  # noqa: E402
from .maximal1d import CheckReport, maximal_eval, maximal_profile  # noqa: E402

__all__ = [
    "__version__",
    "Interval",
    "StepFn",
    "as_rat",
    "constant",
    "indicator",
    "rat_str",
    "step_new",
    "CheckReport",
    "maximal_eval",
    "maximal_profile",
]
