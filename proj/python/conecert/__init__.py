"""Elliptic systems with functional boundary conditions.

Discrete solution operators on cut-cell grids, Krein-Rutman spectral data,
a damped Picard fixed-point solver and machine-checked existence /
non-existence certificates with parameter-region sweeps.
"""

try:
    from ._conecert import *  # noqa: F401,F403  (installed package layout)
    from ._conecert import __version__  # noqa: F401
except ImportError:  # in-tree builds put the extension directly on sys.path
    from _conecert import *  # noqa: F401,F403
    from _conecert import __version__  # noqa: F401

__all__ = [
    "Problem",
    "Engine",
    "ConecertError",
    "load_problem",
    "load_problem_text",
    "load_example",
    "repro",
    "eval_expr",
    "__version__",
]
