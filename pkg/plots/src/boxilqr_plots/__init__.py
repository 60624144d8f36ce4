"""Figure rendering for box-ilqr run outputs.

Consumes only the run directory file formats (trajectory.csv, gains.csv,
report.json); the solver package is not a dependency.
"""

from boxilqr_plots import cli
from boxilqr_plots.io import RunData, RunDataError, load_run
from boxilqr_plots.render import KINDS, FigureSpec, SpecError, load_spec, render

__all__ = [
    "KINDS",
    "FigureSpec",
    "RunData",
    "RunDataError",
    "SpecError",
    "cli",
    "load_run",
    "load_spec",
    "render",
]
