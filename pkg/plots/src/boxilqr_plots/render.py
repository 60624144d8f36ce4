"""Figure specifications and deterministic matplotlib rendering.

Figures are written without timestamps and with a fixed hash salt so that
rendering the same inputs twice produces byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from boxilqr_plots.io import (RunData, RunDataError, control_bounds,  # noqa: E402
                              load_run, saturation_intervals, state_bounds)

KINDS = ("trajectory", "control", "gains", "descent")

_SPEC_KEYS = {"schema", "run", "kind", "output", "title"}

matplotlib.rcParams["svg.hashsalt"] = "box-ilqr-plots"


class SpecError(Exception):
    """A figure specification file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: one run directory, one figure kind, one output path."""

    run: Path
    kind: str
    output: Path
    title: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown figure kind {self.kind!r}; "
                            f"expected one of {KINDS}")


def load_spec(path) -> FigureSpec:
    """Parse and validate a figure specification file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise SpecError(f"{path}: no such file")
    except ValueError as e:
        raise SpecError(f"{path}: invalid JSON: {e}")
    if not isinstance(raw, dict):
        raise SpecError(f"{path}: top level must be an object")
    if raw.get("schema") != 1:
        raise SpecError(f"{path}: missing or unsupported 'schema' "
                        f"(expected 1, got {raw.get('schema')!r})")
    unknown = set(raw) - _SPEC_KEYS
    if unknown:
        raise SpecError(f"{path}: unknown key(s) {sorted(unknown)}")
    for key in ("run", "kind", "output"):
        if not isinstance(raw.get(key), str) or not raw.get(key):
            raise SpecError(f"{path}: missing or invalid {key!r}")
    title = raw.get("title")
    if title is not None and not isinstance(title, str):
        raise SpecError(f"{path}: 'title' must be a string")
    return FigureSpec(run=Path(raw["run"]), kind=raw["kind"],
                      output=Path(raw["output"]), title=title)


def _bound_line(ax, value, gid):
    ax.axhline(value, color="crimson", linestyle="--", linewidth=1.0,
               gid=gid, zorder=1)


def _saturation_bands(ax, run: RunData, j: int):
    dt = float(run.report["dt"])
    for b, (first, last) in enumerate(saturation_intervals(run, j)):
        ax.axvspan(first * dt, (last + 1) * dt, color="0.82", zorder=0,
                   gid=f"saturation-band-u{j + 1}-{b}")


def _draw_trajectory(ax, run: RunData):
    for i, name in enumerate(run.state_names):
        ax.plot(run.times, run.states[:, i], label=name, gid=f"state-{name}")
        lo, hi = state_bounds(run, i)
        if lo is not None:
            _bound_line(ax, lo, f"bound-line-{name}-lower")
        if hi is not None:
            _bound_line(ax, hi, f"bound-line-{name}-upper")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("state")
    ax.legend(loc="best")


def _draw_control(ax, run: RunData):
    t = run.times[:-1]
    for j, name in enumerate(run.control_names):
        _saturation_bands(ax, run, j)
        ax.step(t, run.controls[:, j], where="post", label=name,
                gid=f"control-{name}")
        lo, hi = control_bounds(run, j)
        if lo is not None:
            _bound_line(ax, lo, f"bound-line-{name}-lower")
        if hi is not None:
            _bound_line(ax, hi, f"bound-line-{name}-upper")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("control")
    ax.legend(loc="best")


def _draw_gains(ax, run: RunData):
    if run.feedback is None:
        raise RunDataError(f"{run.path}: gains.csv is required for a gains "
                           "figure (solve with --emit-gains)")
    import numpy as np
    row_norms = np.linalg.norm(run.feedback, axis=2)  # (T, m)
    for j, name in enumerate(run.control_names):
        _saturation_bands(ax, run, j)
        ax.plot(run.gain_times, row_norms[:, j],
                label=f"|K row| ({name})", gid=f"gain-norm-{name}")
        ax.plot(run.gain_times, run.feedforward[:, j], linestyle=":",
                label=f"k ({name})", gid=f"feedforward-{name}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("gain magnitude")
    ax.legend(loc="best")


def _draw_descent(ax, run: RunData):
    outer = run.report.get("outer")
    if not outer:
        raise RunDataError(f"{run.path}: report has no outer-loop records")
    offset = 0
    for r, rec in enumerate(outer):
        costs = rec["costs"]
        xs = range(offset, offset + len(costs))
        ax.plot(list(xs), costs, marker=".", markersize=3,
                gid=f"descent-round-{r}")
        offset += len(costs)
    ax.set_xlabel("accepted inner iterate (all outer rounds)")
    ax.set_ylabel("augmented cost")


_DRAWERS = {
    "trajectory": _draw_trajectory,
    "control": _draw_control,
    "gains": _draw_gains,
    "descent": _draw_descent,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure to spec.output; returns the output path."""
    run = load_run(spec.run)
    fig, ax = plt.subplots(figsize=(7.0, 4.0), dpi=100)
    try:
        _DRAWERS[spec.kind](ax, run)
        label = spec.title or f"{run.path.name}: {spec.kind}"
        ax.set_title(label)
        fig.tight_layout()
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output, metadata=_deterministic_metadata(spec.output))
    finally:
        plt.close(fig)
    return spec.output


def _deterministic_metadata(output: Path):
    """Suppress embedded timestamps so identical inputs give identical bytes."""
    suffix = output.suffix.lower()
    if suffix == ".svg":
        return {"Date": None}
    if suffix in (".png",):
        return {"Software": None}
    if suffix == ".pdf":
        return {"CreationDate": None}
    return None
