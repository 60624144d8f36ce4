"""Readers for box-ilqr run output directories.

A run directory contains:
  trajectory.csv  header ``t,x1..xn,u1..um``; the final row carries the
                  terminal state and empty control fields
  gains.csv       header ``t,k1..km,K_1_1..K_m_n`` (optional)
  report.json     solve metadata: status, box bounds, outer-loop records,
                  and per-channel control saturation intervals

Only these file formats are consumed; nothing here imports the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np


class RunDataError(Exception):
    """A run directory is missing files or has malformed contents."""


@dataclass(frozen=True)
class RunData:
    """Parsed contents of one run output directory."""

    path: Path
    times: np.ndarray          # (T+1,) seconds
    states: np.ndarray         # (T+1, n)
    controls: np.ndarray       # (T, m)
    state_names: List[str]
    control_names: List[str]
    report: dict
    gain_times: Optional[np.ndarray] = None    # (T,)
    feedforward: Optional[np.ndarray] = None   # (T, m)
    feedback: Optional[np.ndarray] = None      # (T, m, n)


def _read_csv(path: Path):
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise RunDataError(f"{path}: no such file")
    lines = [ln for ln in text.splitlines() if ln]
    if len(lines) < 2:
        raise RunDataError(f"{path}: empty table")
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(header):
            raise RunDataError(
                f"{path}: row has {len(cells)} cells, expected {len(header)}")
        rows.append([float(c) if c else np.nan for c in cells])
    return header, np.array(rows, dtype=float)


def _split_columns(path: Path, header: List[str], prefixes: Dict[str, list]):
    """Assign each non-time column to its prefix group, in file order."""
    if not header or header[0] != "t":
        raise RunDataError(f"{path}: first column must be 't', got "
                           f"{header[0] if header else 'nothing'!r}")
    for name in header[1:]:
        for prefix, cols in prefixes.items():
            if name.startswith(prefix):
                cols.append(name)
                break
        else:
            raise RunDataError(f"{path}: unrecognized column {name!r}")


def load_run(path) -> RunData:
    """Load a run output directory, validating the file formats."""
    path = Path(path)
    if not path.is_dir():
        raise RunDataError(f"{path}: not a run output directory")

    report_path = path / "report.json"
    try:
        import json
        report = json.loads(report_path.read_text())
    except FileNotFoundError:
        raise RunDataError(f"{report_path}: no such file")
    except ValueError as e:
        raise RunDataError(f"{report_path}: invalid JSON: {e}")
    if report.get("schema") != 1:
        raise RunDataError(f"{report_path}: unsupported schema "
                           f"{report.get('schema')!r} (expected 1)")

    header, data = _read_csv(path / "trajectory.csv")
    state_names: List[str] = []
    control_names: List[str] = []
    _split_columns(path / "trajectory.csv", header,
                   {"x": state_names, "u": control_names})
    if not state_names:
        raise RunDataError(f"{path}/trajectory.csv: no state columns")
    n = len(state_names)
    times = data[:, 0]
    states = data[:, 1:1 + n]
    controls = data[:-1, 1 + n:]
    if np.isnan(states).any() or np.isnan(controls).any():
        raise RunDataError(f"{path}/trajectory.csv: missing values outside "
                           "the final control row")

    run = dict(path=path, times=times, states=states, controls=controls,
               state_names=state_names, control_names=control_names,
               report=report)

    gains_path = path / "gains.csv"
    if gains_path.exists():
        gheader, gdata = _read_csv(gains_path)
        k_names: List[str] = []
        K_names: List[str] = []
        _split_columns(gains_path, gheader, {"k": k_names, "K_": K_names})
        m = len(k_names)
        if m == 0 or len(K_names) != m * n:
            raise RunDataError(
                f"{gains_path}: expected {m} feedforward and {m * n} "
                f"feedback columns for {n} states, got {len(K_names)}")
        run["gain_times"] = gdata[:, 0]
        run["feedforward"] = gdata[:, 1:1 + m]
        run["feedback"] = gdata[:, 1 + m:].reshape(-1, m, n)
    return RunData(**run)


def control_bounds(run: RunData, j: int):
    """(lower, upper) bounds of control channel j; None marks an open side."""
    box = run.report.get("box", {})
    lo = box.get("u_lower", [])
    hi = box.get("u_upper", [])
    return (lo[j] if j < len(lo) else None, hi[j] if j < len(hi) else None)


def state_bounds(run: RunData, i: int):
    """(lower, upper) bounds of state component i; None marks an open side."""
    box = run.report.get("box", {})
    lo = box.get("x_lower", [])
    hi = box.get("x_upper", [])
    return (lo[i] if i < len(lo) else None, hi[i] if i < len(hi) else None)


def saturation_intervals(run: RunData, j: int):
    """Saturated [first, last] step-index intervals of control channel j."""
    channels = run.report.get("saturation", {}).get("channels", {})
    return channels.get(str(j), {}).get("saturated_intervals", [])
