"""Verification oracles and feedback-gain diagnostics.

``lqr_oracle`` is a deliberately independent finite-horizon Riccati
recursion used to cross-check the backward pass on unconstrained
linear-quadratic problems; it shares no code with ``riccati``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from boxilqr.riccati import GainSchedule


@dataclass(frozen=True)
class SaturationReport:
    """Where each constrained control channel sits near its bounds, and
    how large the corresponding feedback rows are there vs. overall."""

    saturated_steps: Dict[int, List[int]]   # channel -> time indices
    gain_row_norms: np.ndarray              # (T, m)
    peak_row_norm: Dict[int, float]
    saturated_max_norm: Dict[int, float]
    threshold_frac: float


def saturation_report(traj, gs: GainSchedule, box,
                      threshold_frac: float = 0.01) -> SaturationReport:
    """Classify (t, channel) pairs as saturated when the slack fraction
    min(u-lo, hi-u)/(hi-lo) drops below threshold_frac."""
    U = traj.controls
    T = U.shape[0]
    row_norms = np.linalg.norm(gs.K, axis=2)  # (T, m)
    saturated: Dict[int, List[int]] = {}
    peak: Dict[int, float] = {}
    sat_max: Dict[int, float] = {}
    for j in box.constrained_control_indices:
        j = int(j)
        lo, hi = box.u_lower[j], box.u_upper[j]
        width = hi - lo
        if not np.isfinite(width):
            continue
        frac = np.minimum(U[:, j] - lo, hi - U[:, j]) / width
        steps = np.flatnonzero(frac < threshold_frac)
        saturated[j] = [int(t) for t in steps]
        peak[j] = float(np.max(row_norms[:, j]))
        sat_max[j] = float(np.max(row_norms[steps, j])) if steps.size else 0.0
    return SaturationReport(saturated_steps=saturated, gain_row_norms=row_norms,
                            peak_row_norm=peak, saturated_max_norm=sat_max,
                            threshold_frac=threshold_frac)


def lqr_oracle(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
               Qf: np.ndarray, goal: np.ndarray, T: int) -> GainSchedule:
    """Textbook finite-horizon discrete Riccati recursion for
    x_{t+1} = A x_t + B u_t with cost 0.5 (x-goal)'Q(x-goal) + 0.5 u'Ru,
    expanded around the all-zero nominal trajectory."""
    n = A.shape[0]
    m = B.shape[1]
    S = np.empty((T + 1, n, n))
    v = np.empty((T + 1, n))
    K = np.empty((T, m, n))
    k = np.empty((T, m))
    S[T] = Qf
    v[T] = -Qf @ goal
    red_sum = 0.0
    for t in range(T - 1, -1, -1):
        H = R + B.T @ S[t + 1] @ B
        G = B.T @ S[t + 1] @ A
        g = B.T @ v[t + 1]
        Hinv = np.linalg.inv(H)
        K[t] = -Hinv @ G
        k[t] = -Hinv @ g
        S[t] = Q + A.T @ S[t + 1] @ A - G.T @ Hinv @ G
        S[t] = 0.5 * (S[t] + S[t].T)
        v[t] = -Q @ goal + A.T @ v[t + 1] + K[t].T @ g
        red_sum += float(g @ Hinv @ g)
    return GainSchedule(k=k, K=K, v=v, S=S, expected_reduction_sum=red_sum)


def fd_check(f: Callable, point: np.ndarray, analytic: np.ndarray) -> float:
    """Max elementwise relative error between central finite differences of
    f at point and the supplied analytic derivative.

    f maps a vector to a scalar or vector; the FD step per coordinate is
    1e-6 * (1 + |coordinate|); the relative-error denominator is floored
    at 1e-8.
    """
    point = np.asarray(point, float)
    analytic = np.asarray(analytic, float)
    cols = []
    for i in range(point.size):
        h = 1e-6 * (1.0 + abs(point[i]))
        p, q = point.copy(), point.copy()
        p[i] += h
        q[i] -= h
        cols.append((np.asarray(f(p), float) - np.asarray(f(q), float)) / (2 * h))
    fd = np.stack(cols, axis=-1)
    if analytic.shape != fd.shape:
        fd = fd.reshape(analytic.shape)
    denom = np.maximum(np.abs(fd), 1e-8)
    return float(np.max(np.abs(fd - analytic) / denom))
