"""Forward pass: closed-loop rollout and feasibility-preserving line search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from boxilqr import objective
from boxilqr._backend import core
from boxilqr.errors import NoAcceptableStep
from boxilqr.riccati import GainSchedule, expected_reduction


@dataclass(frozen=True)
class Trajectory:
    """State/control sequences with their augmented cost at the current
    barrier weights.  Accepted trajectories are dynamically consistent and
    strictly feasible on every constrained index."""

    states: np.ndarray      # (T+1, n)
    controls: np.ndarray    # (T, m)
    total_cost: float


@dataclass(frozen=True)
class InfeasibleRollout:
    """First point where a candidate rollout left the strict interior.

    kind: "x", "u", or "nan" (non-finite state propagation)."""

    t: int
    kind: str
    index: int
    side: int


@dataclass(frozen=True)
class LineSearchConfig:
    c1: float = 1e-4
    alpha_init: float = 1.0
    backtrack_factor: float = 0.5
    alpha_min: float = 1e-10

    def __post_init__(self):
        if not 0 < self.c1 < 1:
            raise ValueError("c1 must lie in (0, 1)")
        if not 0 < self.alpha_init <= 1:
            raise ValueError("alpha_init must lie in (0, 1]")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not 0 < self.alpha_min < self.alpha_init:
            raise ValueError("alpha_min must lie in (0, alpha_init)")


def forward_pass(problem, nominal: Trajectory, gs: GainSchedule, alpha: float,
                 bs) -> Union[Trajectory, InfeasibleRollout]:
    """Roll out u = u_bar + alpha*k + K (x - x_bar) from the nominal start.

    Returns the new trajectory with its augmented cost, or an
    InfeasibleRollout naming the first violation."""
    dyn = problem.dynamics
    box = problem.box
    mdl = dyn.model
    Xbar, Ubar = nominal.states, nominal.controls
    if mdl.kernel_id is not None:
        X, U, ok, t, kind, index, side = core.closed_loop(
            mdl.kernel_id, mdl.kernel_params, Xbar, Ubar,
            np.ascontiguousarray(gs.k), np.ascontiguousarray(gs.K),
            alpha, dyn.dt,
            box.x_lower, box.x_upper, box.u_lower, box.u_upper)
        X, U = np.asarray(X), np.asarray(U)
    else:
        X, U, ok, t, kind, index, side = _closed_loop_py(
            dyn, box, Xbar, Ubar, gs.k, gs.K, alpha)
    if not ok:
        return InfeasibleRollout(t=int(t), kind=kind, index=int(index),
                                 side=int(side))
    cost = objective.trajectory_cost(problem.cost, box, bs, X, U)
    return Trajectory(states=X, controls=U, total_cost=cost)


def _closed_loop_py(dyn, box, Xbar, Ubar, k, K, alpha):
    from boxilqr import model as model_mod
    T = Ubar.shape[0]
    X = np.zeros_like(Xbar)
    U = np.zeros_like(Ubar)
    X[0] = Xbar[0]
    for t in range(T):
        u = Ubar[t] + alpha * k[t] + K[t] @ (X[t] - Xbar[t])
        U[t] = u
        lo_bad = u <= box.u_lower
        hi_bad = u >= box.u_upper
        if np.any(lo_bad):
            return X, U, False, t, "u", int(np.argmax(lo_bad)), -1
        if np.any(hi_bad):
            return X, U, False, t, "u", int(np.argmax(hi_bad)), +1
        try:
            xn = model_mod.step(dyn, X[t], u, t)
        except Exception:
            return X, U, False, t, "nan", -1, 0
        X[t + 1] = xn
        lo_bad = xn <= box.x_lower
        hi_bad = xn >= box.x_upper
        if np.any(lo_bad):
            return X, U, False, t + 1, "x", int(np.argmax(lo_bad)), -1
        if np.any(hi_bad):
            return X, U, False, t + 1, "x", int(np.argmax(hi_bad)), +1
    return X, U, True, -1, "", -1, 0


def slack_profile(traj: Trajectory, box) -> dict:
    """Per-step distances to the nearest bounds (diagnostic log of the
    feasibility margins used implicitly by the line search)."""
    out = {}
    ix = box.constrained_state_indices
    iu = box.constrained_control_indices
    if ix.size:
        out["x_lower"] = traj.states[:, ix] - box.x_lower[ix]
        out["x_upper"] = box.x_upper[ix] - traj.states[:, ix]
    if iu.size:
        out["u_lower"] = traj.controls[:, iu] - box.u_lower[iu]
        out["u_upper"] = box.u_upper[iu] - traj.controls[:, iu]
    return out


def line_search(problem, nominal: Trajectory, gs: GainSchedule,
                cfg: LineSearchConfig, bs) -> Tuple[Trajectory, float]:
    """Backtracking search over alpha; rejects infeasible rollouts and
    insufficient realized decrease (ratio below c1).

    Caller contract: gs.expected_reduction_sum > 0 (otherwise the inner
    loop has converged and the search must not be invoked)."""
    alpha = cfg.alpha_init
    while alpha >= cfg.alpha_min:
        candidate = forward_pass(problem, nominal, gs, alpha, bs)
        if isinstance(candidate, Trajectory) and np.isfinite(candidate.total_cost):
            dj_expected = expected_reduction(gs, alpha)
            ratio = (candidate.total_cost - nominal.total_cost) / dj_expected
            if ratio >= cfg.c1:
                return candidate, alpha
        alpha *= cfg.backtrack_factor
    raise NoAcceptableStep(alpha / cfg.backtrack_factor)
