"""Quadratic tracking cost, box constraints, and log-barrier terms.

The augmented stage cost is C(x,u) + omega(x,u) where C is the quadratic
tracking term and omega the log barrier over the constrained components;
the terminal cost is Phi(x_T) + Omega(x_T).  A one-sided (half-infinite)
box contributes only the log term of its finite side.

Two-sided barrier terms are shifted by the constant 2 log(width/2) so the
barrier vanishes at the box center.  The offset does not depend on x or u,
so gradients, Hessians, and minimizers are unchanged; it exists purely to
keep total costs near the scale of the tracking objective.  Without it,
large barrier weights contribute an enormous constant offset per step and
genuine cost reductions drown in floating-point cancellation during the
line search.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from boxilqr.errors import InfeasiblePoint


@dataclass(frozen=True)
class BoxSpec:
    """Per-component bounds; +-inf marks an unconstrained side.

    The constrained index sets I_x / I_u are derived: an index is
    constrained iff at least one of its bounds is finite.
    """

    x_lower: np.ndarray
    x_upper: np.ndarray
    u_lower: np.ndarray
    u_upper: np.ndarray

    def __post_init__(self):
        for lo, hi, what in ((self.x_lower, self.x_upper, "state"),
                             (self.u_lower, self.u_upper, "control")):
            if lo.shape != hi.shape:
                raise ValueError(f"{what} bound shapes differ")
            bad = ~(lo < hi)
            if np.any(bad):
                i = int(np.argmax(bad))
                raise ValueError(
                    f"{what} bounds invalid at index {i}: "
                    f"lower {lo[i]} must be < upper {hi[i]}")

    @staticmethod
    def unconstrained(n: int, m: int) -> "BoxSpec":
        inf = np.inf
        return BoxSpec(np.full(n, -inf), np.full(n, inf),
                       np.full(m, -inf), np.full(m, inf))

    @property
    def constrained_state_indices(self) -> np.ndarray:
        return np.flatnonzero(np.isfinite(self.x_lower) | np.isfinite(self.x_upper))

    @property
    def constrained_control_indices(self) -> np.ndarray:
        return np.flatnonzero(np.isfinite(self.u_lower) | np.isfinite(self.u_upper))


@dataclass(frozen=True)
class QuadraticCost:
    """C = 0.5 (x-goal)' Q (x-goal) + 0.5 u' R u; Phi uses Qf."""

    Q: np.ndarray
    R: np.ndarray
    Qf: np.ndarray
    goal: np.ndarray

    def __post_init__(self):
        for M, name in ((self.Q, "Q"), (self.R, "R"), (self.Qf, "Qf")):
            if not np.array_equal(M, M.T):
                raise ValueError(f"{name} must be symmetric")
        np.linalg.cholesky(self.R)  # R must be positive definite


@dataclass
class BarrierState:
    """Barrier weights over the constrained indices, with their adaptive
    reduction factors (Algorithm state of the outer loop)."""

    mu: np.ndarray
    sigma: np.ndarray
    r_mu: np.ndarray
    r_sigma: np.ndarray

    def __post_init__(self):
        if np.any(self.mu <= 0) or np.any(self.sigma <= 0):
            raise ValueError("barrier parameters must be strictly positive")
        for r in (self.r_mu, self.r_sigma):
            if np.any(r <= 0) or np.any(r > 1):
                raise ValueError("reduction factors must lie in (0, 1]")

    def copy(self) -> "BarrierState":
        return BarrierState(self.mu.copy(), self.sigma.copy(),
                            self.r_mu.copy(), self.r_sigma.copy())


@dataclass(frozen=True)
class CostDerivatives:
    value: float
    cx: np.ndarray
    cu: np.ndarray
    cxx: np.ndarray
    cuu: np.ndarray
    cux: np.ndarray


# ---------------------------------------------------------------------------
# Quadratic part
# ---------------------------------------------------------------------------

def stage_cost(qc: QuadraticCost, x, u) -> float:
    e = np.asarray(x, float) - qc.goal
    u = np.asarray(u, float)
    return 0.5 * float(e @ qc.Q @ e) + 0.5 * float(u @ qc.R @ u)


def terminal_cost(qc: QuadraticCost, x) -> float:
    e = np.asarray(x, float) - qc.goal
    return 0.5 * float(e @ qc.Qf @ e)


# ---------------------------------------------------------------------------
# Barrier terms
# ---------------------------------------------------------------------------

def _check_interior(vals, lo, hi, idx, kind, t=None):
    for i in idx:
        if vals[i] <= lo[i]:
            raise InfeasiblePoint(kind, int(i), -1, t)
        if vals[i] >= hi[i]:
            raise InfeasiblePoint(kind, int(i), +1, t)


def _barrier_value_1d(vals, lo, hi, idx, weights, kind, t=None):
    total = 0.0
    for w, i in zip(weights, idx):
        if vals[i] <= lo[i]:
            raise InfeasiblePoint(kind, int(i), -1, t)
        if vals[i] >= hi[i]:
            raise InfeasiblePoint(kind, int(i), +1, t)
        if np.isfinite(lo[i]):
            total -= w * np.log(vals[i] - lo[i])
        if np.isfinite(hi[i]):
            total -= w * np.log(hi[i] - vals[i])
        if np.isfinite(lo[i]) and np.isfinite(hi[i]):
            total += w * 2.0 * np.log(0.5 * (hi[i] - lo[i]))
    return float(total)


def barrier_running(box: BoxSpec, bs: BarrierState, x, u, t=None) -> float:
    """omega(x, u): running log-barrier value at a strictly interior point."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    val = _barrier_value_1d(x, box.x_lower, box.x_upper,
                            box.constrained_state_indices, bs.mu, "x", t)
    val += _barrier_value_1d(u, box.u_lower, box.u_upper,
                             box.constrained_control_indices, bs.sigma, "u", t)
    return val


def barrier_terminal(box: BoxSpec, bs: BarrierState, xT) -> float:
    """Omega(x_T): terminal barrier over the constrained state components."""
    xT = np.asarray(xT, float)
    return _barrier_value_1d(xT, box.x_lower, box.x_upper,
                             box.constrained_state_indices, bs.mu, "x")


def _barrier_grad_hess_1d(vals, lo, hi, idx, weights, size, kind, t=None):
    g = np.zeros(size)
    h = np.zeros(size)
    for w, i in zip(weights, idx):
        if vals[i] <= lo[i]:
            raise InfeasiblePoint(kind, int(i), -1, t)
        if vals[i] >= hi[i]:
            raise InfeasiblePoint(kind, int(i), +1, t)
        if np.isfinite(lo[i]):
            s = vals[i] - lo[i]
            g[i] -= w / s
            h[i] += w / (s * s)
        if np.isfinite(hi[i]):
            s = hi[i] - vals[i]
            g[i] += w / s
            h[i] += w / (s * s)
    return g, h


def barrier_derivatives(box: BoxSpec, bs: BarrierState, x, u, t=None) -> CostDerivatives:
    """Value, gradient and (diagonal) Hessian of the running barrier."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    gx, hx = _barrier_grad_hess_1d(x, box.x_lower, box.x_upper,
                                   box.constrained_state_indices, bs.mu,
                                   x.shape[0], "x", t)
    gu, hu = _barrier_grad_hess_1d(u, box.u_lower, box.u_upper,
                                   box.constrained_control_indices, bs.sigma,
                                   u.shape[0], "u", t)
    return CostDerivatives(
        value=barrier_running(box, bs, x, u, t),
        cx=gx, cu=gu,
        cxx=np.diag(hx), cuu=np.diag(hu),
        cux=np.zeros((u.shape[0], x.shape[0])),
    )


def terminal_cost_derivatives(qc: QuadraticCost, box: BoxSpec, bs: BarrierState,
                              xT) -> CostDerivatives:
    """Derivatives of Phi(x_T) + Omega(x_T); seeds the backward pass."""
    xT = np.asarray(xT, float)
    n = xT.shape[0]
    g, h = _barrier_grad_hess_1d(xT, box.x_lower, box.x_upper,
                                 box.constrained_state_indices, bs.mu, n, "x")
    e = xT - qc.goal
    return CostDerivatives(
        value=terminal_cost(qc, xT) + barrier_terminal(box, bs, xT),
        cx=qc.Qf @ e + g,
        cu=np.zeros(0),
        cxx=qc.Qf + np.diag(h),
        cuu=np.zeros((0, 0)),
        cux=np.zeros((0, n)),
    )


# ---------------------------------------------------------------------------
# Trajectory-level evaluation (vectorized; this runs in every line search)
# ---------------------------------------------------------------------------

def _feasibility_violation(X, U, box):
    """First strict-interior violation along a trajectory, or None."""
    ix = box.constrained_state_indices
    iu = box.constrained_control_indices
    if ix.size:
        bad = (X[:, ix] <= box.x_lower[ix]) | (X[:, ix] >= box.x_upper[ix])
        if np.any(bad):
            t, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
            i = int(ix[j])
            side = -1 if X[t, i] <= box.x_lower[i] else +1
            return ("x", i, side, int(t))
    if iu.size:
        bad = (U[:, iu] <= box.u_lower[iu]) | (U[:, iu] >= box.u_upper[iu])
        if np.any(bad):
            t, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
            i = int(iu[j])
            side = -1 if U[t, i] <= box.u_lower[i] else +1
            return ("u", i, side, int(t))
    return None


def _barrier_sum(V, lo, hi, idx, weights):
    """Sum of barrier values over rows of V (assumed strictly interior)."""
    total = 0.0
    for w, i in zip(weights, idx):
        if np.isfinite(lo[i]):
            total -= w * float(np.sum(np.log(V[:, i] - lo[i])))
        if np.isfinite(hi[i]):
            total -= w * float(np.sum(np.log(hi[i] - V[:, i])))
        if np.isfinite(lo[i]) and np.isfinite(hi[i]):
            total += w * V.shape[0] * 2.0 * np.log(0.5 * (hi[i] - lo[i]))
    return total


def trajectory_cost(qc: QuadraticCost, box: BoxSpec, bs: BarrierState,
                    X: np.ndarray, U: np.ndarray) -> float:
    """Total augmented cost sum_t [C + omega] + Phi + Omega along (X, U).

    Raises InfeasiblePoint (with the first offending time/index) if any
    constrained component is outside the strict interior.
    """
    viol = _feasibility_violation(X, U, box)
    if viol is not None:
        raise InfeasiblePoint(*viol[:3], t=viol[3])
    E = X - qc.goal
    quad = 0.5 * float(np.einsum("ti,ij,tj->", E[:-1], qc.Q, E[:-1]))
    quad += 0.5 * float(np.einsum("ti,ij,tj->", U, qc.R, U))
    quad += 0.5 * float(E[-1] @ qc.Qf @ E[-1])
    bar = _barrier_sum(X, box.x_lower, box.x_upper,
                       box.constrained_state_indices, bs.mu)
    bar += _barrier_sum(U, box.u_lower, box.u_upper,
                        box.constrained_control_indices, bs.sigma)
    return quad + bar


def total_augmented_cost(problem, traj, bs: BarrierState) -> float:
    """Augmented cost of a trajectory for a given problem (see Problem)."""
    return trajectory_cost(problem.cost, problem.box, bs,
                           traj.states, traj.controls)
