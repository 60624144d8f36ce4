"""Backward pass: action-value expansion, gains, value-function recursion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from boxilqr import model as model_mod
from boxilqr._backend import core
from boxilqr.errors import InfeasiblePoint, NonPositiveDefinite

# the specialized single-control recursion kernel handles up to this many
# states; larger problems use the generic loop below
_KERNEL_NMAX = 4


@dataclass(frozen=True)
class GainSchedule:
    """Affine policy and local value expansion from one backward pass.

    k: (T, m) feedforward terms; K: (T, m, n) feedback gains;
    v: (T+1, n) value gradients; S: (T+1, n, n) value Hessians
    (symmetrized); expected_reduction_sum = sum_t Qu' (Quu+zeta I)^-1 Qu.
    """

    k: np.ndarray
    K: np.ndarray
    v: np.ndarray
    S: np.ndarray
    expected_reduction_sum: float


@dataclass
class Regularization:
    """Levenberg-style zeta schedule for Q_uu + zeta*I."""

    zeta: float = 0.0
    zeta_min: float = 1e-6
    zeta_max: float = 1e8
    growth: float = 10.0

    def escalate(self) -> bool:
        """Raise zeta one notch; False once the cap would be exceeded."""
        new = max(self.zeta_min, self.zeta * self.growth)
        if new > self.zeta_max:
            return False
        self.zeta = new
        return True

    def reset(self):
        self.zeta = 0.0


def _barrier_arrays(vals, lo, hi, idx, weights, kind):
    """Vectorized barrier gradient/Hessian-diagonal along a trajectory."""
    g = np.zeros_like(vals)
    h = np.zeros_like(vals)
    for w, i in zip(weights, idx):
        col = vals[:, i]
        if np.any(col <= lo[i]):
            t = int(np.argmax(col <= lo[i]))
            raise InfeasiblePoint(kind, int(i), -1, t)
        if np.any(col >= hi[i]):
            t = int(np.argmax(col >= hi[i]))
            raise InfeasiblePoint(kind, int(i), +1, t)
        if np.isfinite(lo[i]):
            s = col - lo[i]
            g[:, i] -= w / s
            h[:, i] += w / (s * s)
        if np.isfinite(hi[i]):
            s = hi[i] - col
            g[:, i] += w / s
            h[:, i] += w / (s * s)
    return g, h


def backward_pass(problem, nominal, bs, reg: Regularization) -> GainSchedule:
    """Riccati-style recursion over the barrier-augmented quadratic model.

    On a Q_uu factorization failure the pass restarts with an escalated
    zeta; NonPositiveDefinite is raised once the cap is exhausted.
    """
    dyn = problem.dynamics
    qc = problem.cost
    box = problem.box
    X, U = nominal.states, nominal.controls
    T, n, m = U.shape[0], dyn.n, dyn.m

    FX, FU = model_mod.linearize_trajectory(dyn, X, U)

    E = X - qc.goal
    Cx = E[:-1] @ qc.Q
    Cu = U @ qc.R
    gx, hx = _barrier_arrays(X, box.x_lower, box.x_upper,
                             box.constrained_state_indices, bs.mu, "x")
    gu, hu = _barrier_arrays(U, box.u_lower, box.u_upper,
                             box.constrained_control_indices, bs.sigma, "u")
    Cx = Cx + gx[:-1]
    Cu = Cu + gu

    k = np.empty((T, m))
    K = np.empty((T, m, n))
    v = np.empty((T + 1, n))
    S = np.empty((T + 1, n, n))

    if m == 1 and n <= _KERNEL_NMAX:
        vT = qc.Qf @ E[-1] + gx[-1]
        ST = np.ascontiguousarray(qc.Qf + np.diag(hx[-1]))
        Qc = np.ascontiguousarray(qc.Q, dtype=float)
        R = float(qc.R[0, 0])
        Cxc = np.ascontiguousarray(Cx)
        Cuc = np.ascontiguousarray(Cu)
        hxc = np.ascontiguousarray(hx[:-1])
        huc = np.ascontiguousarray(hu)
        FXc = np.ascontiguousarray(FX)
        FUc = np.ascontiguousarray(FU)
        while True:
            red_sum, fail_t = core.backward_m1(
                FXc, FUc, Cxc, Cuc, hxc, huc, Qc, R, vT, ST, reg.zeta,
                k, K, v, S)
            if fail_t < 0:
                return GainSchedule(k=k, K=K, v=v, S=S,
                                    expected_reduction_sum=float(red_sum))
            if not reg.escalate():
                raise NonPositiveDefinite(fail_t, reg.zeta)

    while True:
        v[T] = qc.Qf @ E[-1] + gx[-1]
        S[T] = qc.Qf + np.diag(hx[-1])
        zeta = reg.zeta
        red_sum = 0.0
        restart = False
        for t in range(T - 1, -1, -1):
            fx, fu = FX[t], FU[t]
            Sfx = S[t + 1] @ fx
            Sfu = S[t + 1] @ fu
            Qx = Cx[t] + fx.T @ v[t + 1]
            Qu = Cu[t] + fu.T @ v[t + 1]
            Qxx = qc.Q + np.diag(hx[t]) + fx.T @ Sfx
            Quu = qc.R + np.diag(hu[t]) + fu.T @ Sfu
            Qux = fu.T @ Sfx
            Quu_reg = Quu + zeta * np.eye(m)
            if m == 1:
                q = Quu_reg[0, 0]
                if not q > 0:
                    restart = True
                    fail_t = t
                    break
                kt = -Qu / q
                Kt = -Qux / q
            else:
                try:
                    L = np.linalg.cholesky(Quu_reg)
                except np.linalg.LinAlgError:
                    restart = True
                    fail_t = t
                    break
                kt = -np.linalg.solve(Quu_reg, Qu)
                Kt = -np.linalg.solve(Quu_reg, Qux)
                del L
            k[t] = kt
            K[t] = Kt
            v[t] = Qx + Kt.T @ (Quu_reg @ kt) + Kt.T @ Qu + Qux.T @ kt
            St = Qxx + Kt.T @ (Quu_reg @ Kt) + Kt.T @ Qux + Qux.T @ Kt
            S[t] = 0.5 * (St + St.T)
            red_sum += float(Qu @ -kt)
        if not restart:
            return GainSchedule(k=k, K=K, v=v, S=S,
                                expected_reduction_sum=red_sum)
        if not reg.escalate():
            raise NonPositiveDefinite(fail_t, reg.zeta)


def expected_reduction(gs: GainSchedule, alpha: float) -> float:
    """Model-predicted cost change -(alpha - alpha^2/2) * sum; <= 0."""
    return -(alpha - 0.5 * alpha * alpha) * gs.expected_reduction_sum
