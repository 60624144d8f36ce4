"""Discrete-time dynamics: benchmark systems, RK4 discretization, Jacobians.

Three swing-up benchmarks are built in (pendulum, cart-pole, acrobot); their
hot loops run in the compiled kernel when available.  Arbitrary user models
are supported through a plain-Python path: supply ``continuous_rhs`` (and
optionally analytic continuous Jacobians) and the same RK4 zero-order-hold
discretization and central-difference Jacobians are applied.

Angle convention for all benchmarks: 0 is hanging down, pi upright, angles
live on the real line (no wrapping).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from boxilqr._backend import core
from boxilqr.errors import StepFailure

BENCHMARK_NAMES = ("pendulum", "cartpole", "acrobot")


@dataclass(frozen=True)
class DynamicsModel:
    """A continuous-time control system x' = f(x, u, t).

    ``kernel_id``/``kernel_params`` route the three built-in benchmarks to
    the compiled backend; user models leave them unset and go through the
    generic Python path.
    """

    name: str
    state_dim: int
    control_dim: int
    continuous_rhs: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    physical_params: dict = field(default_factory=dict)
    kernel_id: Optional[int] = None
    kernel_params: Optional[np.ndarray] = None
    continuous_jacobians: Optional[Callable] = None


@dataclass(frozen=True)
class DiscreteDynamics:
    """Fixed-step ZOH discretization of a model over a finite horizon."""

    model: DynamicsModel
    dt: float
    horizon: int
    integrator: str = "rk4"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.integrator != "rk4":
            raise ValueError(f"unsupported integrator {self.integrator!r}")

    @property
    def n(self) -> int:
        return self.model.state_dim

    @property
    def m(self) -> int:
        return self.model.control_dim

    @property
    def t_final(self) -> float:
        return self.dt * self.horizon


@dataclass(frozen=True)
class Jacobians:
    """Discrete-step Jacobians dF/dx (n, n) and dF/du (n, m)."""

    fx: np.ndarray
    fu: np.ndarray


# ---------------------------------------------------------------------------
# Built-in benchmarks (Table-driven horizons; physical parameters are the
# standard textbook values documented in the README).
# ---------------------------------------------------------------------------

_PENDULUM_PARAMS = {"m": 0.2, "l": 0.5, "g": 9.81, "b": 0.01}
_CARTPOLE_PARAMS = {"m_cart": 1.0, "m_pole": 0.1, "l": 0.5, "g": 9.81}
_ACROBOT_PARAMS = {
    "m1": 1.0, "m2": 1.0, "l1": 1.0, "l2": 1.0,
    "lc1": 0.5, "lc2": 0.5, "I1": 1.0 / 12.0, "I2": 1.0 / 12.0, "g": 9.81,
}

_BENCH_TIMING = {"pendulum": (5.0, 0.01), "cartpole": (10.0, 0.01), "acrobot": (10.0, 0.01)}


def _make_model(name: str) -> DynamicsModel:
    if name == "pendulum":
        kid = core.PENDULUM
        params = _PENDULUM_PARAMS
        vec = np.array([params["m"], params["l"], params["g"], params["b"]])
        n = 2
    elif name == "cartpole":
        kid = core.CARTPOLE
        params = _CARTPOLE_PARAMS
        vec = np.array([params["m_cart"], params["m_pole"], params["l"], params["g"]])
        n = 4
    elif name == "acrobot":
        kid = core.ACROBOT
        params = _ACROBOT_PARAMS
        vec = np.array([params[k] for k in
                        ("m1", "m2", "l1", "l2", "lc1", "lc2", "I1", "I2", "g")])
        n = 4
    else:
        raise ValueError(f"unknown benchmark {name!r}; expected one of {BENCHMARK_NAMES}")

    def f(x, u, t, _kid=kid, _vec=vec):
        return core.rhs(_kid, _vec, np.asarray(x, float), np.asarray(u, float))

    return DynamicsModel(
        name=name,
        state_dim=n,
        control_dim=1,
        continuous_rhs=f,
        physical_params=dict(params),
        kernel_id=kid,
        kernel_params=vec,
    )


def make_benchmark(name: str) -> DiscreteDynamics:
    """Benchmark system discretized with its standard t_f and dt."""
    model = _make_model(name)
    t_f, dt = _BENCH_TIMING[name]
    horizon = round(t_f / dt)
    assert abs(dt * horizon - t_f) < 1e-9 * t_f
    return DiscreteDynamics(model=model, dt=dt, horizon=horizon)


# ---------------------------------------------------------------------------
# Stepping and Jacobians
# ---------------------------------------------------------------------------

def _generic_rk4(model: DynamicsModel, x, u, t_sec, dt):
    f = model.continuous_rhs
    k1 = np.asarray(f(x, u, t_sec), float)
    k2 = np.asarray(f(x + 0.5 * dt * k1, u, t_sec + 0.5 * dt), float)
    k3 = np.asarray(f(x + 0.5 * dt * k2, u, t_sec + 0.5 * dt), float)
    k4 = np.asarray(f(x + dt * k3, u, t_sec + dt), float)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(dyn: DiscreteDynamics, x, u, t: int) -> np.ndarray:
    """One discrete step x_{t+1} = F(x_t, u_t; t)."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    if x.shape != (dyn.n,):
        raise ValueError(f"state has shape {x.shape}, expected ({dyn.n},)")
    if u.shape != (dyn.m,):
        raise ValueError(f"control has shape {u.shape}, expected ({dyn.m},)")
    if not 0 <= t < dyn.horizon:
        raise ValueError(f"time index {t} outside [0, {dyn.horizon})")
    model = dyn.model
    if model.kernel_id is not None:
        xn = core.rk4_step(model.kernel_id, model.kernel_params, x, u, dyn.dt)
    else:
        xn = _generic_rk4(model, x, u, t * dyn.dt, dyn.dt)
    if not np.all(np.isfinite(xn)):
        raise StepFailure(t)
    return xn


def jacobians(dyn: DiscreteDynamics, x, u, t: int) -> Jacobians:
    """Jacobians of ``step`` at (x, u, t); analytic where available, else
    central finite differences with h = 1e-6 * (1 + |component|)."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    model = dyn.model
    if model.kernel_id is not None:
        fx, fu = core.discrete_jacobians(model.kernel_id, model.kernel_params,
                                         x, u, dyn.dt)
        return Jacobians(fx=np.asarray(fx), fu=np.asarray(fu))
    n, m = dyn.n, dyn.m
    fx = np.empty((n, n))
    fu = np.empty((n, m))
    t_sec = t * dyn.dt
    for i in range(n):
        h = 1e-6 * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fx[:, i] = (_generic_rk4(model, xp, u, t_sec, dyn.dt)
                    - _generic_rk4(model, xm, u, t_sec, dyn.dt)) / (2 * h)
    for j in range(m):
        h = 1e-6 * (1.0 + abs(u[j]))
        up, um = u.copy(), u.copy()
        up[j] += h
        um[j] -= h
        fu[:, j] = (_generic_rk4(model, x, up, t_sec, dyn.dt)
                    - _generic_rk4(model, x, um, t_sec, dyn.dt)) / (2 * h)
    return Jacobians(fx=fx, fu=fu)


def linearize_trajectory(dyn: DiscreteDynamics, X: np.ndarray, U: np.ndarray):
    """Stacked Jacobians along a trajectory: (T, n, n) and (T, n, m)."""
    model = dyn.model
    if model.kernel_id is not None:
        FX, FU = core.linearize(model.kernel_id, model.kernel_params,
                                np.ascontiguousarray(X, float),
                                np.ascontiguousarray(U, float), dyn.dt)
        return np.asarray(FX), np.asarray(FU)
    T = U.shape[0]
    FX = np.empty((T, dyn.n, dyn.n))
    FU = np.empty((T, dyn.n, dyn.m))
    for t in range(T):
        jac = jacobians(dyn, X[t], U[t], t)
        FX[t], FU[t] = jac.fx, jac.fu
    return FX, FU


def open_loop_rollout(dyn: DiscreteDynamics, x0, U) -> np.ndarray:
    """States produced by applying the control sequence U from x0."""
    x0 = np.asarray(x0, float)
    U = np.asarray(U, float)
    model = dyn.model
    if model.kernel_id is not None:
        try:
            return np.asarray(core.rollout(model.kernel_id, model.kernel_params,
                                           x0, np.ascontiguousarray(U), dyn.dt))
        except FloatingPointError as exc:
            raise StepFailure(int(str(exc).rsplit(" ", 1)[-1])) from None
    X = np.empty((U.shape[0] + 1, dyn.n))
    X[0] = x0
    for t in range(U.shape[0]):
        X[t + 1] = step(dyn, X[t], U[t], t)
    return X
