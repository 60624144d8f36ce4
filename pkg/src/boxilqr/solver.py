"""Inner iLQR loop and the adaptive barrier-relaxation outer loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from boxilqr import model as model_mod
from boxilqr import objective
from boxilqr.errors import (InfeasibleInitialTrajectory, InfeasiblePoint,
                            NoAcceptableStep, NonPositiveDefinite)
from boxilqr.objective import BarrierState, BoxSpec, QuadraticCost
from boxilqr.riccati import GainSchedule, Regularization, backward_pass
from boxilqr.rollout import LineSearchConfig, Trajectory, line_search

# slack below this fraction of the box width implicates a barrier channel
# in an inner-solve failure
_FAIL_SLACK_FRAC = 1e-6


@dataclass(frozen=True)
class Problem:
    dynamics: model_mod.DiscreteDynamics
    cost: QuadraticCost
    box: BoxSpec
    initial_state: np.ndarray

    def __post_init__(self):
        ix = self.box.constrained_state_indices
        x0 = self.initial_state
        for i in ix:
            if not self.box.x_lower[i] < x0[i] < self.box.x_upper[i]:
                side = -1 if x0[i] <= self.box.x_lower[i] else +1
                raise InfeasiblePoint("x", int(i), side, 0)


@dataclass
class SolverConfig:
    """Default hyperparameters for the benchmark suite."""

    mu0: float = 1e8
    sigma0: float = 1e8
    r_mu0: float = 0.5
    r_sigma0: float = 0.5
    beta_r: float = 1.0 / 0.95
    eps_barrier: float = 0.01
    inner_max_iters: int = 500
    inner_grad_tol: float = 1e-8
    outer_max_iters: int = 200
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    reg: Regularization = field(default_factory=Regularization)

    def __post_init__(self):
        for r in (self.r_mu0, self.r_sigma0):
            if not 0 < r < 1:
                raise ValueError("reduction factors must lie in (0, 1)")
        if self.beta_r <= 1:
            raise ValueError("beta_r must be > 1")
        if self.eps_barrier <= 0:
            raise ValueError("eps_barrier must be positive")


@dataclass
class OuterRecord:
    mu: np.ndarray
    sigma: np.ndarray
    inner_iters: int
    final_inner_cost: float
    cost_sequence: List[float]
    accepted_alphas: List[float]
    failed: bool
    failed_mu_indices: List[int]
    failed_sigma_indices: List[int]


@dataclass
class SolveReport:
    outer_iterations: List[OuterRecord]
    final_trajectory: Trajectory
    final_gains: Optional[GainSchedule]
    status: str  # Converged | InnerFailure | IterationCap


# Benchmark weights, goals, and boxes (the built-in problem suite).
# Q and R weight the continuous-time running cost; the discrete stage cost
# integrates it over one interval, so they are scaled by dt when the
# Problem is built.  Qf weights the terminal cost and is used as-is.
_BENCH_SETUP = {
    # name: (Q scale, R scale, Qf scale, goal, |u| bound, (x index, bound))
    "pendulum": (3.0, 3.0, 30.0, (np.pi, 0.0), 1.0, None),
    "cartpole": (10.0, 10.0, 1e4, (0.0, 0.0, np.pi, 0.0), 2.0, (0, 0.2)),
    "acrobot": (500.0, 10.0, 5e4, (np.pi, 0.0, 0.0, 0.0), 5.0, None),
}


def benchmark_problem(name: str, constraints: str = "table",
                      t_final: Optional[float] = None,
                      dt: Optional[float] = None) -> Problem:
    """Swing-up benchmark with its standard weights and box constraints.

    constraints: "table" uses the standard box for the system, "control"
    keeps only the control bounds, "state" only the state bounds, and
    "none" removes the box entirely.  t_final/dt override the standard
    timing (useful for quick runs).
    """
    if name not in _BENCH_SETUP:
        raise ValueError(f"unknown benchmark {name!r}; "
                         f"expected one of {sorted(_BENCH_SETUP)}")
    if constraints not in ("table", "control", "state", "none"):
        raise ValueError(f"unknown constraint selection {constraints!r}")
    dyn = model_mod.make_benchmark(name)
    if t_final is not None or dt is not None:
        new_dt = dyn.dt if dt is None else float(dt)
        new_tf = dyn.t_final if t_final is None else float(t_final)
        horizon = round(new_tf / new_dt)
        if horizon <= 0 or abs(new_dt * horizon - new_tf) > 1e-9 * max(new_tf, 1.0):
            raise ValueError(f"t_final {new_tf} is not a multiple of dt {new_dt}")
        dyn = model_mod.DiscreteDynamics(model=dyn.model, dt=new_dt,
                                         horizon=horizon)
    q, r, qf, goal, u_bound, x_bound = _BENCH_SETUP[name]
    n = dyn.n
    qc = QuadraticCost(Q=dyn.dt * q * np.eye(n), R=dyn.dt * r * np.eye(1),
                       Qf=qf * np.eye(n), goal=np.array(goal))
    x_lo = np.full(n, -np.inf)
    x_hi = np.full(n, np.inf)
    u_lo = np.full(1, -np.inf)
    u_hi = np.full(1, np.inf)
    if constraints in ("table", "control"):
        u_lo[0], u_hi[0] = -u_bound, u_bound
    if constraints in ("table", "state") and x_bound is not None:
        i, b = x_bound
        x_lo[i], x_hi[i] = -b, b
    box = BoxSpec(x_lo, x_hi, u_lo, u_hi)
    return Problem(dyn, qc, box, np.zeros(n))


def initial_barrier_state(box: BoxSpec, cfg: SolverConfig) -> BarrierState:
    n1 = box.constrained_state_indices.size
    m1 = box.constrained_control_indices.size
    return BarrierState(
        mu=np.full(n1, cfg.mu0),
        sigma=np.full(m1, cfg.sigma0),
        r_mu=np.full(n1, cfg.r_mu0),
        r_sigma=np.full(m1, cfg.r_sigma0),
    )


def initial_trajectory(problem: Problem, cfg: SolverConfig,
                       controls: Optional[np.ndarray] = None) -> Trajectory:
    """Roll out the zero (or user) control sequence and verify strict
    feasibility; no phase-I search is attempted."""
    dyn = problem.dynamics
    if controls is None:
        controls = np.zeros((dyn.horizon, dyn.m))
    controls = np.asarray(controls, float)
    if controls.shape != (dyn.horizon, dyn.m):
        raise ValueError(
            f"control sequence has shape {controls.shape}, "
            f"expected ({dyn.horizon}, {dyn.m})")
    X = model_mod.open_loop_rollout(dyn, problem.initial_state, controls)
    viol = objective._feasibility_violation(X, controls, problem.box)
    if viol is not None:
        kind, index, side, t = viol
        raise InfeasibleInitialTrajectory(kind, index, side, t)
    bs = initial_barrier_state(problem.box, cfg)
    cost = objective.trajectory_cost(problem.cost, problem.box, bs, X, controls)
    return Trajectory(states=X, controls=controls, total_cost=cost)


def _implicated_indices(traj: Trajectory, box: BoxSpec):
    """Constrained channels whose slack anywhere along the trajectory is
    below _FAIL_SLACK_FRAC of the box width (infinite widths never
    qualify)."""
    mu_idx, sigma_idx = [], []
    for out, idx, V, lo, hi in (
            (mu_idx, box.constrained_state_indices, traj.states,
             box.x_lower, box.x_upper),
            (sigma_idx, box.constrained_control_indices, traj.controls,
             box.u_lower, box.u_upper)):
        for pos, i in enumerate(idx):
            width = hi[i] - lo[i]
            if not np.isfinite(width):
                continue
            slack = min(float(np.min(V[:, i] - lo[i])),
                        float(np.min(hi[i] - V[:, i])))
            if slack < _FAIL_SLACK_FRAC * width:
                out.append(pos)
    return mu_idx, sigma_idx


def ilqr_solve(problem: Problem, warm_start: Trajectory, bs: BarrierState,
               cfg: SolverConfig):
    """Inner loop at fixed (mu, sigma).

    Returns (trajectory, gains, success, (failed_mu_idx, failed_sigma_idx),
    cost_sequence, accepted_alphas).  The warm start's cost is re-evaluated
    at the given barrier weights before iterating."""
    cost = objective.trajectory_cost(problem.cost, problem.box, bs,
                                     warm_start.states, warm_start.controls)
    traj = Trajectory(warm_start.states, warm_start.controls, cost)
    costs = [cost]
    alphas: List[float] = []
    gains: Optional[GainSchedule] = None
    for _ in range(cfg.inner_max_iters):
        try:
            gains = backward_pass(problem, traj, bs, cfg.reg)
        except NonPositiveDefinite:
            return traj, gains, False, _implicated_indices(traj, problem.box), costs, alphas
        # relative test: predicted reductions far below the cost scale are
        # numerically meaningless and signal convergence
        if (gains.expected_reduction_sum
                <= cfg.inner_grad_tol * (1.0 + abs(traj.total_cost))):
            return traj, gains, True, ([], []), costs, alphas
        try:
            traj, alpha = line_search(problem, traj, gains, cfg.line_search, bs)
        except NoAcceptableStep:
            return traj, gains, False, _implicated_indices(traj, problem.box), costs, alphas
        cfg.reg.reset()
        costs.append(traj.total_cost)
        alphas.append(alpha)
    # iteration cap: report the progress made; treated as a successful
    # (if unconverged) solve by the outer loop
    return traj, gains, True, ([], []), costs, alphas


def box_ilqr(problem: Problem, cfg: Optional[SolverConfig] = None,
             warm_start: Optional[Trajectory] = None,
             inner_solver: Callable = ilqr_solve) -> SolveReport:
    """Adaptive barrier-relaxation outer loop.

    Reduces (mu, sigma) element-wise by the current factors after every
    successful inner solve; on failure reverts the parameters and softens
    the implicated factors by beta_r before retrying."""
    if cfg is None:
        cfg = SolverConfig()
    bs = initial_barrier_state(problem.box, cfg)
    traj = warm_start if warm_start is not None else initial_trajectory(problem, cfg)

    records: List[OuterRecord] = []
    gains: Optional[GainSchedule] = None

    if bs.mu.size == 0 and bs.sigma.size == 0:
        traj, gains, success, failed, costs, alphas = inner_solver(
            problem, traj, bs, cfg)
        records.append(OuterRecord(
            mu=bs.mu.copy(), sigma=bs.sigma.copy(), inner_iters=len(alphas),
            final_inner_cost=traj.total_cost, cost_sequence=costs,
            accepted_alphas=alphas, failed=not success,
            failed_mu_indices=list(failed[0]), failed_sigma_indices=list(failed[1])))
        status = "Converged" if success else "InnerFailure"
        return SolveReport(records, traj, gains, status)

    mu_prev = bs.mu.copy()
    sigma_prev = bs.sigma.copy()
    status = "IterationCap"
    for _ in range(cfg.outer_max_iters):
        if not (_maxnorm(bs.mu) > cfg.eps_barrier
                or _maxnorm(bs.sigma) > cfg.eps_barrier):
            status = "Converged"
            break
        new_traj, new_gains, success, failed, costs, alphas = inner_solver(
            problem, traj, bs, cfg)
        records.append(OuterRecord(
            mu=bs.mu.copy(), sigma=bs.sigma.copy(), inner_iters=len(alphas),
            final_inner_cost=new_traj.total_cost, cost_sequence=costs,
            accepted_alphas=alphas, failed=not success,
            failed_mu_indices=list(failed[0]), failed_sigma_indices=list(failed[1])))
        if not success:
            failed_mu, failed_sigma = failed
            if np.all(bs.r_mu >= 1.0) and np.all(bs.r_sigma >= 1.0):
                status = "InnerFailure"
                break
            bs.mu[:] = mu_prev
            bs.sigma[:] = sigma_prev
            if failed_mu:
                for i in failed_mu:
                    bs.r_mu[i] = min(1.0, bs.r_mu[i] * cfg.beta_r)
            elif failed_sigma:
                for j in failed_sigma:
                    bs.r_sigma[j] = min(1.0, bs.r_sigma[j] * cfg.beta_r)
            else:
                bs.r_mu[:] = np.minimum(1.0, bs.r_mu * cfg.beta_r)
                bs.r_sigma[:] = np.minimum(1.0, bs.r_sigma * cfg.beta_r)
            continue
        traj = new_traj
        gains = new_gains
        mu_prev = bs.mu.copy()
        sigma_prev = bs.sigma.copy()
        bs.mu *= bs.r_mu
        bs.sigma *= bs.r_sigma
    return SolveReport(records, traj, gains, status)


def _maxnorm(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0
