"""Acceptance suite: one printed PASS/FAIL line per top-level guarantee.

The three constrained swing-up benchmarks are solved once in a
module-scoped fixture and shared by every check, so the whole suite runs
in roughly the time of the three solves.  Run with ``pytest -s`` to see
the verdict lines as they are produced; they are also visible in the
captured output of a failing test.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

import boxilqr.model as model_mod
from boxilqr import (BarrierState, BoxSpec, Problem, QuadraticCost,
                     Regularization, SolverConfig, Trajectory, backward_pass,
                     benchmark_problem, box_ilqr)
from boxilqr.analysis import fd_check, lqr_oracle, saturation_report
from boxilqr.cli import main as cli_main
from boxilqr.objective import barrier_derivatives, barrier_running
from boxilqr.solver import ilqr_solve, initial_barrier_state, initial_trajectory

from conftest import linear_dynamics

BENCHMARKS = ("pendulum", "cartpole", "acrobot")
CONTROL_BOUND = {"pendulum": 1.0, "cartpole": 2.0, "acrobot": 5.0}
# (index of the upright angle, index of the first angular rate)
ANGLE_INDEX = {"pendulum": 0, "cartpole": 2, "acrobot": 0}
RATE_INDICES = {"pendulum": (1,), "cartpole": (3,), "acrobot": (2, 3)}
ANGLE_TOL = {"pendulum": 0.1, "cartpole": 0.1, "acrobot": 0.2}
TIME_BUDGET_S = 120.0
CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def verdict(ok: bool, label: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {label}")
    assert ok, label


@pytest.fixture(scope="module")
def benchmark_runs():
    """Solve each fully-constrained benchmark once; reused by all checks."""
    runs = {}
    for name in BENCHMARKS:
        problem = benchmark_problem(name, "table")
        start = time.perf_counter()
        report = box_ilqr(problem, SolverConfig())
        runs[name] = (problem, report, time.perf_counter() - start)
    return runs


class TestConstraintSatisfaction:
    def test_bounds_hold_within_time_budget(self, benchmark_runs):
        ok = True
        detail = []
        for name in BENCHMARKS:
            problem, report, elapsed = benchmark_runs[name]
            traj = report.final_trajectory
            max_u = float(np.max(np.abs(traj.controls)))
            this = (report.status == "Converged"
                    and max_u <= CONTROL_BOUND[name] + 1e-6
                    and elapsed < TIME_BUDGET_S)
            if name == "cartpole":
                max_x1 = float(np.max(np.abs(traj.states[:, 0])))
                this = this and max_x1 <= 0.2 + 1e-4
                detail.append(f"{name} max|u|={max_u:.6f} "
                              f"max|x1|={max_x1:.6f} {elapsed:.1f}s")
            else:
                detail.append(f"{name} max|u|={max_u:.6f} {elapsed:.1f}s")
            ok = ok and this
        verdict(ok, "box constraints hold on all three benchmarks within "
                    f"the {TIME_BUDGET_S:.0f}s budget ({'; '.join(detail)})")


class TestSwingUp:
    def test_upright_with_small_rates_at_final_time(self, benchmark_runs):
        ok = True
        detail = []
        for name in BENCHMARKS:
            _, report, _ = benchmark_runs[name]
            xf = report.final_trajectory.states[-1]
            angle_err = abs(xf[ANGLE_INDEX[name]] - np.pi)
            rates = [abs(float(xf[i])) for i in RATE_INDICES[name]]
            if name == "acrobot":
                # second link must also end aligned with the first
                angle_err = max(angle_err, abs(float(xf[1])))
            this = angle_err < ANGLE_TOL[name] and all(r < 0.2 for r in rates)
            detail.append(f"{name} angle_err={angle_err:.4f} "
                          f"max_rate={max(rates):.4f}")
            ok = ok and this
        verdict(ok, "all three systems reach upright with angular speeds "
                    f"below 0.2 rad/s at the final time ({'; '.join(detail)})")


class TestBarrierSchedule:
    def test_failure_free_run_makes_exactly_34_reductions(self, benchmark_runs):
        ok = True
        detail = []
        for name in BENCHMARKS:
            _, report, _ = benchmark_runs[name]
            n_fail = sum(r.failed for r in report.outer_iterations)
            n = len(report.outer_iterations)
            this = (n_fail == 0 and n == 34)
            # weights follow 1e8 * 0.5^k exactly when no round fails
            sig = [float(r.sigma[0]) for r in report.outer_iterations]
            this = this and all(
                s == pytest.approx(1e8 * 0.5 ** i) for i, s in enumerate(sig))
            detail.append(f"{name} rounds={n} failures={n_fail}")
            ok = ok and this
        verdict(ok, "starting from weight 1e8 with factor 0.5 and floor "
                    f"0.01, every failure-free run performs exactly 34 "
                    f"outer reductions ({'; '.join(detail)})")

    def test_failed_round_reverts_weights_and_softens_factor(self):
        problem = benchmark_problem("pendulum", "table")
        calls = {"i": 0}

        def scripted(problem, warm, bs, cfg):
            i = calls["i"]
            calls["i"] += 1
            if i == 1:  # fail the first reduction, naming the control channel
                return warm, None, False, ([], [0]), [warm.total_cost], []
            return warm, None, True, ([], []), [warm.total_cost], [1.0]

        report = box_ilqr(problem, SolverConfig(), inner_solver=scripted)
        recs = report.outer_iterations
        softened = 0.5 * (1.0 / 0.95)
        ok = (report.status == "Converged"
              and [r.failed for r in recs[:3]] == [False, True, False]
              and recs[1].sigma[0] == 5e7           # the rejected reduction
              and recs[2].sigma[0] == 1e8           # reverted
              and recs[3].sigma[0] == pytest.approx(1e8 * softened)
              and recs[4].sigma[0] == pytest.approx(1e8 * softened ** 2))
        verdict(ok, "a failed inner solve reverts the barrier weights and "
                    "softens the reduction factor to min(1, r/0.95)")


class TestInnerLoopInvariants:
    def test_monotone_descent_and_strict_feasibility(self, benchmark_runs):
        ok = True
        for name in BENCHMARKS:
            problem, report, _ = benchmark_runs[name]
            for rec in report.outer_iterations:
                seq = rec.cost_sequence
                if len(seq) > 1:
                    ok = ok and bool(np.all(np.diff(seq) < 0))
            traj = report.final_trajectory
            box = problem.box
            for j in box.constrained_control_indices:
                col = traj.controls[:, j]
                ok = ok and bool(np.all(col > box.u_lower[j])
                                 and np.all(col < box.u_upper[j]))
            for i in box.constrained_state_indices:
                col = traj.states[:, i]
                ok = ok and bool(np.all(col > box.x_lower[i])
                                 and np.all(col < box.x_upper[i]))
        verdict(ok, "the augmented cost decreases monotonically within every "
                    "outer round and accepted iterates stay strictly inside "
                    "the box")


def _random_lq_problem(rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 3))
    T = int(rng.integers(3, 101))
    A_c = rng.normal(scale=0.4, size=(n, n)) - 0.5 * np.eye(n)
    B_c = rng.normal(size=(n, m))
    dyn = linear_dynamics(A_c, B_c, 0.05, T)
    W = rng.normal(size=(n, n))
    Wf = rng.normal(size=(n, n))
    V = rng.normal(size=(m, m))
    qc = QuadraticCost(Q=W @ W.T + 0.1 * np.eye(n),
                       R=V @ V.T + 0.5 * np.eye(m),
                       Qf=Wf @ Wf.T + 0.1 * np.eye(n),
                       goal=rng.normal(size=n))
    return Problem(dyn, qc, BoxSpec.unconstrained(n, m), np.zeros(n)), T


class TestLinearQuadraticEquivalence:
    def test_matches_independent_riccati_recursion(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        one_shot = True
        for _ in range(20):
            problem, T = _random_lq_problem(rng)
            dyn = problem.dynamics
            nominal = Trajectory(np.zeros((T + 1, dyn.n)),
                                 np.zeros((T, dyn.m)), 0.0)
            bs = BarrierState(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0))
            gs = backward_pass(problem, nominal, bs, Regularization())
            jac = model_mod.jacobians(dyn, np.zeros(dyn.n), np.zeros(dyn.m), 0)
            ref = lqr_oracle(jac.fx, jac.fu, problem.cost.Q, problem.cost.R,
                             problem.cost.Qf, problem.cost.goal, T)
            for a, b in ((gs.K, ref.K), (gs.k, ref.k), (gs.S, ref.S),
                         (gs.v, ref.v)):
                worst = max(worst, float(np.max(np.abs(a - b))
                                         / (1 + np.max(np.abs(b)))))
            # a linear-quadratic problem is solved exactly by one full step
            cfg = SolverConfig()
            warm = initial_trajectory(problem, cfg)
            _, _, success, _, _, alphas = ilqr_solve(
                problem, warm, initial_barrier_state(problem.box, cfg), cfg)
            one_shot = one_shot and success and alphas == [1.0]
        ok = worst < 1e-8 and one_shot
        verdict(ok, "backward pass matches an independent Riccati recursion "
                    f"on 20 random linear-quadratic problems (max rel err "
                    f"{worst:.2e} < 1e-8) and each is solved in one full step")


def _interior_point(rng, problem):
    """Random state/control strictly inside the box (95% of the half-width)."""
    box = problem.box
    n, m = problem.dynamics.n, problem.dynamics.m
    x = rng.normal(scale=1.5, size=n)
    u = rng.normal(scale=1.5, size=m)
    for i in box.constrained_state_indices:
        c = 0.5 * (box.x_lower[i] + box.x_upper[i])
        h = 0.5 * (box.x_upper[i] - box.x_lower[i])
        x[i] = c + 0.95 * h * rng.uniform(-1, 1)
    for j in box.constrained_control_indices:
        c = 0.5 * (box.u_lower[j] + box.u_upper[j])
        h = 0.5 * (box.u_upper[j] - box.u_lower[j])
        u[j] = c + 0.95 * h * rng.uniform(-1, 1)
    return x, u


class TestDerivativeCorrectness:
    def test_jacobians_and_barrier_derivatives_match_fd(self):
        rng = np.random.default_rng(99)
        worst_jac = 0.0
        worst_bar = 0.0
        for name in BENCHMARKS:
            problem = benchmark_problem(name, "table")
            dyn = problem.dynamics
            box = problem.box
            bs = initial_barrier_state(box, SolverConfig())
            bs.mu[:] = 2.0
            bs.sigma[:] = 2.0
            for _ in range(100):
                x, u = _interior_point(rng, problem)
                jac = model_mod.jacobians(dyn, x, u, 0)
                # independent central differences at a different step size
                fx_fd = np.empty_like(jac.fx)
                fu_fd = np.empty_like(jac.fu)
                for i in range(dyn.n):
                    h = 1e-5 * (1 + abs(x[i]))
                    xp, xm = x.copy(), x.copy()
                    xp[i] += h
                    xm[i] -= h
                    fx_fd[:, i] = (model_mod.step(dyn, xp, u, 0)
                                   - model_mod.step(dyn, xm, u, 0)) / (2 * h)
                for j in range(dyn.m):
                    h = 1e-5 * (1 + abs(u[j]))
                    up, um = u.copy(), u.copy()
                    up[j] += h
                    um[j] -= h
                    fu_fd[:, j] = (model_mod.step(dyn, x, up, 0)
                                   - model_mod.step(dyn, x, um, 0)) / (2 * h)
                worst_jac = max(
                    worst_jac,
                    float(np.max(np.abs(jac.fx - fx_fd))
                          / max(1.0, np.max(np.abs(fx_fd)))),
                    float(np.max(np.abs(jac.fu - fu_fd))
                          / max(1.0, np.max(np.abs(fu_fd)))))
                d = barrier_derivatives(box, bs, x, u)
                worst_bar = max(worst_bar, fd_check(
                    lambda xx: barrier_running(box, bs, xx, u), x, d.cx))
                worst_bar = max(worst_bar, fd_check(
                    lambda uu: barrier_running(box, bs, x, uu), u, d.cu))
                worst_bar = max(worst_bar, fd_check(
                    lambda xx: barrier_derivatives(box, bs, xx, u).cx,
                    x, d.cxx))
                worst_bar = max(worst_bar, fd_check(
                    lambda uu: barrier_derivatives(box, bs, x, uu).cu,
                    u, d.cuu))
        ok = worst_jac < 1e-5 and worst_bar < 1e-5
        verdict(ok, "dynamics Jacobians and barrier gradients/Hessians agree "
                    f"with central finite differences at 100 interior points "
                    f"per system (worst {max(worst_jac, worst_bar):.2e} < 1e-5)")


class TestGainsVanishAtSaturation:
    def test_feedback_rows_collapse_on_saturated_segments(self, benchmark_runs):
        ok = True
        checked = 0
        detail = []
        for name in BENCHMARKS:
            problem, report, _ = benchmark_runs[name]
            if report.final_gains is None:
                continue
            sat = saturation_report(report.final_trajectory, report.final_gains,
                                    problem.box, threshold_frac=0.01)
            for j, steps in sat.saturated_steps.items():
                if not steps:
                    continue
                checked += 1
                ratio = sat.saturated_max_norm[j] / sat.peak_row_norm[j]
                detail.append(f"{name} ch{j} ratio={ratio:.4f}")
                ok = ok and ratio < 0.1
        ok = ok and checked >= 1
        verdict(ok, "feedback gain rows on saturated control segments stay "
                    f"below 10% of their peak norm ({'; '.join(detail)})")


class TestBarrierRegularizes:
    def test_barrier_curvature_raises_smallest_control_eigenvalue(self):
        rng = np.random.default_rng(5150)
        problem = benchmark_problem("pendulum", "table")
        dyn = problem.dynamics
        qc = problem.cost
        bs = initial_barrier_state(problem.box, SolverConfig())
        bs.sigma[:] = 1.0
        ok = True
        for _ in range(50):
            x, u = _interior_point(rng, problem)
            jac = model_mod.jacobians(dyn, x, u, 0)
            base = qc.R + jac.fu.T @ qc.Qf @ jac.fu
            withb = base + barrier_derivatives(problem.box, bs, x, u).cuu
            lo_without = float(np.linalg.eigvalsh(base).min())
            lo_with = float(np.linalg.eigvalsh(withb).min())
            ok = ok and lo_with > lo_without
        verdict(ok, "at 50 random interior points the barrier curvature "
                    "strictly raises the smallest eigenvalue of the control "
                    "Hessian")


class TestDeterminism:
    def test_repeated_cli_solves_are_byte_identical(self, tmp_path):
        cfg = CONFIG_DIR / "pendulum.json"
        a, b = tmp_path / "a", tmp_path / "b"
        code_a = cli_main(["solve", str(cfg), "--out", str(a), "--quiet"])
        code_b = cli_main(["solve", str(cfg), "--out", str(b), "--quiet"])
        same = all(
            (a / "pendulum" / f).read_bytes() == (b / "pendulum" / f).read_bytes()
            for f in ("trajectory.csv", "report.json"))
        ok = code_a == 0 and code_b == 0 and same
        verdict(ok, "two CLI solves of the same configuration produce "
                    "byte-identical trajectory.csv and report.json")


class TestPlotRendering:
    def test_figures_render_with_bounds_and_saturation_bands(self, tmp_path):
        plots = pytest.importorskip("boxilqr_plots")
        cfg = CONFIG_DIR / "pendulum.json"
        out = tmp_path / "run"
        assert cli_main(["solve", str(cfg), "--out", str(out), "--quiet",
                         "--emit-gains"]) == 0
        run_dir = out / "pendulum"
        figures = []
        for kind in ("trajectory", "control", "gains"):
            spec_path = tmp_path / f"{kind}.json"
            fig_path = tmp_path / f"{kind}.svg"
            spec_path.write_text(json.dumps({
                "schema": 1,
                "run": str(run_dir),
                "kind": kind,
                "output": str(fig_path),
            }))
            figures.append((spec_path, fig_path))
        codes = [plots.cli.main(["render", str(s)]) for s, _ in figures]
        ok = all(c == 0 for c in codes) and all(
            f.exists() and f.stat().st_size > 0 for _, f in figures)
        # the control figure must carry the bound lines and shaded bands
        control_svg = figures[1][1].read_text()
        report = json.loads((run_dir / "report.json").read_text())
        n_bands = sum(len(ch["saturated_intervals"])
                      for ch in report["saturation"]["channels"].values())
        ok = ok and control_svg.count('id="bound-line') >= 2
        ok = ok and control_svg.count('id="saturation-band') == n_bands
        verdict(ok, "plot tool renders trajectory/control/gain figures with "
                    "bound lines and saturation bands matching the report")
