import numpy as np
import pytest

from boxilqr import (BoxSpec, InfeasibleInitialTrajectory, InfeasiblePoint,
                     Problem, QuadraticCost, SolverConfig, Trajectory,
                     box_ilqr, ilqr_solve, initial_trajectory)
from boxilqr import model as model_mod
from boxilqr.solver import initial_barrier_state

from conftest import linear_dynamics, pendulum_problem


class TestProblem:
    def test_rejects_initial_state_on_bound(self):
        dyn = model_mod.make_benchmark("cartpole")
        qc = QuadraticCost(10 * np.eye(4), 10 * np.eye(1), 1e4 * np.eye(4),
                           np.array([0.0, 0.0, np.pi, 0.0]))
        box = BoxSpec(np.array([-0.2, -np.inf, -np.inf, -np.inf]),
                      np.array([0.2, np.inf, np.inf, np.inf]),
                      np.array([-2.0]), np.array([2.0]))
        with pytest.raises(InfeasiblePoint) as exc:
            Problem(dyn, qc, box, np.array([0.2, 0.0, 0.0, 0.0]))
        assert exc.value.kind == "x"
        assert exc.value.side == +1


class TestSolverConfig:
    def test_defaults_match_benchmark_table(self):
        cfg = SolverConfig()
        assert cfg.mu0 == 1e8
        assert cfg.sigma0 == 1e8
        assert cfg.r_mu0 == 0.5
        assert cfg.eps_barrier == 0.01
        assert cfg.beta_r == pytest.approx(1.0 / 0.95)

    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(r_mu0=1.0)
        with pytest.raises(ValueError):
            SolverConfig(beta_r=0.9)
        with pytest.raises(ValueError):
            SolverConfig(eps_barrier=0.0)


class TestInitialTrajectory:
    def test_zero_controls_default(self):
        problem = pendulum_problem(bound=1.0)
        traj = initial_trajectory(problem, SolverConfig())
        assert np.all(traj.controls == 0.0)
        assert np.allclose(traj.states, 0.0)

    def test_rejects_out_of_box_controls(self):
        problem = pendulum_problem(bound=1.0)
        U = np.zeros((problem.dynamics.horizon, 1))
        U[10, 0] = 1.5
        with pytest.raises(InfeasibleInitialTrajectory) as exc:
            initial_trajectory(problem, SolverConfig(), controls=U)
        assert exc.value.kind == "u"
        assert exc.value.t == 10

    def test_rejects_wrong_shape(self):
        problem = pendulum_problem(bound=1.0)
        with pytest.raises(ValueError, match="shape"):
            initial_trajectory(problem, SolverConfig(), controls=np.zeros((3, 1)))

    def test_cost_uses_initial_barrier_weights(self):
        problem = pendulum_problem(bound=1.0)
        traj = initial_trajectory(problem, SolverConfig())
        # the hanging trajectory sits at the center of the control box, so
        # the barrier vanishes and the cost is purely quadratic
        from boxilqr import objective
        e2 = np.pi ** 2
        T = problem.dynamics.horizon
        expect = T * 1.5 * e2 + 15 * e2
        assert traj.total_cost == pytest.approx(expect, rel=1e-12)


class TestInnerSolve:
    def test_unconstrained_linear_converges_in_one_iteration(self):
        A_c = np.array([[0.0, 1.0], [0.0, 0.0]])
        B_c = np.array([[0.0], [1.0]])
        dyn = linear_dynamics(A_c, B_c, 0.05, 40)
        qc = QuadraticCost(np.eye(2), np.eye(1), 100 * np.eye(2),
                           np.array([1.0, 0.0]))
        problem = Problem(dyn, qc, BoxSpec.unconstrained(2, 1), np.zeros(2))
        cfg = SolverConfig()
        warm = initial_trajectory(problem, cfg)
        bs = initial_barrier_state(problem.box, cfg)
        traj, gains, success, failed, costs, alphas = ilqr_solve(
            problem, warm, bs, cfg)
        assert success
        assert alphas == [1.0]  # exact quadratic model: one full step
        assert costs[1] < costs[0]

    def test_costs_monotone_on_pendulum(self):
        problem = pendulum_problem(bound=1.0)
        cfg = SolverConfig(inner_max_iters=30)
        warm = initial_trajectory(problem, cfg)
        bs = initial_barrier_state(problem.box, cfg)
        bs.mu = bs.mu[:0]            # no state constraints on this problem
        bs.sigma[:] = 1.0
        traj, gains, success, failed, costs, alphas = ilqr_solve(
            problem, warm, bs, cfg)
        assert success
        diffs = np.diff(costs)
        assert np.all(diffs < 0)
        assert np.max(np.abs(traj.controls)) < 1.0

    def test_warm_start_cost_reevaluated(self):
        problem = pendulum_problem(bound=1.0)
        cfg = SolverConfig()
        warm = initial_trajectory(problem, cfg)
        stale = Trajectory(warm.states, warm.controls, total_cost=-123.0)
        bs = initial_barrier_state(problem.box, cfg)
        _, _, _, _, costs, _ = ilqr_solve(
            problem, stale, bs, SolverConfig(inner_max_iters=1))
        assert costs[0] == pytest.approx(warm.total_cost)


def _schedule_inner(outcomes):
    """Stub inner solver that replays a scripted success/failure sequence."""
    calls = {"i": 0}

    def inner(problem, warm, bs, cfg):
        i = calls["i"]
        calls["i"] += 1
        out = outcomes[i] if i < len(outcomes) else True
        if out is True:
            return warm, None, True, ([], []), [warm.total_cost], [1.0]
        failed_mu, failed_sigma = out
        return warm, None, False, (failed_mu, failed_sigma), [warm.total_cost], []

    return inner, calls


class TestOuterLoop:
    def make_problem(self):
        return pendulum_problem(bound=1.0)

    def test_failure_free_run_counts_reductions(self):
        """mu0 = 1e8 halved per round reaches eps = 0.01 in exactly 34
        reductions: 1e8 * 0.5^33 = 0.0116 > 0.01 >= 1e8 * 0.5^34."""
        problem = self.make_problem()
        cfg = SolverConfig()
        inner, calls = _schedule_inner([])
        report = box_ilqr(problem, cfg, inner_solver=inner)
        assert report.status == "Converged"
        assert len(report.outer_iterations) == 34
        assert not any(r.failed for r in report.outer_iterations)
        sig = [float(r.sigma[0]) for r in report.outer_iterations]
        assert sig[0] == 1e8
        assert sig[1] == 5e7
        assert sig[-1] == pytest.approx(1e8 * 0.5 ** 33)
        assert sig[-1] > cfg.eps_barrier >= sig[-1] * 0.5

    def test_failure_reverts_and_softens_named_channel(self):
        problem = self.make_problem()
        cfg = SolverConfig()
        # succeed at 1e8, fail the reduction to 5e7, then recover
        inner, calls = _schedule_inner([True, ([], [0])])
        report = box_ilqr(problem, cfg, inner_solver=inner)
        assert report.status == "Converged"
        recs = report.outer_iterations
        assert [r.failed for r in recs[:3]] == [False, True, False]
        assert recs[1].failed_sigma_indices == [0]
        assert recs[0].sigma[0] == 1e8
        assert recs[1].sigma[0] == 5e7
        # after the failure the weights revert and the solve repeats at the
        # last successful value before reducing by the softened factor
        assert recs[2].sigma[0] == 1e8
        assert recs[3].sigma[0] == pytest.approx(1e8 * 0.5 / 0.95)
        # subsequent reductions keep using the softened factor
        assert recs[4].sigma[0] == pytest.approx(1e8 * (0.5 / 0.95) ** 2)

    def test_unattributed_failure_softens_everything(self):
        problem = self.make_problem()
        cfg = SolverConfig()
        inner, calls = _schedule_inner([([], [])])
        report = box_ilqr(problem, cfg, inner_solver=inner)
        assert report.status == "Converged"
        recs = report.outer_iterations
        assert recs[0].failed
        assert recs[1].sigma[0] == 1e8  # reverted
        assert recs[2].sigma[0] == pytest.approx(1e8 * 0.5 / 0.95)

    def test_persistent_failure_reports_inner_failure(self):
        problem = self.make_problem()
        cfg = SolverConfig()
        always_fail, _ = _schedule_inner([([], [0])] * 10000)
        report = box_ilqr(problem, cfg, inner_solver=always_fail)
        assert report.status == "InnerFailure"
        # factors were driven all the way to 1 before giving up
        assert all(r.failed for r in report.outer_iterations)

    def test_unconstrained_problem_single_inner_solve(self):
        problem = pendulum_problem(bound=None)
        inner, calls = _schedule_inner([True])
        report = box_ilqr(problem, SolverConfig(), inner_solver=inner)
        assert calls["i"] == 1
        assert report.status == "Converged"
        assert len(report.outer_iterations) == 1

    def test_iteration_cap_status(self):
        problem = self.make_problem()
        cfg = SolverConfig(outer_max_iters=5)
        inner, _ = _schedule_inner([])
        report = box_ilqr(problem, cfg, inner_solver=inner)
        assert report.status == "IterationCap"
        assert len(report.outer_iterations) == 5


class TestEndToEndPendulum:
    def test_constrained_swing_up(self):
        problem = pendulum_problem(bound=1.0)
        report = box_ilqr(problem, SolverConfig())
        assert report.status == "Converged"
        assert len(report.outer_iterations) == 34
        X, U = report.final_trajectory.states, report.final_trajectory.controls
        assert abs(X[-1, 0] - np.pi) < 0.05
        assert abs(X[-1, 1]) < 0.1
        assert np.max(np.abs(U)) < 1.0
        # the bound binds: without it more torque would be used
        assert np.max(np.abs(U)) > 0.9
