import numpy as np
import pytest

from boxilqr import BoxSpec, Trajectory
from boxilqr.analysis import fd_check, lqr_oracle, saturation_report
from boxilqr.riccati import GainSchedule


def gains_with_rows(row_norm_seq):
    """1-control gain schedule whose |K| row at time t is row_norm_seq[t]."""
    T = len(row_norm_seq)
    K = np.zeros((T, 1, 2))
    K[:, 0, 0] = row_norm_seq
    return GainSchedule(k=np.zeros((T, 1)), K=K, v=np.zeros((T + 1, 2)),
                        S=np.zeros((T + 1, 2, 2)), expected_reduction_sum=0.0)


class TestSaturationReport:
    def box(self):
        return BoxSpec(np.full(2, -np.inf), np.full(2, np.inf),
                       np.array([-1.0]), np.array([1.0]))

    def test_classifies_saturated_steps(self):
        U = np.array([[0.0], [0.999], [-0.999], [0.5], [0.9999]])
        traj = Trajectory(np.zeros((6, 2)), U, 0.0)
        gs = gains_with_rows([1.0, 2.0, 3.0, 4.0, 5.0])
        rep = saturation_report(traj, gs, self.box(), threshold_frac=0.01)
        # slack fraction threshold 0.01 on width 2 -> slack < 0.02
        assert rep.saturated_steps[0] == [1, 2, 4]
        assert rep.peak_row_norm[0] == 5.0
        assert rep.saturated_max_norm[0] == 5.0

    def test_no_saturation_gives_zero_max(self):
        U = np.zeros((4, 1))
        traj = Trajectory(np.zeros((5, 2)), U, 0.0)
        gs = gains_with_rows([1.0, 1.0, 1.0, 1.0])
        rep = saturation_report(traj, gs, self.box())
        assert rep.saturated_steps[0] == []
        assert rep.saturated_max_norm[0] == 0.0

    def test_unbounded_channel_skipped(self):
        box = BoxSpec(np.full(2, -np.inf), np.full(2, np.inf),
                      np.array([0.0]), np.array([np.inf]))
        U = np.full((3, 1), 5.0)
        traj = Trajectory(np.zeros((4, 2)), U, 0.0)
        rep = saturation_report(traj, gains_with_rows([1, 1, 1]), box)
        assert rep.saturated_steps == {}

    def test_row_norms_shape(self):
        gs = gains_with_rows([1.0, 2.0])
        traj = Trajectory(np.zeros((3, 2)), np.zeros((2, 1)), 0.0)
        rep = saturation_report(traj, gs, self.box())
        assert rep.gain_row_norms.shape == (2, 1)
        assert rep.gain_row_norms[1, 0] == 2.0


class TestLqrOracle:
    def test_scalar_one_step(self):
        # x' = x + u (A=1, B=1), Q=0, R=1, Qf=q, goal=g, T=1 from x0:
        # u* = q g / (1 + q) at x0 = 0
        q, g = 4.0, 3.0
        gs = lqr_oracle(np.eye(1), np.eye(1), np.zeros((1, 1)), np.eye(1),
                        np.array([[q]]), np.array([g]), 1)
        assert gs.k[0, 0] == pytest.approx(q * g / (1 + q))
        assert gs.K[0, 0, 0] == pytest.approx(-q / (1 + q))
        assert gs.S[0, 0, 0] == pytest.approx(q - q * q / (1 + q))

    def test_infinite_horizon_limit(self):
        """For long horizons the leading gain approaches the stationary
        solution of the discrete algebraic Riccati equation."""
        from scipy.linalg import solve_discrete_are
        A = np.array([[1.0, 0.1], [0.0, 1.0]])
        B = np.array([[0.0], [0.1]])
        Q = np.eye(2)
        R = np.eye(1)
        gs = lqr_oracle(A, B, Q, R, Q, np.zeros(2), 400)
        S_inf = solve_discrete_are(A, B, Q, R)
        K_inf = -np.linalg.solve(R + B.T @ S_inf @ B, B.T @ S_inf @ A)
        assert np.max(np.abs(gs.K[0] - K_inf)) < 1e-9
        assert np.max(np.abs(gs.S[0] - S_inf)) < 1e-6

    def test_closed_loop_optimality(self):
        """The oracle policy beats nearby perturbed policies on the exact
        rolled-out cost (direct certificate of optimality)."""
        rng = np.random.default_rng(5)
        A = np.array([[1.0, 0.05], [-0.05, 0.95]])
        B = np.array([[0.0], [0.05]])
        Q = np.eye(2)
        R = 2 * np.eye(1)
        Qf = 10 * np.eye(2)
        goal = np.array([1.0, 0.0])
        T = 50
        gs = lqr_oracle(A, B, Q, R, Qf, goal, T)

        def rollout_cost(k, K, x0):
            x = x0.copy()
            c = 0.0
            for t in range(T):
                u = k[t] + K[t] @ x
                e = x - goal
                c += 0.5 * e @ Q @ e + 0.5 * u @ R @ u
                x = A @ x + B @ u
            e = x - goal
            return c + 0.5 * e @ Qf @ e

        x0 = np.array([0.3, -0.2])
        base = rollout_cost(gs.k, gs.K, x0)
        for _ in range(10):
            dk = 1e-3 * rng.normal(size=gs.k.shape)
            assert rollout_cost(gs.k + dk, gs.K, x0) >= base - 1e-12


class TestFdCheck:
    def test_accepts_correct_gradient(self):
        f = lambda x: float(x @ x)
        x = np.array([1.0, -2.0, 3.0])
        assert fd_check(f, x, 2 * x) < 1e-8

    def test_rejects_wrong_gradient(self):
        f = lambda x: float(x @ x)
        x = np.array([1.0, -2.0, 3.0])
        assert fd_check(f, x, 3 * x) > 0.3

    def test_vector_valued(self):
        A = np.array([[1.0, 2.0], [3.0, 4.0]])
        f = lambda x: A @ x
        assert fd_check(f, np.array([0.5, -0.5]), A) < 1e-8
