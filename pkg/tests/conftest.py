import numpy as np
import pytest

import boxilqr.model as model_mod
from boxilqr import BoxSpec, Problem, QuadraticCost


def pendulum_problem(bound=1.0):
    dyn = model_mod.make_benchmark("pendulum")
    qc = QuadraticCost(Q=3 * np.eye(2), R=3 * np.eye(1), Qf=30 * np.eye(2),
                       goal=np.array([np.pi, 0.0]))
    if bound is None:
        box = BoxSpec.unconstrained(2, 1)
    else:
        box = BoxSpec(np.full(2, -np.inf), np.full(2, np.inf),
                      np.array([-bound]), np.array([bound]))
    return Problem(dyn, qc, box, np.zeros(2))


def linear_dynamics(A_c, B_c, dt, horizon):
    """Generic ODE model x' = A_c x + B_c u; its RK4 map is exactly linear."""
    n, m = A_c.shape[0], B_c.shape[1]
    mdl = model_mod.DynamicsModel(
        name="linear", state_dim=n, control_dim=m,
        continuous_rhs=lambda x, u, t: A_c @ x + B_c @ u)
    return model_mod.DiscreteDynamics(model=mdl, dt=dt, horizon=horizon)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
