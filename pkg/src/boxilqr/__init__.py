"""Box-iLQR: iterative LQR with log-barrier box constraints."""

from boxilqr._backend import BACKEND
from boxilqr.analysis import SaturationReport, fd_check, lqr_oracle, saturation_report
from boxilqr.errors import (BoxILQRError, InfeasibleInitialTrajectory,
                            InfeasiblePoint, NoAcceptableStep,
                            NonPositiveDefinite, StepFailure)
from boxilqr.model import (DiscreteDynamics, DynamicsModel, Jacobians,
                           jacobians, make_benchmark, step)
from boxilqr.objective import (BarrierState, BoxSpec, CostDerivatives,
                               QuadraticCost, barrier_derivatives,
                               barrier_running, stage_cost,
                               terminal_cost_derivatives, total_augmented_cost)
from boxilqr.riccati import GainSchedule, Regularization, backward_pass, expected_reduction
from boxilqr.rollout import (InfeasibleRollout, LineSearchConfig, Trajectory,
                             forward_pass, line_search)
from boxilqr.solver import (Problem, SolveReport, SolverConfig,
                            benchmark_problem, box_ilqr, ilqr_solve,
                            initial_trajectory)

__all__ = [
    "BACKEND",
    "BarrierState", "BoxILQRError", "BoxSpec", "CostDerivatives",
    "DiscreteDynamics", "DynamicsModel", "GainSchedule",
    "InfeasibleInitialTrajectory", "InfeasiblePoint", "InfeasibleRollout",
    "Jacobians", "LineSearchConfig", "NoAcceptableStep", "NonPositiveDefinite",
    "Problem", "QuadraticCost", "Regularization", "SaturationReport",
    "SolveReport", "SolverConfig", "StepFailure", "Trajectory",
    "backward_pass", "barrier_derivatives", "barrier_running",
    "benchmark_problem", "box_ilqr",
    "expected_reduction", "fd_check", "forward_pass", "ilqr_solve",
    "initial_trajectory", "jacobians", "line_search", "lqr_oracle",
    "make_benchmark", "saturation_report", "stage_cost", "step",
    "terminal_cost_derivatives", "total_augmented_cost",
]

__version__ = "0.1.0"
