"""Exception types shared across the solver."""

from __future__ import annotations


class BoxILQRError(Exception):
    """Base class for solver errors."""


class StepFailure(BoxILQRError):
    """Integration produced a non-finite state."""

    def __init__(self, t: int):
        super().__init__(f"non-finite state after integration step t={t}")
        self.t = t


class InfeasiblePoint(BoxILQRError):
    """A constrained component lies on or outside its bounds.

    ``kind`` is "x" or "u", ``side`` -1 for the lower bound, +1 for the
    upper; ``t`` is the time index when known."""

    def __init__(self, kind: str, index: int, side: int, t: int | None = None):
        where = f" at t={t}" if t is not None else ""
        bound = "lower" if side < 0 else "upper"
        super().__init__(f"{kind}[{index}] violates its {bound} bound{where}")
        self.kind = kind
        self.index = index
        self.side = side
        self.t = t


class NonPositiveDefinite(BoxILQRError):
    """Q_uu + zeta*I failed factorization even at the regularization cap."""

    def __init__(self, t: int, zeta: float):
        super().__init__(f"Q_uu not positive definite at t={t} (zeta={zeta:g})")
        self.t = t
        self.zeta = zeta


class NoAcceptableStep(BoxILQRError):
    """Backtracking line search exhausted alpha without an acceptable step."""

    def __init__(self, alpha: float):
        super().__init__(f"no acceptable step above alpha_min (last alpha={alpha:g})")
        self.alpha = alpha


class InfeasibleInitialTrajectory(BoxILQRError):
    """The supplied initial control sequence violates a box constraint."""

    def __init__(self, kind: str, index: int, side: int, t: int):
        bound = "lower" if side < 0 else "upper"
        super().__init__(
            f"initial trajectory infeasible: {kind}[{index}] at its {bound} bound, t={t}"
        )
        self.kind = kind
        self.index = index
        self.side = side
        self.t = t
