"""Pure-Python reference implementation of the hot kernels.

Mirrors the interface of the compiled extension ``boxilqr._core``:
continuous dynamics of the three benchmark systems, fixed-step RK4
integration with zero-order control hold, discrete Jacobians, and the
open/closed-loop trajectory rollouts.  Selected as a fallback when the
extension is unavailable or ``BOXILQR_PURE_PYTHON=1`` is set.

Model ids: 0 = pendulum, 1 = cart-pole, 2 = acrobot.
Parameter vector layouts:
    pendulum:  [m, l, g, b]
    cart-pole: [m_cart, m_pole, l, g]
    acrobot:   [m1, m2, l1, l2, lc1, lc2, I1, I2, g]
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

PENDULUM = 0
CARTPOLE = 1
ACROBOT = 2

N_STATES = {PENDULUM: 2, CARTPOLE: 4, ACROBOT: 4}
N_CONTROLS = {PENDULUM: 1, CARTPOLE: 1, ACROBOT: 1}


def rhs(model_id, params, x, u):
    """Continuous-time state derivative for a benchmark model."""
    if model_id == PENDULUM:
        m, l, g, b = params
        theta, omega = x
        alpha = (u[0] - b * omega - m * g * l * np.sin(theta)) / (m * l * l)
        return np.array([omega, alpha])
    if model_id == CARTPOLE:
        mc, mp, l, g = params
        _, xdot, theta, thetadot = x
        s, c = np.sin(theta), np.cos(theta)
        denom = mc + mp * s * s
        xddot = (u[0] + mp * l * s * thetadot * thetadot + mp * g * s * c) / denom
        thddot = -(c * xddot + g * s) / l
        return np.array([xdot, xddot, thetadot, thddot])
    if model_id == ACROBOT:
        m1, m2, l1, l2, lc1, lc2, i1, i2, g = params
        t1, t2, w1, w2 = x
        s2, c2 = np.sin(t2), np.cos(t2)
        d11 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * c2) + i1 + i2
        d12 = m2 * (lc2**2 + l1 * lc2 * c2) + i2
        d22 = m2 * lc2**2 + i2
        h = -m2 * l1 * lc2 * s2
        phi2 = m2 * lc2 * g * np.sin(t1 + t2)
        phi1 = (m1 * lc1 + m2 * l1) * g * np.sin(t1) + phi2
        # D @ [a1, a2] = [tau1, tau2]
        tau1 = -(h * w2 * w2 + 2 * h * w1 * w2) - phi1
        tau2 = u[0] + h * w1 * w1 - phi2
        det = d11 * d22 - d12 * d12
        a1 = (d22 * tau1 - d12 * tau2) / det
        a2 = (d11 * tau2 - d12 * tau1) / det
        return np.array([w1, w2, a1, a2])
    raise ValueError(f"unknown model id {model_id}")


def rhs_jacobians(model_id, params, x, u):
    """Analytic continuous Jacobians (A, B); None for models without them."""
    if model_id == PENDULUM:
        m, l, g, b = params
        theta, _ = x
        ml2 = m * l * l
        A = np.array([[0.0, 1.0], [-g / l * np.cos(theta), -b / ml2]])
        B = np.array([[0.0], [1.0 / ml2]])
        return A, B
    if model_id == CARTPOLE:
        mc, mp, l, g = params
        _, _, theta, thetadot = x
        s, c = np.sin(theta), np.cos(theta)
        denom = mc + mp * s * s
        num = u[0] + mp * l * s * thetadot * thetadot + mp * g * s * c
        xddot = num / denom
        dxdd_dth = (mp * l * c * thetadot**2 + mp * g * (c * c - s * s)) / denom \
            - xddot * (2 * mp * s * c) / denom
        dxdd_dw = 2 * mp * l * s * thetadot / denom
        dxdd_du = 1.0 / denom
        dthdd_dth = -(-s * xddot + c * dxdd_dth + g * c) / l
        dthdd_dw = -(c * dxdd_dw) / l
        dthdd_du = -(c * dxdd_du) / l
        A = np.array([
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, dxdd_dth, dxdd_dw],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, dthdd_dth, dthdd_dw],
        ])
        B = np.array([[0.0], [dxdd_du], [0.0], [dthdd_du]])
        return A, B
    return None


def rk4_step(model_id, params, x, u, dt):
    """One classical RK4 step with the control held constant."""
    k1 = rhs(model_id, params, x, u)
    k2 = rhs(model_id, params, x + 0.5 * dt * k1, u)
    k3 = rhs(model_id, params, x + 0.5 * dt * k2, u)
    k4 = rhs(model_id, params, x + dt * k3, u)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def discrete_jacobians(model_id, params, x, u, dt):
    """Jacobians of the RK4 map: analytic chain rule where the continuous
    Jacobians exist, central finite differences otherwise."""
    jac = rhs_jacobians(model_id, params, x, u)
    if jac is None:
        return _fd_discrete_jacobians(model_id, params, x, u, dt)
    n = x.shape[0]
    eye = np.eye(n)

    k1 = rhs(model_id, params, x, u)
    A1, B1 = rhs_jacobians(model_id, params, x, u)
    dk1_dx, dk1_du = A1, B1

    x2 = x + 0.5 * dt * k1
    k2 = rhs(model_id, params, x2, u)
    A2, B2 = rhs_jacobians(model_id, params, x2, u)
    dk2_dx = A2 @ (eye + 0.5 * dt * dk1_dx)
    dk2_du = A2 @ (0.5 * dt * dk1_du) + B2

    x3 = x + 0.5 * dt * k2
    k3 = rhs(model_id, params, x3, u)
    A3, B3 = rhs_jacobians(model_id, params, x3, u)
    dk3_dx = A3 @ (eye + 0.5 * dt * dk2_dx)
    dk3_du = A3 @ (0.5 * dt * dk2_du) + B3

    x4 = x + dt * k3
    A4, B4 = rhs_jacobians(model_id, params, x4, u)
    dk4_dx = A4 @ (eye + dt * dk3_dx)
    dk4_du = A4 @ (dt * dk3_du) + B4

    fx = eye + (dt / 6.0) * (dk1_dx + 2 * dk2_dx + 2 * dk3_dx + dk4_dx)
    fu = (dt / 6.0) * (dk1_du + 2 * dk2_du + 2 * dk3_du + dk4_du)
    return fx, fu


def _fd_discrete_jacobians(model_id, params, x, u, dt):
    n, m = x.shape[0], u.shape[0]
    fx = np.empty((n, n))
    fu = np.empty((n, m))
    for i in range(n):
        h = 1e-6 * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fx[:, i] = (rk4_step(model_id, params, xp, u, dt)
                    - rk4_step(model_id, params, xm, u, dt)) / (2 * h)
    for j in range(m):
        h = 1e-6 * (1.0 + abs(u[j]))
        up, um = u.copy(), u.copy()
        up[j] += h
        um[j] -= h
        fu[:, j] = (rk4_step(model_id, params, x, up, dt)
                    - rk4_step(model_id, params, x, um, dt)) / (2 * h)
    return fx, fu


def linearize(model_id, params, X, U, dt):
    """Discrete Jacobians stacked along a trajectory: (T,n,n), (T,n,m)."""
    T = U.shape[0]
    n, m = X.shape[1], U.shape[1]
    FX = np.empty((T, n, n))
    FU = np.empty((T, n, m))
    for t in range(T):
        FX[t], FU[t] = discrete_jacobians(model_id, params, X[t], U[t], dt)
    return FX, FU


def rollout(model_id, params, x0, U, dt):
    """Open-loop rollout; returns the (T+1, n) state sequence."""
    T = U.shape[0]
    X = np.empty((T + 1, x0.shape[0]))
    X[0] = x0
    for t in range(T):
        X[t + 1] = rk4_step(model_id, params, X[t], U[t], dt)
        if not np.all(np.isfinite(X[t + 1])):
            raise FloatingPointError(f"non-finite state at step {t}")
    return X


def backward_m1(FX, FU, Cx, Cu, hx, hu, Q, R, vT, ST, zeta, k, K, v, S):
    """Value recursion for single-control problems.

    Writes the feedforward/feedback gains and the value expansion into the
    preallocated ``k (T,1)``, ``K (T,1,n)``, ``v (T+1,n)``, ``S (T+1,n,n)``
    arrays.  ``Cx``/``Cu`` are the running cost gradients (barrier terms
    included), ``hx``/``hu`` the diagonal running Hessian contributions of
    the barriers, and ``vT``/``ST`` seed the terminal value expansion.
    Returns ``(reduction_sum, fail_t)`` where ``fail_t`` is the first step
    (from the end) at which the regularized control Hessian was not
    positive, or -1 on success.
    """
    T, n = Cx.shape
    v[T] = vT
    S[T] = ST
    red = 0.0
    for t in range(T - 1, -1, -1):
        fx = FX[t]
        fu = FU[t][:, 0]
        Sfx = S[t + 1] @ fx
        Sfu = S[t + 1] @ fu
        Qu = Cu[t, 0] + fu @ v[t + 1]
        q = R + hu[t, 0] + fu @ Sfu + zeta
        if not q > 0.0:
            return red, t
        Qux = fu @ Sfx
        kt = -Qu / q
        Kt = -Qux / q
        k[t, 0] = kt
        K[t, 0] = Kt
        v[t] = (Cx[t] + fx.T @ v[t + 1]
                + Kt * (q * kt) + Kt * Qu + Qux * kt)
        St = (Q + np.diag(hx[t]) + fx.T @ Sfx
              + np.outer(Kt, q * Kt) + np.outer(Kt, Qux) + np.outer(Qux, Kt))
        S[t] = 0.5 * (St + St.T)
        red += -Qu * kt
    return red, -1


def closed_loop(model_id, params, Xbar, Ubar, k, K, alpha, dt,
                x_lo, x_hi, u_lo, u_hi):
    """Closed-loop rollout of the affine policy around a nominal trajectory.

    Returns ``(X, U, ok, t, kind, index, side)``.  On the first constrained
    component leaving the strict interior (or a non-finite state), ``ok`` is
    False and the remaining fields identify the violation: ``kind`` is
    ``"x"``, ``"u"`` or ``"nan"``, ``side`` is -1 (lower) / +1 (upper).
    """
    T = Ubar.shape[0]
    n, m = Xbar.shape[1], Ubar.shape[1]
    X = np.zeros((T + 1, n))
    U = np.zeros((T, m))
    X[0] = Xbar[0]
    for t in range(T):
        u = Ubar[t] + alpha * k[t] + K[t] @ (X[t] - Xbar[t])
        U[t] = u
        for j in range(m):
            if u[j] <= u_lo[j]:
                return X, U, False, t, "u", j, -1
            if u[j] >= u_hi[j]:
                return X, U, False, t, "u", j, +1
        xn = rk4_step(model_id, params, X[t], u, dt)
        if not np.all(np.isfinite(xn)):
            return X, U, False, t, "nan", -1, 0
        X[t + 1] = xn
        for i in range(n):
            if xn[i] <= x_lo[i]:
                return X, U, False, t + 1, "x", i, -1
            if xn[i] >= x_hi[i]:
                return X, U, False, t + 1, "x", i, +1
    return X, U, True, -1, "", -1, 0
