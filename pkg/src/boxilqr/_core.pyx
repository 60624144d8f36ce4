# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: benchmark dynamics, RK4 stepping, Jacobians,
and trajectory rollouts.  Interface mirrors ``boxilqr._core_py``."""

from libc.math cimport sin, cos, fabs, isfinite

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"

PENDULUM = 0
CARTPOLE = 1
ACROBOT = 2

N_STATES = {0: 2, 1: 4, 2: 4}
N_CONTROLS = {0: 1, 1: 1, 2: 1}

DEF NMAX = 4


cdef void _rhs(int model_id, double* p, double* x, double u, double* out) nogil:
    cdef double m, l, g, b, theta, omega
    cdef double mc, mp, xdot, thetadot, s, c, denom, xddot
    cdef double m1, m2, l1, l2, lc1, lc2, i1, i2
    cdef double t1, t2, w1, w2, s2, c2, d11, d12, d22, h, phi1, phi2
    cdef double tau1, tau2, det
    if model_id == 0:
        m = p[0]; l = p[1]; g = p[2]; b = p[3]
        theta = x[0]; omega = x[1]
        out[0] = omega
        out[1] = (u - b * omega - m * g * l * sin(theta)) / (m * l * l)
    elif model_id == 1:
        mc = p[0]; mp = p[1]; l = p[2]; g = p[3]
        xdot = x[1]; theta = x[2]; thetadot = x[3]
        s = sin(theta); c = cos(theta)
        denom = mc + mp * s * s
        xddot = (u + mp * l * s * thetadot * thetadot + mp * g * s * c) / denom
        out[0] = xdot
        out[1] = xddot
        out[2] = thetadot
        out[3] = -(c * xddot + g * s) / l
    else:
        m1 = p[0]; m2 = p[1]; l1 = p[2]; l2 = p[3]
        lc1 = p[4]; lc2 = p[5]; i1 = p[6]; i2 = p[7]; g = p[8]
        t1 = x[0]; t2 = x[1]; w1 = x[2]; w2 = x[3]
        s2 = sin(t2); c2 = cos(t2)
        d11 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * c2) + i1 + i2
        d12 = m2 * (lc2 * lc2 + l1 * lc2 * c2) + i2
        d22 = m2 * lc2 * lc2 + i2
        h = -m2 * l1 * lc2 * s2
        phi2 = m2 * lc2 * g * sin(t1 + t2)
        phi1 = (m1 * lc1 + m2 * l1) * g * sin(t1) + phi2
        tau1 = -(h * w2 * w2 + 2 * h * w1 * w2) - phi1
        tau2 = u + h * w1 * w1 - phi2
        det = d11 * d22 - d12 * d12
        out[0] = w1
        out[1] = w2
        out[2] = (d22 * tau1 - d12 * tau2) / det
        out[3] = (d11 * tau2 - d12 * tau1) / det


cdef int _n_states(int model_id) nogil:
    return 2 if model_id == 0 else 4


cdef void _rk4(int model_id, double* p, double* x, double u, double dt,
               double* out) nogil:
    cdef double k1[NMAX]
    cdef double k2[NMAX]
    cdef double k3[NMAX]
    cdef double k4[NMAX]
    cdef double tmp[NMAX]
    cdef int n = _n_states(model_id)
    cdef int i
    _rhs(model_id, p, x, u, k1)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * dt * k1[i]
    _rhs(model_id, p, tmp, u, k2)
    for i in range(n):
        tmp[i] = x[i] + 0.5 * dt * k2[i]
    _rhs(model_id, p, tmp, u, k3)
    for i in range(n):
        tmp[i] = x[i] + dt * k3[i]
    _rhs(model_id, p, tmp, u, k4)
    for i in range(n):
        out[i] = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


cdef void _jac_c(int model_id, double* p, double* x, double u,
                 double* A, double* B) nogil:
    # row-major n x n / n x 1; pendulum and cart-pole only
    cdef double m, l, g, b, theta, ml2
    cdef double mc, mp, thetadot, s, c, denom, num, xddot
    cdef double dxdd_dth, dxdd_dw, dxdd_du, dthdd_dth, dthdd_dw, dthdd_du
    cdef int i
    if model_id == 0:
        m = p[0]; l = p[1]; g = p[2]; b = p[3]
        theta = x[0]
        ml2 = m * l * l
        A[0] = 0.0; A[1] = 1.0
        A[2] = -g / l * cos(theta); A[3] = -b / ml2
        B[0] = 0.0; B[1] = 1.0 / ml2
    else:
        mc = p[0]; mp = p[1]; l = p[2]; g = p[3]
        theta = x[2]; thetadot = x[3]
        s = sin(theta); c = cos(theta)
        denom = mc + mp * s * s
        num = u + mp * l * s * thetadot * thetadot + mp * g * s * c
        xddot = num / denom
        dxdd_dth = (mp * l * c * thetadot * thetadot + mp * g * (c * c - s * s)) / denom \
            - xddot * (2 * mp * s * c) / denom
        dxdd_dw = 2 * mp * l * s * thetadot / denom
        dxdd_du = 1.0 / denom
        dthdd_dth = -(-s * xddot + c * dxdd_dth + g * c) / l
        dthdd_dw = -(c * dxdd_dw) / l
        dthdd_du = -(c * dxdd_du) / l
        for i in range(16):
            A[i] = 0.0
        A[1] = 1.0
        A[6] = dxdd_dth; A[7] = dxdd_dw
        A[11] = 1.0
        A[14] = dthdd_dth; A[15] = dthdd_dw
        B[0] = 0.0; B[1] = dxdd_du; B[2] = 0.0; B[3] = dthdd_du


cdef void _matmul(double* out, double* a, double* b, int n) nogil:
    # out = a @ b, all n x n row-major
    cdef int i, j, q
    cdef double acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for q in range(n):
                acc += a[i * n + q] * b[q * n + j]
            out[i * n + j] = acc


cdef void _matvec(double* out, double* a, double* b, int n) nogil:
    cdef int i, q
    cdef double acc
    for i in range(n):
        acc = 0.0
        for q in range(n):
            acc += a[i * n + q] * b[q]
        out[i] = acc


cdef void _analytic_discrete_jac(int model_id, double* p, double* x, double u,
                                 double dt, double* fx, double* fu) nogil:
    cdef double k1[NMAX]
    cdef double k2[NMAX]
    cdef double k3[NMAX]
    cdef double xs[NMAX]
    cdef double A[NMAX * NMAX]
    cdef double Bc[NMAX]
    cdef double dkx1[NMAX * NMAX]
    cdef double dkx2[NMAX * NMAX]
    cdef double dkx3[NMAX * NMAX]
    cdef double dkx4[NMAX * NMAX]
    cdef double dku1[NMAX]
    cdef double dku2[NMAX]
    cdef double dku3[NMAX]
    cdef double dku4[NMAX]
    cdef double tmpm[NMAX * NMAX]
    cdef double tmpv[NMAX]
    cdef int n = _n_states(model_id)
    cdef int i, j

    # stage 1
    _rhs(model_id, p, x, u, k1)
    _jac_c(model_id, p, x, u, dkx1, dku1)

    # stage 2 at x + dt/2 k1
    for i in range(n):
        xs[i] = x[i] + 0.5 * dt * k1[i]
    _rhs(model_id, p, xs, u, k2)
    _jac_c(model_id, p, xs, u, A, Bc)
    for i in range(n * n):
        tmpm[i] = 0.5 * dt * dkx1[i]
    for i in range(n):
        tmpm[i * n + i] += 1.0
    _matmul(dkx2, A, tmpm, n)
    for i in range(n):
        tmpv[i] = 0.5 * dt * dku1[i]
    _matvec(dku2, A, tmpv, n)
    for i in range(n):
        dku2[i] += Bc[i]

    # stage 3 at x + dt/2 k2
    for i in range(n):
        xs[i] = x[i] + 0.5 * dt * k2[i]
    _rhs(model_id, p, xs, u, k3)
    _jac_c(model_id, p, xs, u, A, Bc)
    for i in range(n * n):
        tmpm[i] = 0.5 * dt * dkx2[i]
    for i in range(n):
        tmpm[i * n + i] += 1.0
    _matmul(dkx3, A, tmpm, n)
    for i in range(n):
        tmpv[i] = 0.5 * dt * dku2[i]
    _matvec(dku3, A, tmpv, n)
    for i in range(n):
        dku3[i] += Bc[i]

    # stage 4 at x + dt k3
    for i in range(n):
        xs[i] = x[i] + dt * k3[i]
    _jac_c(model_id, p, xs, u, A, Bc)
    for i in range(n * n):
        tmpm[i] = dt * dkx3[i]
    for i in range(n):
        tmpm[i * n + i] += 1.0
    _matmul(dkx4, A, tmpm, n)
    for i in range(n):
        tmpv[i] = dt * dku3[i]
    _matvec(dku4, A, tmpv, n)
    for i in range(n):
        dku4[i] += Bc[i]

    for i in range(n * n):
        fx[i] = (dt / 6.0) * (dkx1[i] + 2.0 * dkx2[i] + 2.0 * dkx3[i] + dkx4[i])
    for i in range(n):
        fx[i * n + i] += 1.0
        fu[i] = (dt / 6.0) * (dku1[i] + 2.0 * dku2[i] + 2.0 * dku3[i] + dku4[i])


cdef void _fd_discrete_jac(int model_id, double* p, double* x, double u,
                           double dt, double* fx, double* fu) nogil:
    cdef double xp[NMAX]
    cdef double xm[NMAX]
    cdef double fp[NMAX]
    cdef double fm[NMAX]
    cdef double h
    cdef int n = _n_states(model_id)
    cdef int i, j
    for j in range(n):
        h = 1e-6 * (1.0 + fabs(x[j]))
        for i in range(n):
            xp[i] = x[i]
            xm[i] = x[i]
        xp[j] += h
        xm[j] -= h
        _rk4(model_id, p, xp, u, dt, fp)
        _rk4(model_id, p, xm, u, dt, fm)
        for i in range(n):
            fx[i * n + j] = (fp[i] - fm[i]) / (2.0 * h)
    h = 1e-6 * (1.0 + fabs(u))
    _rk4(model_id, p, x, u + h, dt, fp)
    _rk4(model_id, p, x, u - h, dt, fm)
    for i in range(n):
        fu[i] = (fp[i] - fm[i]) / (2.0 * h)


cdef void _discrete_jac(int model_id, double* p, double* x, double u,
                        double dt, double* fx, double* fu) nogil:
    if model_id == 2:
        _fd_discrete_jac(model_id, p, x, u, dt, fx, fu)
    else:
        _analytic_discrete_jac(model_id, p, x, u, dt, fx, fu)


# ---------------------------------------------------------------------------
# Python-visible interface
# ---------------------------------------------------------------------------

def rhs(int model_id, params, x, u):
    cdef cnp.ndarray[double, ndim=1] pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ua = np.ascontiguousarray(u, dtype=np.float64)
    cdef int n = _n_states(model_id)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    _rhs(model_id, &pa[0], &xa[0], ua[0], &out[0])
    return out


def rk4_step(int model_id, params, x, u, double dt):
    cdef cnp.ndarray[double, ndim=1] pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ua = np.ascontiguousarray(u, dtype=np.float64)
    cdef int n = _n_states(model_id)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    _rk4(model_id, &pa[0], &xa[0], ua[0], dt, &out[0])
    return out


def discrete_jacobians(int model_id, params, x, u, double dt):
    cdef cnp.ndarray[double, ndim=1] pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ua = np.ascontiguousarray(u, dtype=np.float64)
    cdef int n = _n_states(model_id)
    cdef cnp.ndarray[double, ndim=2] fx = np.empty((n, n))
    cdef cnp.ndarray[double, ndim=2] fu = np.empty((n, 1))
    _discrete_jac(model_id, &pa[0], &xa[0], ua[0], dt, &fx[0, 0], &fu[0, 0])
    return fx, fu


def linearize(int model_id, params, X, U, double dt):
    cdef cnp.ndarray[double, ndim=1] pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] Xa = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] Ua = np.ascontiguousarray(U, dtype=np.float64)
    cdef int T = Ua.shape[0]
    cdef int n = _n_states(model_id)
    cdef cnp.ndarray[double, ndim=3] FX = np.empty((T, n, n))
    cdef cnp.ndarray[double, ndim=3] FU = np.empty((T, n, 1))
    cdef int t
    with nogil:
        for t in range(T):
            _discrete_jac(model_id, &pa[0], &Xa[t, 0], Ua[t, 0], dt,
                          &FX[t, 0, 0], &FU[t, 0, 0])
    return FX, FU


def rollout(int model_id, params, x0, U, double dt):
    cdef cnp.ndarray[double, ndim=1] pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] x0a = np.ascontiguousarray(x0, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] Ua = np.ascontiguousarray(U, dtype=np.float64)
    cdef int T = Ua.shape[0]
    cdef int n = _n_states(model_id)
    cdef cnp.ndarray[double, ndim=2] X = np.empty((T + 1, n))
    cdef int t, i, bad
    cdef int bad_t = -1
    for i in range(n):
        X[0, i] = x0a[i]
    with nogil:
        for t in range(T):
            _rk4(model_id, &pa[0], &X[t, 0], Ua[t, 0], dt, &X[t + 1, 0])
            bad = 0
            for i in range(n):
                if not isfinite(X[t + 1, i]):
                    bad = 1
            if bad:
                bad_t = t
                break
    if bad_t >= 0:
        raise FloatingPointError(f"non-finite state at step {bad_t}")
    return X


def backward_m1(double[:, :, ::1] FX, double[:, :, ::1] FU,
                double[:, ::1] Cx, double[:, ::1] Cu,
                double[:, ::1] hx, double[:, ::1] hu,
                double[:, ::1] Q, double R,
                double[::1] vT, double[:, ::1] ST, double zeta,
                double[:, ::1] k, double[:, :, ::1] K,
                double[:, ::1] v, double[:, :, ::1] S):
    """Value recursion for single-control problems; see the pure-Python
    reference in ``boxilqr._core_py.backward_m1`` for the contract."""
    cdef int T = Cx.shape[0]
    cdef int n = Cx.shape[1]
    cdef int t, i, j, q_
    cdef double Sfx[NMAX * NMAX]
    cdef double Sfu[NMAX]
    cdef double Qux[NMAX]
    cdef double Qu, qreg, kt, acc, red = 0.0
    cdef int fail_t = -1
    if n > NMAX:
        raise ValueError(f"state dimension {n} exceeds kernel limit {NMAX}")
    for i in range(n):
        v[T, i] = vT[i]
        for j in range(n):
            S[T, i, j] = ST[i, j]
    with nogil:
        for t in range(T - 1, -1, -1):
            # Sfx = S[t+1] @ fx, Sfu = S[t+1] @ fu
            for i in range(n):
                acc = 0.0
                for q_ in range(n):
                    acc += S[t + 1, i, q_] * FU[t, q_, 0]
                Sfu[i] = acc
                for j in range(n):
                    acc = 0.0
                    for q_ in range(n):
                        acc += S[t + 1, i, q_] * FX[t, q_, j]
                    Sfx[i * n + j] = acc
            Qu = Cu[t, 0]
            qreg = R + hu[t, 0] + zeta
            for i in range(n):
                Qu += FU[t, i, 0] * v[t + 1, i]
                qreg += FU[t, i, 0] * Sfu[i]
            if not qreg > 0.0:
                fail_t = t
                break
            for j in range(n):
                acc = 0.0
                for i in range(n):
                    acc += FU[t, i, 0] * Sfx[i * n + j]
                Qux[j] = acc
            kt = -Qu / qreg
            k[t, 0] = kt
            for j in range(n):
                K[t, 0, j] = -Qux[j] / qreg
            for i in range(n):
                acc = Cx[t, i]
                for q_ in range(n):
                    acc += FX[t, q_, i] * v[t + 1, q_]
                v[t, i] = (acc + K[t, 0, i] * (qreg * kt)
                           + K[t, 0, i] * Qu + Qux[i] * kt)
            for i in range(n):
                for j in range(n):
                    acc = Q[i, j]
                    if i == j:
                        acc += hx[t, i]
                    for q_ in range(n):
                        acc += FX[t, q_, i] * Sfx[q_ * n + j]
                    acc += (K[t, 0, i] * qreg * K[t, 0, j]
                            + K[t, 0, i] * Qux[j] + Qux[i] * K[t, 0, j])
                    S[t, i, j] = acc
            for i in range(n):
                for j in range(i + 1, n):
                    acc = 0.5 * (S[t, i, j] + S[t, j, i])
                    S[t, i, j] = acc
                    S[t, j, i] = acc
            red += -Qu * kt
    return red, fail_t


def closed_loop(int model_id, params, Xbar, Ubar, k, K, double alpha,
                double dt, x_lo, x_hi, u_lo, u_hi):
    cdef cnp.ndarray[double, ndim=1] pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] Xb = np.ascontiguousarray(Xbar, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] Ub = np.ascontiguousarray(Ubar, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] ka = np.ascontiguousarray(k, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=3] Ka = np.ascontiguousarray(K, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] xlo = np.ascontiguousarray(x_lo, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] xhi = np.ascontiguousarray(x_hi, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ulo = np.ascontiguousarray(u_lo, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] uhi = np.ascontiguousarray(u_hi, dtype=np.float64)
    cdef int T = Ub.shape[0]
    cdef int n = _n_states(model_id)
    cdef cnp.ndarray[double, ndim=2] X = np.zeros((T + 1, n))
    cdef cnp.ndarray[double, ndim=2] U = np.zeros((T, 1))
    cdef int t, i, fail_kind = 0, fail_t = -1, fail_idx = -1, fail_side = 0
    cdef double u
    for i in range(n):
        X[0, i] = Xb[0, i]
    with nogil:
        for t in range(T):
            u = Ub[t, 0] + alpha * ka[t, 0]
            for i in range(n):
                u += Ka[t, 0, i] * (X[t, i] - Xb[t, i])
            U[t, 0] = u
            if u <= ulo[0]:
                fail_kind = 2; fail_t = t; fail_idx = 0; fail_side = -1
                break
            if u >= uhi[0]:
                fail_kind = 2; fail_t = t; fail_idx = 0; fail_side = 1
                break
            _rk4(model_id, &pa[0], &X[t, 0], u, dt, &X[t + 1, 0])
            for i in range(n):
                if not isfinite(X[t + 1, i]):
                    fail_kind = 3; fail_t = t; fail_idx = -1; fail_side = 0
                    break
            if fail_kind:
                break
            for i in range(n):
                if X[t + 1, i] <= xlo[i]:
                    fail_kind = 1; fail_t = t + 1; fail_idx = i; fail_side = -1
                    break
                if X[t + 1, i] >= xhi[i]:
                    fail_kind = 1; fail_t = t + 1; fail_idx = i; fail_side = 1
                    break
            if fail_kind:
                break
    if fail_kind == 0:
        return X, U, True, -1, "", -1, 0
    kind = {1: "x", 2: "u", 3: "nan"}[fail_kind]
    return X, U, False, fail_t, kind, fail_idx, fail_side
