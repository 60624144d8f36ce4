"""Micro-benchmark of the compiled kernels against the pure-Python fallback.

Times the four hot paths (single RK4 step, trajectory linearization,
closed-loop rollout, and the single-control backward pass) on each
built-in system and prints the speedups.

Run:  python benchmarks/bench_core.py [--repeats N]
"""

import argparse
import timeit

import numpy as np

from boxilqr import _core_py
from boxilqr import model as model_mod

try:
    from boxilqr import _core
except ImportError:
    _core = None


def bench(fn, number):
    return min(timeit.repeat(fn, number=number, repeat=3)) / number


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200,
                        help="inner timing iterations per case")
    args = parser.parse_args()

    if _core is None:
        print("compiled backend not available; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    header = f"{'case':34s} {'compiled':>10s} {'pure':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))

    for name in ("pendulum", "cartpole", "acrobot"):
        dyn = model_mod.make_benchmark(name)
        kid, vec = dyn.model.kernel_id, dyn.model.kernel_params
        x = rng.uniform(-1, 1, dyn.n)
        u = rng.uniform(-1, 1, 1)
        T = dyn.horizon
        U = rng.uniform(-0.5, 0.5, (T, 1))
        X = _core_py.rollout(kid, vec, np.zeros(dyn.n), U, dyn.dt)
        k = np.zeros((T, 1))
        K = np.zeros((T, 1, dyn.n))
        inf = np.full(dyn.n, np.inf)
        inf1 = np.full(1, np.inf)

        n = dyn.n
        FX, FU = _core_py.linearize(kid, vec, X, U, dyn.dt)
        Cx = rng.normal(size=(T, n))
        Cu = rng.normal(size=(T, 1))
        hx = np.abs(rng.normal(size=(T, n)))
        hu = np.abs(rng.normal(size=(T, 1)))
        Q = np.eye(n)
        vT = rng.normal(size=n)
        ST = 10.0 * np.eye(n)
        v = np.empty((T + 1, n))
        S = np.empty((T + 1, n, n))

        def backward(m):
            return m.backward_m1(FX, FU, Cx, Cu, hx, hu, Q, 1.0, vT, ST,
                                 0.0, k, K, v, S)

        cases = [
            ("rk4_step", args.repeats * 50,
             lambda m: m.rk4_step(kid, vec, x, u, dyn.dt)),
            (f"linearize (T={T})", max(1, args.repeats // 20),
             lambda m: m.linearize(kid, vec, X, U, dyn.dt)),
            (f"closed_loop (T={T})", max(1, args.repeats // 20),
             lambda m: m.closed_loop(kid, vec, X, U, k, K, 1.0, dyn.dt,
                                     -inf, inf, -inf1, inf1)),
            (f"backward_m1 (T={T})", max(1, args.repeats // 20), backward),
        ]
        for case, number, fn in cases:
            tc = bench(lambda: fn(_core), number)
            tp = bench(lambda: fn(_core_py), number)
            print(f"{name + ' ' + case:34s} {tc * 1e6:8.1f}us {tp * 1e6:8.1f}us "
                  f"{tp / tc:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
