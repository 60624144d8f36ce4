"""Command-line interface: solve benchmark problems, validate run configs,
and compare the compiled and pure-Python backends.

Exit codes: 0 converged, 1 configuration or usage error, 2 inner-loop
failure, 3 outer iteration cap reached.
"""

from __future__ import annotations

import argparse
import difflib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from boxilqr._backend import BACKEND
from boxilqr.analysis import saturation_report
from boxilqr.errors import BoxILQRError
from boxilqr.solver import SolverConfig, benchmark_problem, box_ilqr

_STATUS_EXIT = {"Converged": 0, "InnerFailure": 2, "IterationCap": 3}

_TOP_KEYS = {"schema", "system", "constraints", "t_final", "dt", "label", "solver"}
_SOLVER_KEYS = {"mu0", "sigma0", "r_mu0", "r_sigma0", "beta_r", "eps_barrier",
                "inner_max_iters", "inner_grad_tol", "outer_max_iters"}


class ConfigError(Exception):
    pass


def _suggest(key, allowed):
    close = difflib.get_close_matches(key, allowed, n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def load_config(path: Path) -> dict:
    """Parse and validate a run configuration file."""
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if raw.get("schema") != 1:
        raise ConfigError(f"{path}: missing or unsupported 'schema' "
                          f"(expected 1, got {raw.get('schema')!r})")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError(f"{path}: unknown key {key!r}"
                              f"{_suggest(key, _TOP_KEYS)}")
    if "system" not in raw:
        raise ConfigError(f"{path}: missing required key 'system'")
    if raw["system"] not in ("pendulum", "cartpole", "acrobot"):
        raise ConfigError(f"{path}: unknown system {raw['system']!r}")
    constraints = raw.get("constraints", "table")
    if constraints not in ("table", "control", "state", "none"):
        raise ConfigError(f"{path}: unknown constraints {constraints!r}")
    for key in ("t_final", "dt"):
        if key in raw and not (isinstance(raw[key], (int, float))
                               and raw[key] > 0):
            raise ConfigError(f"{path}: {key!r} must be a positive number")
    solver = raw.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError(f"{path}: 'solver' must be an object")
    for key, val in solver.items():
        if key not in _SOLVER_KEYS:
            raise ConfigError(f"{path}: unknown solver key {key!r}"
                              f"{_suggest(key, _SOLVER_KEYS)}")
        if not isinstance(val, (int, float)):
            raise ConfigError(f"{path}: solver.{key} must be a number")
    label = raw.get("label", path.stem)
    if not isinstance(label, str) or not label \
            or any(c in label for c in "/\\\0"):
        raise ConfigError(f"{path}: 'label' must be a plain file-name string")
    return {
        "schema": 1,
        "system": raw["system"],
        "constraints": constraints,
        "t_final": raw.get("t_final"),
        "dt": raw.get("dt"),
        "label": label,
        "solver": dict(solver),
    }


def build(config: dict):
    problem = benchmark_problem(config["system"], config["constraints"],
                                t_final=config["t_final"], dt=config["dt"])
    kwargs = dict(config["solver"])
    for key in ("inner_max_iters", "outer_max_iters"):
        if key in kwargs:
            kwargs[key] = int(kwargs[key])
    return problem, SolverConfig(**kwargs)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(path: Path, X: np.ndarray, U: np.ndarray, dt: float):
    n, m = X.shape[1], U.shape[1]
    header = (["t"] + [f"x{i + 1}" for i in range(n)]
              + [f"u{j + 1}" for j in range(m)])
    lines = [",".join(header)]
    for t in range(X.shape[0]):
        row = [_fmt(t * dt)] + [_fmt(v) for v in X[t]]
        row += [_fmt(v) for v in U[t]] if t < U.shape[0] else [""] * m
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def write_gains_csv(path: Path, k: np.ndarray, K: np.ndarray, dt: float):
    T, m, n = K.shape
    header = (["t"] + [f"k{j + 1}" for j in range(m)]
              + [f"K_{j + 1}_{i + 1}" for j in range(m) for i in range(n)])
    lines = [",".join(header)]
    for t in range(T):
        row = [_fmt(t * dt)] + [_fmt(v) for v in k[t]]
        row += [_fmt(v) for v in K[t].ravel()]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def _step_intervals(steps):
    """Contiguous index runs as [first, last] pairs."""
    intervals = []
    for s in steps:
        if intervals and s == intervals[-1][1] + 1:
            intervals[-1][1] = s
        else:
            intervals.append([s, s])
    return intervals


def build_report(config: dict, report, problem) -> dict:
    traj = report.final_trajectory
    outer = []
    for rec in report.outer_iterations:
        outer.append({
            "mu": [float(v) for v in rec.mu],
            "sigma": [float(v) for v in rec.sigma],
            "inner_iterations": rec.inner_iters,
            "costs": [float(c) for c in rec.cost_sequence],
            "alphas": [float(a) for a in rec.accepted_alphas],
            "failed": rec.failed,
            "failed_mu_indices": rec.failed_mu_indices,
            "failed_sigma_indices": rec.failed_sigma_indices,
        })
    def bound_list(v):
        return [float(b) if np.isfinite(b) else None for b in v]

    out = {
        "schema": 1,
        "backend": BACKEND,
        "config": config,
        "status": report.status,
        "dt": problem.dynamics.dt,
        "horizon": problem.dynamics.horizon,
        "box": {
            "x_lower": bound_list(problem.box.x_lower),
            "x_upper": bound_list(problem.box.x_upper),
            "u_lower": bound_list(problem.box.u_lower),
            "u_upper": bound_list(problem.box.u_upper),
        },
        "outer": outer,
        "final_cost": float(traj.total_cost),
        "final_state": [float(v) for v in traj.states[-1]],
        "max_abs_control": float(np.max(np.abs(traj.controls))),
    }
    if report.final_gains is not None:
        sat = saturation_report(traj, report.final_gains, problem.box)
        out["saturation"] = {
            "threshold_frac": sat.threshold_frac,
            "channels": {
                str(j): {
                    "saturated_step_count": len(sat.saturated_steps[j]),
                    "saturated_intervals": _step_intervals(sat.saturated_steps[j]),
                    "peak_row_norm": sat.peak_row_norm[j],
                    "saturated_max_norm": sat.saturated_max_norm[j],
                } for j in sorted(sat.saturated_steps)
            },
        }
    return out


def run_one(args):
    """Solve one configuration and write its outputs; returns an exit code."""
    config, out_dir, emit_gains, quiet = args
    problem, solver_cfg = build(config)
    report = box_ilqr(problem, solver_cfg)
    dest = Path(out_dir) / config["label"]
    dest.mkdir(parents=True, exist_ok=True)
    traj = report.final_trajectory
    dt = problem.dynamics.dt
    write_trajectory_csv(dest / "trajectory.csv", traj.states, traj.controls, dt)
    if emit_gains and report.final_gains is not None:
        write_gains_csv(dest / "gains.csv",
                        report.final_gains.k, report.final_gains.K, dt)
    doc = build_report(config, report, problem)
    (dest / "report.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n")
    if not quiet:
        print(f"{config['label']}: {report.status} "
              f"final_cost={doc['final_cost']:.6g} "
              f"outer={len(doc['outer'])} -> {dest}")
    return _STATUS_EXIT[report.status]


def cmd_solve(args) -> int:
    out_dir = args.out or os.environ.get("BOX_ILQR_OUT", ".")
    try:
        configs = [load_config(Path(p)) for p in args.config]
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    labels = [c["label"] for c in configs]
    if len(set(labels)) != len(labels):
        print("config error: duplicate labels; outputs would collide",
              file=sys.stderr)
        return 1
    jobs = [(c, out_dir, args.emit_gains, args.quiet) for c in configs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(run_one, jobs))
    else:
        codes = [run_one(j) for j in jobs]
    return max(codes)


def _check_derivatives(rng) -> str:
    from boxilqr import model as model_mod
    from boxilqr._backend import core
    from boxilqr import _core_py
    worst = 0.0
    for name in ("pendulum", "cartpole", "acrobot"):
        dyn = model_mod.make_benchmark(name)
        kid, vec = dyn.model.kernel_id, dyn.model.kernel_params
        for _ in range(10):
            x = rng.uniform(-1, 1, dyn.n)
            u = rng.uniform(-1, 1, 1)
            fx, fu = core.discrete_jacobians(kid, vec, x, u, dyn.dt)
            fx_fd, fu_fd = _core_py._fd_discrete_jacobians(kid, vec, x, u, dyn.dt)
            worst = max(worst,
                        np.max(np.abs(np.asarray(fx) - fx_fd))
                        / max(1.0, np.max(np.abs(fx_fd))),
                        np.max(np.abs(np.asarray(fu) - fu_fd))
                        / max(1.0, np.max(np.abs(fu_fd))))
    if worst >= 1e-5:
        raise AssertionError(f"jacobian error {worst:.2e} >= 1e-5")
    return f"max jacobian error {worst:.2e}"


def _check_riccati_oracle(rng) -> str:
    from boxilqr import model as model_mod
    from boxilqr.analysis import lqr_oracle
    from boxilqr.objective import BarrierState, BoxSpec, QuadraticCost
    from boxilqr.riccati import Regularization, backward_pass
    from boxilqr.rollout import Trajectory
    from boxilqr.solver import Problem
    worst = 0.0
    for _ in range(3):
        n, m, T = int(rng.integers(2, 5)), int(rng.integers(1, 3)), 40
        A_c = rng.normal(scale=0.5, size=(n, n)) - 0.5 * np.eye(n)
        B_c = rng.normal(size=(n, m))
        mdl = model_mod.DynamicsModel(
            "lin", n, m, lambda x, u, t, A=A_c, B=B_c: A @ x + B @ u)
        dyn = model_mod.DiscreteDynamics(mdl, 0.05, T)
        W = rng.normal(size=(n, n))
        qc = QuadraticCost(W @ W.T + 0.1 * np.eye(n), np.eye(m),
                           W @ W.T + np.eye(n), rng.normal(size=n))
        problem = Problem(dyn, qc, BoxSpec.unconstrained(n, m), np.zeros(n))
        bs = BarrierState(np.ones(0), np.ones(0), np.ones(0), np.ones(0))
        nominal = Trajectory(np.zeros((T + 1, n)), np.zeros((T, m)), 0.0)
        gs = backward_pass(problem, nominal, bs, Regularization())
        jac = model_mod.jacobians(dyn, np.zeros(n), np.zeros(m), 0)
        ref = lqr_oracle(jac.fx, jac.fu, qc.Q, qc.R, qc.Qf, qc.goal, T)
        worst = max(worst,
                    np.max(np.abs(gs.K - ref.K)) / (1 + np.max(np.abs(ref.K))),
                    np.max(np.abs(gs.k - ref.k)) / (1 + np.max(np.abs(ref.k))))
    if worst >= 1e-8:
        raise AssertionError(f"gain mismatch {worst:.2e} >= 1e-8")
    return f"max gain mismatch vs oracle {worst:.2e}"


def _check_descent_invariants(rng) -> str:
    from boxilqr.solver import SolverConfig, box_ilqr
    problem = benchmark_problem("pendulum", t_final=0.5)
    report = box_ilqr(problem, SolverConfig(inner_max_iters=40))
    if report.status != "Converged":
        raise AssertionError(f"status {report.status}")
    for rec in report.outer_iterations:
        diffs = np.diff(rec.cost_sequence)
        if rec.accepted_alphas and not np.all(diffs < 0):
            raise AssertionError("non-monotone inner cost sequence")
    U = report.final_trajectory.controls
    if np.max(np.abs(U)) >= 1.0:
        raise AssertionError("control bound violated")
    return (f"{len(report.outer_iterations)} outer rounds, "
            f"max|u| {np.max(np.abs(U)):.4f} < 1")


def cmd_check(args) -> int:
    """Validate configs if given; otherwise run the oracle/invariant suite."""
    if args.config:
        status = 0
        for p in args.config:
            try:
                config = load_config(Path(p))
            except ConfigError as e:
                print(f"config error: {e}", file=sys.stderr)
                status = 1
                continue
            if not args.quiet:
                print(f"{p}: ok (system={config['system']}, "
                      f"constraints={config['constraints']})")
        return status

    rng = np.random.default_rng(0)
    checks = [
        ("dynamics jacobians vs finite differences", _check_derivatives),
        ("backward pass vs classical riccati recursion", _check_riccati_oracle),
        ("descent + feasibility invariants", _check_descent_invariants),
    ]
    failed = 0
    for name, fn in checks:
        try:
            detail = fn(rng)
        except AssertionError as e:
            print(f"FAIL {name}: {e}")
            failed += 1
            continue
        if not args.quiet:
            print(f"ok   {name}: {detail}")
    return 1 if failed else 0


def _load_run_dir(path: Path):
    traj_path = path / "trajectory.csv"
    report_path = path / "report.json"
    if not traj_path.exists() or not report_path.exists():
        raise ConfigError(f"{path}: not a run output directory "
                          "(need trajectory.csv and report.json)")
    traj = np.genfromtxt(traj_path, delimiter=",", skip_header=1)
    report = json.loads(report_path.read_text())
    return traj, report


def cmd_compare(args) -> int:
    """Compare two run output directories (e.g. the two backends)."""
    try:
        traj_a, rep_a = _load_run_dir(Path(args.a))
        traj_b, rep_b = _load_run_dir(Path(args.b))
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    same_status = rep_a["status"] == rep_b["status"]
    if traj_a.shape != traj_b.shape:
        print(f"trajectory shapes differ: {traj_a.shape} vs {traj_b.shape}")
        return 2
    diff = float(np.nanmax(np.abs(traj_a - traj_b)))
    cost_diff = abs(rep_a["final_cost"] - rep_b["final_cost"]) \
        / (1 + abs(rep_a["final_cost"]))
    agree = same_status and diff < args.tol
    print(f"status: {rep_a['status']} vs {rep_b['status']}")
    print(f"backends: {rep_a['backend']} vs {rep_b['backend']}")
    print(f"max trajectory difference: {diff:.3g} "
          f"({'within' if diff < args.tol else 'EXCEEDS'} "
          f"tolerance {args.tol:g})")
    print(f"relative final-cost difference: {cost_diff:.3g}")
    return 0 if agree else 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="box-ilqr",
        description="Constrained trajectory optimization benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one or more run configs")
    p_solve.add_argument("config", nargs="+", help="JSON run config file(s)")
    p_solve.add_argument("--out", default=None,
                         help="output directory (default: $BOX_ILQR_OUT or .)")
    p_solve.add_argument("--emit-gains", action="store_true",
                         help="also write the final feedback gains")
    p_solve.add_argument("--jobs", type=int, default=1,
                         help="solve configs in parallel")
    p_solve.add_argument("--quiet", action="store_true")
    p_solve.set_defaults(func=cmd_solve)

    p_check = sub.add_parser(
        "check",
        help="run the oracle/invariant suite, or validate given configs")
    p_check.add_argument("config", nargs="*")
    p_check.add_argument("--quiet", action="store_true")
    p_check.set_defaults(func=cmd_check)

    p_cmp = sub.add_parser(
        "compare", help="compare two run output directories")
    p_cmp.add_argument("a")
    p_cmp.add_argument("b")
    p_cmp.add_argument("--tol", type=float, default=1e-9,
                       help="max allowed trajectory difference")
    p_cmp.set_defaults(func=cmd_compare)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BoxILQRError as e:
        print(f"solver error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
