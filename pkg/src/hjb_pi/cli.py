"""Command-line harness: benchmark runs, mesh sweeps, checks, kernel timing.

Subcommands
-----------
run1d   1D quadratic-cost benchmark with greedy policy iteration.
run2d   2D manufactured benchmark with relaxed policy iteration and SOR.
sweep   Mesh sweep with per-h iteration budgets and a fitted error slope.
check   Structural property suite, one PASS/FAIL line per property.
bench   Timing comparison of the compiled and pure-Python kernels.

All artifacts are plain UTF-8 CSV and JSON.  Numbers in CSV bodies are
written with 17 significant digits so re-running a command with the same
flags reproduces files byte for byte; JSON summaries echo the full run
configuration and contain no timestamps.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backends
from .analysis import detect_plateau, fit_power_rate, optimal_iteration_count
from .benchmarks import BENCHMARK_NAMES, BenchmarkSetup, build_benchmark
from .checks import run_checks
from .howard import PIConfig, PIReport, run_policy_iteration
from .linsolve import SolverError, StructuredSystem2D, TridiagonalSystem
from .scheme import MonotonicityError, contraction_factor

__all__ = ["RunConfig", "execute_command", "main"]

SLICE_X0 = 0.80
SLICE_Y0 = -0.80
SLICE_ITERATIONS = (0, 5, 15, 30)


@dataclass(frozen=True)
class RunConfig:
    """Echoed verbatim into every JSON summary."""

    command: str
    benchmark: str
    lam: float
    half_width: float
    h: float
    iterations: int
    theta: float
    a_max: float
    initial_policy: str
    omega: float
    solver_tol: float
    solver_max_iter: int
    outer_tolerance: float | None
    sweep_h: tuple[float, ...] | None
    out_dir: str

    def __post_init__(self) -> None:
        numeric = {
            "lambda": self.lam,
            "half_width": self.half_width,
            "h": self.h,
            "iterations": self.iterations,
            "theta": self.theta,
            "a_max": self.a_max,
            "omega": self.omega,
            "solver_tol": self.solver_tol,
            "solver_max_iter": self.solver_max_iter,
        }
        for name, value in numeric.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.benchmark not in BENCHMARK_NAMES:
            raise ValueError(f"unknown benchmark {self.benchmark!r}")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["lambda"] = out.pop("lam")
        if out["sweep_h"] is not None:
            out["sweep_h"] = list(out["sweep_h"])
        return out


def _fmt(value: float) -> str:
    return "%.17g" % value


def _write_csv(path: str, header: list[str], rows: list[list[float]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _trajectory_rows(report: PIReport) -> list[list[float]]:
    rows = []
    for n in range(report.iterations_run):
        rows.append(
            [
                float(n),
                report.linf_error_to_reference[n],
                report.l2_error_to_reference[n],
                report.residual_l2[n],
                report.monotonicity_violation[n],
            ]
        )
    return rows


TRAJECTORY_HEADER = [
    "iter",
    "linf_error",
    "l2_error",
    "residual_l2",
    "monotonicity_violation",
]


def _pi_config(config: RunConfig, snapshots: tuple[int, ...] = ()) -> PIConfig:
    return PIConfig(
        max_outer_iterations=config.iterations,
        relaxation_theta=config.theta,
        initial_policy_spec=config.initial_policy,
        outer_tolerance=config.outer_tolerance,
        omega=config.omega,
        solver_tol=config.solver_tol,
        solver_max_iter=config.solver_max_iter,
        snapshot_iterations=snapshots,
    )


def _summary_payload(config: RunConfig, setup: BenchmarkSetup, report: PIReport) -> dict:
    beta = contraction_factor(
        setup.params.lam, setup.params.dim, setup.params.viscosity, setup.params.h
    )
    plateau = detect_plateau(
        [e for e in report.linf_error_to_reference if math.isfinite(e)],
        window=min(10, max(2, report.iterations_run)),
        rel_band=0.01,
    )
    return {
        "config": config.to_dict(),
        "derived": {
            "viscosity": setup.params.viscosity,
            "contraction_factor": beta,
            "center_weight": setup.params.center_weight,
            "optimal_iteration_count": optimal_iteration_count(
                config.h, config.lam, setup.grid.dim, setup.params.viscosity
            )
            if config.h < 1
            else None,
            "nodes_per_axis": setup.grid.nodes_per_axis,
        },
        "result": {
            "iterations_run": report.iterations_run,
            "stop_reason": report.stop_reason,
            "final_linf_error": report.linf_error_to_reference[-1],
            "final_l2_error": report.l2_error_to_reference[-1],
            "final_residual_l2": report.residual_l2[-1],
            "final_linf_norm": report.linf_norm[-1],
            "plateau_start": plateau,
            "max_inner_iterations": max(s.iterations for s in report.solve_stats),
            "total_inner_iterations": sum(s.iterations for s in report.solve_stats),
        },
    }


def _run_benchmark(config: RunConfig, snapshots: tuple[int, ...] = ()) -> tuple[BenchmarkSetup, PIReport]:
    setup = build_benchmark(
        config.benchmark,
        lam=config.lam,
        half_width=config.half_width,
        h=config.h,
        a_max=config.a_max,
    )
    report = run_policy_iteration(
        setup.problem,
        setup.grid,
        setup.params,
        _pi_config(config, snapshots),
        boundary=setup.boundary,
        reference=setup.reference,
    )
    return setup, report


def _cmd_run1d(config: RunConfig) -> int:
    setup, report = _run_benchmark(config)
    os.makedirs(config.out_dir, exist_ok=True)
    _write_csv(
        os.path.join(config.out_dir, "run1d_trajectory.csv"),
        TRAJECTORY_HEADER,
        _trajectory_rows(report),
    )
    _write_json(
        os.path.join(config.out_dir, "run1d_summary.json"),
        _summary_payload(config, setup, report),
    )
    print(
        f"run1d: {report.iterations_run} iterations, "
        f"final linf error {report.linf_error_to_reference[-1]:.6e}"
    )
    return 0


def _slice_rows(
    setup: BenchmarkSetup, report: PIReport, axis: int, fixed: float
) -> tuple[list[str], list[list[float]]]:
    """Profile along one axis with the other coordinate held at `fixed`."""
    coords = setup.grid.axis_coords()
    k = int(round((fixed + setup.grid.half_width) / setup.grid.h))
    if not math.isclose(coords[k], fixed, abs_tol=1e-9):
        raise ValueError(f"slice coordinate {fixed} is not a grid node")
    taken = [n for n in SLICE_ITERATIONS if n in report.value_snapshots]
    header = ["coord", "reference"] + [f"v_n{n}" for n in taken] + ["v_final"]
    fields = [report.value_snapshots[n] for n in taken] + [report.final_value.values]
    rows = []
    for i in range(setup.grid.nodes_per_axis):
        idx = (k, i) if axis == 0 else (i, k)
        row = [coords[i], setup.reference.values[idx]]
        row.extend(f[idx] for f in fields)
        rows.append(row)
    return header, rows


def _cmd_run2d(config: RunConfig) -> int:
    snapshots = tuple(n for n in SLICE_ITERATIONS if n < config.iterations)
    setup, report = _run_benchmark(config, snapshots)
    os.makedirs(config.out_dir, exist_ok=True)
    _write_csv(
        os.path.join(config.out_dir, "run2d_trajectory.csv"),
        TRAJECTORY_HEADER,
        _trajectory_rows(report),
    )
    # Slice with x fixed at SLICE_X0 runs along y, and vice versa.
    header_x, rows_x = _slice_rows(setup, report, axis=0, fixed=SLICE_X0)
    _write_csv(os.path.join(config.out_dir, "run2d_slice_x0.csv"), header_x, rows_x)
    header_y, rows_y = _slice_rows(setup, report, axis=1, fixed=SLICE_Y0)
    _write_csv(os.path.join(config.out_dir, "run2d_slice_y0.csv"), header_y, rows_y)
    _write_json(
        os.path.join(config.out_dir, "run2d_summary.json"),
        _summary_payload(config, setup, report),
    )
    first = report.linf_error_to_reference[0]
    last = report.linf_error_to_reference[-1]
    print(
        f"run2d: {report.iterations_run} iterations, linf error "
        f"{first:.6e} -> {last:.6e}"
    )
    return 0


def _sweep_one(config: RunConfig, h: float, cap: int) -> tuple[float, PIReport]:
    setup = build_benchmark(
        config.benchmark,
        lam=config.lam,
        half_width=config.half_width,
        h=h,
        a_max=config.a_max,
    )
    budget = optimal_iteration_count(h, config.lam, setup.grid.dim, setup.params.viscosity)
    run_cfg = dataclasses.replace(config, h=h, iterations=min(budget, cap))
    report = run_policy_iteration(
        setup.problem,
        setup.grid,
        setup.params,
        _pi_config(run_cfg),
        boundary=setup.boundary,
        reference=setup.reference,
    )
    return h, report


def _cmd_sweep(config: RunConfig, cap: int) -> int:
    h_values = config.sweep_h
    threads = int(os.environ.get("HJB_PI_THREADS", "1"))
    if threads < 1:
        raise ValueError("HJB_PI_THREADS must be at least 1")
    if threads == 1:
        results = [_sweep_one(config, h, cap) for h in h_values]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda h: _sweep_one(config, h, cap), h_values))
    rows = []
    errors = []
    for h, report in results:
        err = report.linf_error_to_reference[-1]
        rows.append(
            [h, float(report.iterations_run), err, report.l2_error_to_reference[-1]]
        )
        errors.append(err)
    fit = fit_power_rate(h_values, errors)
    os.makedirs(config.out_dir, exist_ok=True)
    _write_csv(
        os.path.join(config.out_dir, "sweep.csv"),
        ["h", "n_iterations", "linf_error", "l2_error"],
        rows,
    )
    _write_json(
        os.path.join(config.out_dir, "sweep_summary.json"),
        {
            "config": config.to_dict(),
            "result": {
                "fitted_slope": fit.slope,
                "fitted_intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "points_used": fit.points_used,
                "iteration_cap": cap,
            },
        },
    )
    print(f"sweep: {len(rows)} meshes, fitted error slope {fit.slope:.4f}")
    return 0


def _bench_payload(repeats: int) -> dict:
    """Time both kernel backends on fixed workloads and compare outputs."""
    import importlib

    rng = np.random.default_rng(5150)
    n = 4000
    sub = rng.uniform(-1, 1, n)
    sup = rng.uniform(-1, 1, n)
    sub[0] = 0.0
    sup[-1] = 0.0
    diag = np.abs(sub) + np.abs(sup) + rng.uniform(0.5, 2.0, n)
    rhs = rng.uniform(-1, 1, n)
    m = 79
    ratio = 20.0
    drift = rng.uniform(-0.9, 0.9, size=(2, m, m)) * 2.0 * ratio
    system = StructuredSystem2D(
        center=np.full((m, m), 1.0 + 4.0 * ratio),
        xplus=-(ratio + drift[0] / 4.0),
        xminus=-(ratio - drift[0] / 4.0),
        yplus=-(ratio + drift[1] / 4.0),
        yminus=-(ratio - drift[1] / 4.0),
        rhs=rng.uniform(-1, 1, size=(m, m)),
    )
    names = ["python"]
    if backends.compiled_available():
        names.insert(0, "compiled")
    payload: dict = {"repeats": repeats, "backends": {}}
    outputs: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for name in names:
        mod = importlib.import_module(
            "hjb_pi._kernels" if name == "compiled" else "hjb_pi._kernels_py"
        )
        out = np.empty(n)
        work = np.empty(n)
        t0 = time.perf_counter()
        for _ in range(repeats):
            mod.thomas_solve(sub, diag, sup, rhs, work, out)
        t_thomas = (time.perf_counter() - t0) / repeats
        u = np.zeros((m + 2, m + 2))
        t0 = time.perf_counter()
        for _ in range(repeats):
            mod.sor_sweep(
                u, system.center, system.xplus, system.xminus,
                system.yplus, system.yminus, system.rhs, 1.7,
            )
        t_sor = (time.perf_counter() - t0) / repeats
        payload["backends"][name] = {
            "thomas_seconds_per_solve": t_thomas,
            "sor_seconds_per_sweep": t_sor,
        }
        outputs[name] = (out.copy(), u.copy())
    if len(names) == 2:
        d_thomas = float(np.max(np.abs(outputs["compiled"][0] - outputs["python"][0])))
        d_sor = float(np.max(np.abs(outputs["compiled"][1] - outputs["python"][1])))
        pyb = payload["backends"]["python"]
        cob = payload["backends"]["compiled"]
        payload["agreement"] = {"thomas": d_thomas, "sor": d_sor}
        payload["speedup"] = {
            "thomas": pyb["thomas_seconds_per_solve"] / cob["thomas_seconds_per_solve"],
            "sor": pyb["sor_seconds_per_sweep"] / cob["sor_seconds_per_sweep"],
        }
    return payload


def _cmd_bench(repeats: int, json_path: str | None) -> int:
    payload = _bench_payload(repeats)
    for name, times in payload["backends"].items():
        print(
            f"{name:>8}: thomas {times['thomas_seconds_per_solve'] * 1e6:9.1f} us/solve, "
            f"sor sweep {times['sor_seconds_per_sweep'] * 1e6:9.1f} us/sweep"
        )
    if "speedup" in payload:
        print(
            f"speedup: thomas {payload['speedup']['thomas']:.1f}x, "
            f"sor {payload['speedup']['sor']:.1f}x; max disagreement "
            f"{max(payload['agreement'].values()):.2e}"
        )
    else:
        print("compiled backend not built; timed the pure-Python fallback only")
    if json_path:
        _write_json(json_path, payload)
    return 0


def _add_common_flags(parser: argparse.ArgumentParser, defaults: dict) -> None:
    # A None default means "resolved per benchmark after parsing" (sweep).
    parser.add_argument("--lambda", dest="lam", type=float, default=defaults.get("lam"),
                        help="discount rate (default %(default)s)")
    parser.add_argument("--half-width", type=float, default=defaults.get("half_width"),
                        help="domain half-width L (default %(default)s)")
    parser.add_argument("--h", type=float, default=defaults.get("h"),
                        help="mesh size (default %(default)s)")
    parser.add_argument("--iterations", type=int, default=defaults.get("iterations"),
                        help="outer iteration budget (default %(default)s)")
    parser.add_argument("--theta", type=float, default=defaults.get("theta"),
                        help="policy relaxation weight in (0,1] (default %(default)s)")
    parser.add_argument("--a-max", type=float, default=defaults.get("a_max"),
                        help="control box half-width (default %(default)s)")
    parser.add_argument("--omega", type=float, default=1.7,
                        help="SOR relaxation parameter (default %(default)s)")
    parser.add_argument("--solver-tol", type=float, default=1e-10,
                        help="inner solver update tolerance (default %(default)s)")
    parser.add_argument("--solver-max-iter", type=int, default=5000,
                        help="inner solver sweep cap (default %(default)s)")
    parser.add_argument("--outer-tol", dest="outer_tolerance", type=float, default=None,
                        help="optional early-stop tolerance on max |V_n - V_{n-1}|")
    parser.add_argument("--out-dir", default="out",
                        help="directory for CSV/JSON artifacts (default %(default)s)")


RUN1D_DEFAULTS = {
    "lam": 1.0, "half_width": 3.0, "h": 0.03, "iterations": 50,
    "theta": 1.0, "a_max": 6.0,
}
RUN2D_DEFAULTS = {
    "lam": 1.0, "half_width": 2.0, "h": 0.05, "iterations": 60,
    "theta": 0.18, "a_max": 2.0,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjb-pi",
        description="Policy-iteration benchmarks for a monotone discounted "
        "Hamilton-Jacobi-Bellman scheme.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p1 = sub.add_parser("run1d", help="1D quadratic-cost benchmark, greedy updates")
    _add_common_flags(p1, RUN1D_DEFAULTS)

    p2 = sub.add_parser("run2d", help="2D manufactured benchmark, relaxed updates")
    _add_common_flags(p2, RUN2D_DEFAULTS)

    ps = sub.add_parser("sweep", help="mesh sweep with fitted error slope")
    ps.add_argument("--benchmark", choices=list(BENCHMARK_NAMES), default="lq1d")
    _add_common_flags(ps, {})
    ps.add_argument("--h-list", default="0.2,0.1,0.05,0.025",
                    help="comma-separated mesh sizes (default %(default)s)")
    ps.add_argument("--max-iterations", type=int, default=2000,
                    help="cap on the per-mesh iteration budget (default %(default)s)")

    pc = sub.add_parser("check", help="run the structural property suite")
    pc.add_argument("--fast", action="store_true",
                    help="skip the slow value-iteration cross-check")

    pb = sub.add_parser("bench", help="time compiled vs pure-Python kernels")
    pb.add_argument("--repeats", type=int, default=20,
                    help="timing repetitions per kernel (default %(default)s)")
    pb.add_argument("--json", dest="json_path", default=None,
                    help="optional path for a JSON timing report")
    return parser


def _config_from_args(args: argparse.Namespace, command: str, benchmark: str,
                      initial_policy: str, sweep_h: tuple[float, ...] | None) -> RunConfig:
    return RunConfig(
        command=command,
        benchmark=benchmark,
        lam=args.lam,
        half_width=args.half_width,
        h=args.h,
        iterations=args.iterations,
        theta=args.theta,
        a_max=args.a_max,
        initial_policy=initial_policy,
        omega=args.omega,
        solver_tol=args.solver_tol,
        solver_max_iter=args.solver_max_iter,
        outer_tolerance=args.outer_tolerance,
        sweep_h=sweep_h,
        out_dir=args.out_dir,
    )


def execute_command(argv: list[str]) -> int:
    """Parse argv and run one subcommand; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        if args.subcommand == "run1d":
            config = _config_from_args(args, "run1d", "lq1d", "zero", None)
            return _cmd_run1d(config)
        if args.subcommand == "run2d":
            config = _config_from_args(args, "run2d", "manufactured2d", "adversarial2d", None)
            return _cmd_run2d(config)
        if args.subcommand == "sweep":
            h_values = tuple(float(tok) for tok in args.h_list.split(",") if tok)
            if not h_values:
                raise ValueError("--h-list must name at least one mesh size")
            base = RUN1D_DEFAULTS if args.benchmark == "lq1d" else RUN2D_DEFAULTS
            for key, value in base.items():
                if getattr(args, key) is None:
                    setattr(args, key, value)
            args.h = h_values[0]  # placeholder; per-run h comes from the list
            initial = "zero" if args.benchmark == "lq1d" else "adversarial2d"
            config = _config_from_args(args, "sweep", args.benchmark, initial, h_values)
            if config.outer_tolerance is None:
                config = dataclasses.replace(config, outer_tolerance=1e-12)
            return _cmd_sweep(config, args.max_iterations)
        if args.subcommand == "check":
            failures = run_checks(fast=args.fast)
            return 1 if failures else 0
        if args.subcommand == "bench":
            return _cmd_bench(args.repeats, args.json_path)
        raise ValueError(f"unknown subcommand {args.subcommand!r}")
    except (ValueError, MonotonicityError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(execute_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
