"""Runnable property suite behind the `check` CLI subcommand.

Each check re-verifies one structural guarantee of the pipeline against an
independent route (closed form, dense scan, dense LU, or the
value-iteration oracle) and returns a pass/fail with a one-line detail.
The same properties are exercised with tighter budgets in the test suite.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import backends
from .benchmarks import build_benchmark
from .grid import GridField, build_grid, discrete_gradient, discrete_laplacian
from .howard import PIConfig, run_policy_iteration
from .linsolve import (
    StructuredSystem2D,
    TridiagonalSystem,
    assemble_evaluation_system,
    solve_dense_oracle,
    solve_sor,
    solve_tridiagonal,
)
from .oracles import (
    bellman_residual_scan,
    fit_quadratic_coefficient,
    lq_value_iteration,
    resolvent_scan,
    scan_extremum,
)
from .problems import (
    PolicyField,
    dynamics,
    greedy_policy,
    hamiltonian,
    lq_value_coefficient,
    lq_reference_value,
    running_cost,
)
from .scheme import (
    bellman_residual,
    certify_monotone_stencil,
    contraction_factor,
    resolvent_map,
)

__all__ = ["run_checks", "CHECKS"]

_SEED = 74521


def _random_field(grid, rng, scale=1.0) -> GridField:
    return GridField(grid, rng.uniform(-scale, scale, size=grid.shape))


def check_grid_operator_exactness() -> tuple[bool, str]:
    """Centered operators are exact on quadratics and cubics."""
    grid = build_grid(3.0, 0.1, dim=1)
    xs = grid.axis_coords()
    quad = GridField(grid, 0.25 * xs**2 - 1.3 * xs + 0.7)
    cubic = GridField(grid, xs**3)
    worst = 0.0
    for i in range(1, grid.nodes_per_axis - 1):
        g = discrete_gradient(quad, (i,))[0]
        worst = max(worst, abs(g - (0.5 * xs[i] - 1.3)))
        lap = discrete_laplacian(cubic, (i,))
        worst = max(worst, abs(lap - 6.0 * xs[i]) / max(1.0, abs(6.0 * xs[i])))
    return worst <= 1e-11, f"max pointwise deviation {worst:.2e}"


def check_greedy_argmin() -> tuple[bool, str]:
    """Closed-form greedy control attains the dense-scan minimum."""
    rng = np.random.default_rng(_SEED)
    setup = build_benchmark("lq1d", h=0.1)
    problem = setup.problem
    worst = 0.0
    for _ in range(50):
        x = rng.uniform(-3, 3, size=(1,))
        p = rng.uniform(-8, 8, size=(1,))
        a = greedy_policy(problem, x, p)
        val = running_cost(problem, x, a) + dynamics(problem, x, a) @ p

        def objective(cand):
            c = problem.state_cost(np.broadcast_to(x, cand.shape[:-1] + (1,))) \
                + 0.5 * np.sum(cand * cand, axis=-1)
            f = problem.drift_base(np.broadcast_to(x, cand.shape[:-1] + (1,))) + cand
            return c + np.sum(f * p, axis=-1)

        scan_val, _ = scan_extremum(objective, problem.a_max, 1, 10000, mode="min", stages=1)
        worst = max(worst, float(val - scan_val[0]))
    return worst <= 1e-9, f"closed form minus scan minimum at most {worst:.2e}"


def check_hamiltonian_scan() -> tuple[bool, str]:
    """hamiltonian equals the negated staged-scan minimum of c + f.p."""
    rng = np.random.default_rng(_SEED + 1)
    setup = build_benchmark("manufactured2d", h=0.25)
    problem = setup.problem
    coords = setup.grid.interior_coordinates().reshape(-1, 2)
    pick = rng.choice(coords.shape[0], size=20, replace=False)
    xs = coords[pick]
    ps = rng.uniform(-3, 3, size=(20, 2))
    worst = 0.0
    for x, p in zip(xs, ps):
        hval = float(hamiltonian(problem, x, p))

        def objective(cand):
            xx = np.broadcast_to(x, cand.shape[:-1] + (2,))
            c = problem.state_cost(xx) + 0.5 * np.sum(cand * cand, axis=-1)
            f = problem.drift_base(xx) + cand
            return c + np.sum(f * p, axis=-1)

        scan_val, _ = scan_extremum(objective, problem.a_max, 2, 1024, mode="min", stages=4)
        worst = max(worst, abs(hval + float(scan_val[0])))
    return worst <= 1e-9, f"max |closed form + scan min| = {worst:.2e}"


def check_lq_hjb_identity() -> tuple[bool, str]:
    """The closed-form 1D value satisfies lam V - x^2/2 + (V')^2/2 = 0."""
    worst = 0.0
    for lam in (0.5, 1.0, 2.0):
        p = lq_value_coefficient(lam)
        x = np.linspace(-3, 3, 100)
        res = lam * lq_reference_value(lam, x) - 0.5 * x * x + 0.5 * (p * x) ** 2
        worst = max(worst, float(np.max(np.abs(res))))
    return worst <= 1e-12, f"max residual {worst:.2e}"


def check_lq_root_oracle() -> tuple[bool, str]:
    """Value iteration recovers the adopted quadratic coefficient."""
    x, v = lq_value_iteration()
    fitted = fit_quadratic_coefficient(x, v)
    adopted = lq_value_coefficient(1.0)
    rejected = (1.0 + math.sqrt(5.0)) / 2.0
    ok = abs(fitted - adopted) <= 0.01 * adopted and abs(fitted - rejected) > 0.10 * rejected
    return ok, f"fitted {fitted:.6f}, adopted {adopted:.6f}, rejected {rejected:.6f}"


def check_monotone_stencils() -> tuple[bool, str]:
    """Sampled stencil certification for both benchmarks."""
    worst_coeff = -np.inf
    worst_dev = 0.0
    for name, h in (("lq1d", 0.03), ("manufactured2d", 0.05)):
        setup = build_benchmark(name, h=h)
        cert = certify_monotone_stencil(setup.problem, setup.grid, setup.params, n_controls=2000)
        worst_coeff = max(worst_coeff, cert.max_neighbor_coefficient)
        worst_dev = max(worst_dev, cert.max_row_sum_deviation)
    ok = worst_coeff <= 0.0 and worst_dev <= 1e-12
    return ok, f"max neighbor weight {worst_coeff:.2e}, row-sum deviation {worst_dev:.2e}"


def check_manufactured_exactness() -> tuple[bool, str]:
    """The 2D reference surface zeroes the Bellman residual on its grid."""
    setup = build_benchmark("manufactured2d")
    res = bellman_residual(setup.problem, setup.params, setup.reference)
    worst = float(np.max(np.abs(res.values)))
    return worst <= 1e-11, f"max |F_h[reference]| = {worst:.2e}"


def check_fixed_point_identity() -> tuple[bool, str]:
    """F_h[u] equals (lam + 2dN/h)(u - T u) on random fields."""
    rng = np.random.default_rng(_SEED + 2)
    setup = build_benchmark("lq1d", h=0.1)
    worst = 0.0
    for _ in range(10):
        u = _random_field(setup.grid, rng)
        lhs = bellman_residual(setup.problem, setup.params, u).values
        tu = resolvent_map(setup.problem, setup.params, u).values
        rhs = setup.params.center_weight * (u.values - tu)
        scale = 1.0 + float(np.max(np.abs(u.values)))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / scale)
    return worst <= 1e-12, f"max scaled identity gap {worst:.2e}"


def check_resolvent_contraction() -> tuple[bool, str]:
    """T is a beta-contraction in the max norm on random pairs."""
    rng = np.random.default_rng(_SEED + 3)
    setup = build_benchmark("lq1d", h=0.1)
    beta = contraction_factor(
        setup.params.lam, setup.params.dim, setup.params.viscosity, setup.params.h
    )
    worst = -np.inf
    for _ in range(10):
        u = _random_field(setup.grid, rng)
        w = _random_field(setup.grid, rng)
        tu = resolvent_map(setup.problem, setup.params, u).interior()
        tw = resolvent_map(setup.problem, setup.params, w).interior()
        gap = float(np.max(np.abs(tu - tw))) - beta * float(np.max(np.abs(u.values - w.values)))
        worst = max(worst, gap)
    return worst <= 1e-12, f"max contraction excess {worst:.2e}"


def check_policy_improvement_identity() -> tuple[bool, str]:
    """Control-free T u matches the staged-scan minimum over controls."""
    rng = np.random.default_rng(_SEED + 4)
    setup = build_benchmark("lq1d", h=0.2)
    worst = 0.0
    for _ in range(5):
        u = _random_field(setup.grid, rng)
        tu = resolvent_map(setup.problem, setup.params, u).interior()
        scan = resolvent_scan(setup.problem, setup.params, u)
        worst = max(worst, float(np.max(np.abs(tu.reshape(-1) - scan))))
    return worst <= 1e-9, f"max |closed form - scan| = {worst:.2e}"


def check_bellman_scan_agreement() -> tuple[bool, str]:
    """Closed-form F_h matches the staged-scan supremum over controls."""
    rng = np.random.default_rng(_SEED + 5)
    setup = build_benchmark("lq1d", h=0.1)
    worst = 0.0
    for _ in range(5):
        u = _random_field(setup.grid, rng)
        closed = bellman_residual(setup.problem, setup.params, u).interior().reshape(-1)
        scan = bellman_residual_scan(setup.problem, setup.params, u)
        worst = max(worst, float(np.max(np.abs(closed - scan))))
    return worst <= 1e-8, f"max |closed form - scan| = {worst:.2e}"


def check_barrier_ordering() -> tuple[bool, str]:
    """Constant fields +-||c||/lam produce signed Bellman residuals."""
    setup = build_benchmark("lq1d", h=0.1)
    coords = setup.grid.node_coordinates()
    cost_sup = float(np.max(setup.problem.state_cost(coords))) + 0.5 * setup.problem.a_max**2
    m = cost_sup / setup.params.lam
    upper = bellman_residual(setup.problem, setup.params, GridField.full(setup.grid, m))
    lower = bellman_residual(setup.problem, setup.params, GridField.full(setup.grid, -m))
    lo = float(np.min(upper.interior()))
    hi = float(np.max(lower.interior()))
    ok = lo >= -1e-12 and hi <= 1e-12
    return ok, f"min residual at +M {lo:.2e}, max residual at -M {hi:.2e}"


def check_thomas_vs_dense() -> tuple[bool, str]:
    """Thomas elimination agrees with dense LU on random dominant systems."""
    rng = np.random.default_rng(_SEED + 6)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 51))
        sub = rng.uniform(-1, 1, n)
        sup = rng.uniform(-1, 1, n)
        sub[0] = 0.0
        sup[-1] = 0.0
        diag = np.abs(sub) + np.abs(sup) + rng.uniform(0.5, 2.0, n)
        rhs = rng.uniform(-1, 1, n)
        system = TridiagonalSystem(sub=sub, diag=diag, sup=sup, rhs=rhs)
        x = solve_tridiagonal(system)
        y = solve_dense_oracle(system)
        worst = max(worst, float(np.max(np.abs(x - y))))
    return worst <= 1e-10, f"max |thomas - dense| = {worst:.2e}"


def check_sor_vs_dense() -> tuple[bool, str]:
    """SOR agrees with dense LU on scheme-shaped 2D systems."""
    rng = np.random.default_rng(_SEED + 7)
    worst = 0.0
    for _ in range(5):
        system = _random_structured_system(rng, 9, 9)
        x, stats = solve_sor(system, omega=1.7, tol=1e-12, max_iter=20000)
        if not stats.converged:
            return False, "SOR failed to converge on a random system"
        y = solve_dense_oracle(system)
        worst = max(worst, float(np.max(np.abs(x - y))))
    return worst <= 1e-8, f"max |sor - dense| = {worst:.2e}"


def _random_structured_system(rng, m0, m1) -> StructuredSystem2D:
    """Five-point system with the scheme's sign structure and dominance."""
    ratio = rng.uniform(5.0, 30.0)
    lam = rng.uniform(0.5, 2.0)
    drift = rng.uniform(-0.9, 0.9, size=(2, m0, m1)) * 2.0 * ratio
    xplus = -(ratio + drift[0] / 4.0)
    xminus = -(ratio - drift[0] / 4.0)
    yplus = -(ratio + drift[1] / 4.0)
    yminus = -(ratio - drift[1] / 4.0)
    center = np.full((m0, m1), lam + 4.0 * ratio)
    rhs = rng.uniform(-1, 1, size=(m0, m1))
    return StructuredSystem2D(
        center=center, xplus=xplus, xminus=xminus, yplus=yplus, yminus=yminus, rhs=rhs
    )


def check_maximum_principle() -> tuple[bool, str]:
    """Nonnegative cost and boundary data give a nonnegative solution."""
    rng = np.random.default_rng(_SEED + 8)
    setup = build_benchmark("lq1d", h=0.1)
    policy = PolicyField(
        setup.grid,
        rng.uniform(-6, 6, size=setup.grid.interior_shape + (1,)),
        setup.problem.a_max,
    )
    system = assemble_evaluation_system(
        setup.problem, setup.params, policy, setup.grid, setup.boundary
    )
    x = solve_tridiagonal(system)
    lo = float(np.min(x))
    return lo >= -1e-12, f"solution minimum {lo:.2e}"


def check_backend_agreement() -> tuple[bool, str]:
    """Compiled and pure-Python kernels produce identical results."""
    if not backends.compiled_available():
        return True, "compiled backend absent, fallback active (skipped)"
    rng = np.random.default_rng(_SEED + 9)
    import importlib

    compiled = importlib.import_module("hjb_pi._kernels")
    python = importlib.import_module("hjb_pi._kernels_py")
    worst = 0.0
    n = 40
    sub = rng.uniform(-1, 1, n)
    sup = rng.uniform(-1, 1, n)
    sub[0] = 0.0
    sup[-1] = 0.0
    diag = np.abs(sub) + np.abs(sup) + rng.uniform(0.5, 2.0, n)
    rhs = rng.uniform(-1, 1, n)
    out_c = np.empty(n)
    out_p = np.empty(n)
    compiled.thomas_solve(sub, diag, sup, rhs, np.empty(n), out_c)
    python.thomas_solve(sub, diag, sup, rhs, np.empty(n), out_p)
    worst = max(worst, float(np.max(np.abs(out_c - out_p))))
    system = _random_structured_system(rng, 7, 7)
    u_c = np.zeros((9, 9))
    u_p = np.zeros((9, 9))
    for _ in range(30):
        compiled.sor_sweep(
            u_c, system.center, system.xplus, system.xminus,
            system.yplus, system.yminus, system.rhs, 1.7,
        )
        python.sor_sweep(
            u_p, system.center, system.xplus, system.xminus,
            system.yplus, system.yminus, system.rhs, 1.7,
        )
    worst = max(worst, float(np.max(np.abs(u_c - u_p))))
    return worst <= 1e-13, f"max backend disagreement {worst:.2e}"


def check_greedy_monotone_decrease() -> tuple[bool, str]:
    """Greedy iterates decrease pointwise on a coarse 1D run."""
    setup = build_benchmark("lq1d", h=0.2)
    config = PIConfig(max_outer_iterations=25, relaxation_theta=1.0)
    report = run_policy_iteration(
        setup.problem, setup.grid, setup.params, config,
        boundary=setup.boundary, reference=setup.reference,
    )
    worst = max(v for v in report.monotonicity_violation[1:])
    return worst <= 1e-9, f"max pointwise increase {worst:.2e}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]], bool]] = [
    # (name, check, include in --fast)
    ("grid-operator-exactness", check_grid_operator_exactness, True),
    ("greedy-argmin-scan", check_greedy_argmin, True),
    ("hamiltonian-scan", check_hamiltonian_scan, True),
    ("lq-hjb-identity", check_lq_hjb_identity, True),
    ("lq-root-oracle", check_lq_root_oracle, False),
    ("monotone-stencils", check_monotone_stencils, True),
    ("manufactured-exactness", check_manufactured_exactness, True),
    ("fixed-point-identity", check_fixed_point_identity, True),
    ("resolvent-contraction", check_resolvent_contraction, True),
    ("policy-improvement-identity", check_policy_improvement_identity, True),
    ("bellman-scan-agreement", check_bellman_scan_agreement, True),
    ("barrier-ordering", check_barrier_ordering, True),
    ("thomas-vs-dense", check_thomas_vs_dense, True),
    ("sor-vs-dense", check_sor_vs_dense, True),
    ("maximum-principle", check_maximum_principle, True),
    ("backend-agreement", check_backend_agreement, True),
    ("greedy-monotone-decrease", check_greedy_monotone_decrease, True),
]


def run_checks(fast: bool = False, write=print) -> int:
    """Run the property suite, print one line per check, return failures."""
    failures = 0
    for name, fn, in_fast in CHECKS:
        if fast and not in_fast:
            write(f"SKIP {name}")
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        failures += 0 if ok else 1
        write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return failures
