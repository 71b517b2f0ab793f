"""Benchmark wiring: problem, grid, scheme parameters, reference, boundary.

Bundles everything a run needs for the two built-in benchmarks and records
their default driver settings (iteration budget, relaxation, initial
policy).  Dirichlet data always comes from the reference solution, so the
only errors in play are iteration and discretization errors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid, GridField, build_grid, interior_gradient
from .problems import (
    ControlProblem,
    lq1d_problem,
    lq_reference_value,
    make_grid_lookup,
    manufactured_drift,
    manufactured_source,
    manufactured_value,
)
from .scheme import SchemeParams, viscosity_coefficient

__all__ = ["BenchmarkSetup", "build_benchmark", "BENCHMARK_NAMES"]

BENCHMARK_NAMES = ("lq1d", "manufactured2d")


@dataclass(frozen=True)
class BenchmarkSetup:
    """Everything needed to run one benchmark at one resolution."""

    name: str
    problem: ControlProblem
    grid: Grid
    params: SchemeParams
    reference: GridField
    boundary: GridField
    default_iterations: int
    default_theta: float
    default_initial_policy: str


def build_benchmark(
    name: str,
    lam: float = 1.0,
    half_width: float | None = None,
    h: float | None = None,
    a_max: float | None = None,
) -> BenchmarkSetup:
    """Construct a benchmark setup; None arguments take benchmark defaults."""
    if name == "lq1d":
        return _build_lq1d(
            lam=lam,
            half_width=3.0 if half_width is None else half_width,
            h=0.03 if h is None else h,
            a_max=6.0 if a_max is None else a_max,
        )
    if name == "manufactured2d":
        return _build_manufactured2d(
            lam=lam,
            half_width=2.0 if half_width is None else half_width,
            h=0.05 if h is None else h,
            a_max=2.0 if a_max is None else a_max,
        )
    raise ValueError(f"unknown benchmark {name!r}; expected one of {BENCHMARK_NAMES}")


def _build_lq1d(lam: float, half_width: float, h: float, a_max: float) -> BenchmarkSetup:
    grid = build_grid(half_width, h, dim=1)
    problem = lq1d_problem(lam=lam, a_max=a_max)
    n = viscosity_coefficient(problem, grid, "bench1d")
    params = SchemeParams(viscosity=n, h=grid.h, dim=1, lam=lam)
    coords = grid.node_coordinates()
    reference = GridField(grid, lq_reference_value(lam, coords[..., 0]))
    return BenchmarkSetup(
        name="lq1d",
        problem=problem,
        grid=grid,
        params=params,
        reference=reference,
        boundary=reference,
        default_iterations=50,
        default_theta=1.0,
        default_initial_policy="zero",
    )


def _build_manufactured2d(lam: float, half_width: float, h: float, a_max: float) -> BenchmarkSetup:
    grid = build_grid(half_width, h, dim=2)
    skeleton = ControlProblem(
        lam=lam,
        drift_base=_drift_on_coords,
        state_cost=lambda x: np.zeros(np.asarray(x).shape[:-1]),
        a_max=a_max,
        dim=2,
    )
    n = viscosity_coefficient(skeleton, grid, "bench2d")
    params = SchemeParams(viscosity=n, h=grid.h, dim=2, lam=lam)
    source = manufactured_source(grid, viscosity=n, lam=lam)
    problem = replace(skeleton, state_cost=make_grid_lookup(source))
    coords = grid.node_coordinates()
    reference = GridField(grid, manufactured_value(coords[..., 0], coords[..., 1]))
    # the manufactured cancellation needs the clip in the greedy map inactive
    ref_policy_mag = float(np.max(np.abs(interior_gradient(reference))))
    if ref_policy_mag >= a_max:
        raise ValueError(
            f"reference policy magnitude {ref_policy_mag:.3f} saturates the "
            f"control box a_max={a_max}; enlarge the box"
        )
    return BenchmarkSetup(
        name="manufactured2d",
        problem=problem,
        grid=grid,
        params=params,
        reference=reference,
        boundary=reference,
        default_iterations=60,
        default_theta=0.18,
        default_initial_policy="adversarial2d",
    )


def _drift_on_coords(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return manufactured_drift(x[..., 0], x[..., 1])
