"""Independent reference computations used to verify the main pipeline.

Nothing here shares code with the scheme: the value-iteration oracle solves
the 1D benchmark by semi-Lagrangian dynamic programming on its own grid,
and the control-scan oracles locate Hamiltonian extrema by derivative-free
staged sampling.  Agreement between these and the closed-form paths is what
the verification suite checks.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .grid import GridField, _shifted, interior_gradient, interior_laplacian
from .problems import ControlProblem
from .scheme import SchemeParams

__all__ = [
    "lq_value_iteration",
    "fit_quadratic_coefficient",
    "scan_extremum",
    "bellman_residual_scan",
    "resolvent_scan",
]


def lq_value_iteration(
    lam: float = 1.0,
    half_width: float = 3.0,
    h: float = 0.005,
    dt: float = 0.02,
    a_max: float = 6.0,
    n_controls: int = 601,
    tol: float = 2e-11,
    max_steps: int = 20000,
) -> tuple[np.ndarray, np.ndarray]:
    """Discounted value iteration for the 1D benchmark, independent scheme.

    Semi-Lagrangian update with trapezoidal cost quadrature over one step:

        V(x) <- min_a [ dt/2 * (c(x, a) + e^{-lam dt} c(x + dt a, a))
                        + e^{-lam dt} V(x + dt a) ],

    linear interpolation in space, states clamped to the box.  Iterates to
    a fixed point and returns (x_nodes, V).  Runs on its own fine grid; no
    code shared with the policy-iteration pipeline.
    """
    x = np.linspace(-half_width, half_width, int(round(2 * half_width / h)) + 1)
    controls = np.linspace(-a_max, a_max, n_controls)
    gamma = math.exp(-lam * dt)
    v = np.zeros_like(x)

    # per-control precomputation: arrival points and stage costs
    arrivals = []
    stages = []
    for a in controls:
        xn = np.clip(x + dt * a, -half_width, half_width)
        cost_here = 0.5 * x * x + 0.5 * a * a
        cost_there = 0.5 * xn * xn + 0.5 * a * a
        arrivals.append(xn)
        stages.append(0.5 * dt * (cost_here + gamma * cost_there))

    for _ in range(max_steps):
        best = np.full_like(x, np.inf)
        for xn, stage in zip(arrivals, stages):
            cand = stage + gamma * np.interp(xn, x, v)
            np.minimum(best, cand, out=best)
        delta = float(np.max(np.abs(best - v)))
        v = best
        if delta <= tol:
            break
    else:
        raise RuntimeError(f"value iteration did not reach {tol} in {max_steps} steps")
    return x, v


def fit_quadratic_coefficient(x: np.ndarray, v: np.ndarray, fit_half_width: float = 1.5) -> float:
    """Coefficient P in V ~ P x^2 / 2, least squares over |x| <= fit_half_width.

    The fit window stays away from the box edge where state clamping
    distorts the oracle's values.
    """
    mask = np.abs(x) <= fit_half_width
    coeffs = np.polyfit(x[mask], v[mask], 2)
    return 2.0 * float(coeffs[0])


def scan_extremum(
    objective: Callable[[np.ndarray], np.ndarray],
    a_max: float,
    dim: int,
    n_points: int,
    mode: str = "min",
    stages: int = 3,
    centers: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Derivative-free staged scan of the control box.

    objective maps controls of shape (batch, n_candidates, dim) to values
    (batch, n_candidates).  Each stage scans n_points candidates per axis
    around the incumbent (the whole box at stage one) and shrinks the scan
    window to one spacing, so the extremum is located to box_width *
    (2/n_points)^stages without using any derivative information.  Returns
    (best values, best controls) with batch size taken from `centers`
    (default: a single batch entry at the origin).
    """
    if centers is None:
        centers = np.zeros((1, dim))
    centers = np.array(centers, dtype=float)
    batch = centers.shape[0]
    pick = np.argmin if mode == "min" else np.argmax
    per_axis = max(2, int(round(n_points ** (1.0 / dim))))
    offsets = np.linspace(-1.0, 1.0, per_axis)
    if dim == 1:
        pattern = offsets[:, None]
    else:
        ox, oy = np.meshgrid(offsets, offsets, indexing="ij")
        pattern = np.stack([ox.ravel(), oy.ravel()], axis=-1)
    half = a_max
    best_vals = None
    best_ctrl = centers
    for _ in range(stages):
        cand = best_ctrl[:, None, :] + half * pattern[None, :, :]
        np.clip(cand, -a_max, a_max, out=cand)
        vals = objective(cand)
        sel = pick(vals, axis=1)
        best_vals = vals[np.arange(batch), sel]
        best_ctrl = cand[np.arange(batch), sel]
        half *= 2.0 / (per_axis - 1)
    return best_vals, best_ctrl


def _interior_data(problem: ControlProblem, params: SchemeParams, field: GridField):
    grid = field.grid
    coords = grid.interior_coordinates().reshape(-1, grid.dim)
    u = field.interior().reshape(-1)
    g = interior_gradient(field).reshape(-1, grid.dim)
    lap = interior_laplacian(field).reshape(-1)
    b = np.asarray(problem.drift_base(coords), dtype=float)
    state = np.asarray(problem.state_cost(coords), dtype=float)
    return coords, u, g, lap, b, state


def bellman_residual_scan(
    problem: ControlProblem,
    params: SchemeParams,
    field: GridField,
    n_points: int = 1000,
    stages: int = 4,
) -> np.ndarray:
    """sup_a L_a u at interior nodes by staged control scan (flat array).

    Oracle twin of scheme.bellman_residual that never uses the closed-form
    maximizer.
    """
    _, u, g, lap, b, state = _interior_data(problem, params, field)
    nu_h = params.viscosity * field.grid.h

    def objective(a: np.ndarray) -> np.ndarray:
        c = state[:, None] + 0.5 * np.sum(a * a, axis=-1)
        f = b[:, None, :] + a
        adv = np.sum(f * g[:, None, :], axis=-1)
        return params.lam * u[:, None] - c - adv - nu_h * lap[:, None]

    vals, _ = scan_extremum(
        objective,
        problem.a_max,
        field.grid.dim,
        n_points,
        mode="max",
        stages=stages,
        centers=np.zeros((u.size, field.grid.dim)),
    )
    return vals


def resolvent_scan(
    problem: ControlProblem,
    params: SchemeParams,
    field: GridField,
    n_points: int = 1000,
    stages: int = 4,
) -> np.ndarray:
    """inf_a T_a u at interior nodes by staged control scan (flat array)."""
    grid = field.grid
    _, _, _, _, b, state = _interior_data(problem, params, field)
    ratio = params.viscosity / grid.h
    ups, dns = [], []
    for k in range(grid.dim):
        ups.append(_shifted(field.values, k, +1, grid.dim).reshape(-1))
        dns.append(_shifted(field.values, k, -1, grid.dim).reshape(-1))

    def objective(a: np.ndarray) -> np.ndarray:
        c = state[:, None] + 0.5 * np.sum(a * a, axis=-1)
        f = b[:, None, :] + a
        num = c
        for k in range(grid.dim):
            num = num + (ratio + f[..., k] / (2.0 * grid.h)) * ups[k][:, None]
            num = num + (ratio - f[..., k] / (2.0 * grid.h)) * dns[k][:, None]
        return num / params.center_weight

    vals, _ = scan_extremum(
        objective,
        problem.a_max,
        grid.dim,
        n_points,
        mode="min",
        stages=stages,
        centers=np.zeros((state.size, grid.dim)),
    )
    return vals
