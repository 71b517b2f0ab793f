"""Semi-discrete Bellman operator with artificial viscosity.

The per-policy linear operator at an interior node x is

    (L_a u)(x) = lam*u(x) - c(x, a) - f(x, a) . grad_h u(x) - N*h*lap_h u(x)

with centered differences, and the scheme operator is F_h[u] = sup_a L_a u.
Collecting stencil weights,

    L_a u = (lam + 2*d*N/h) u(x) - c(x, a)
            + sum_i (-N/h - f_i/(2h)) u(x + h e_i)
            + sum_i (-N/h + f_i/(2h)) u(x - h e_i),

so every neighbor weight is nonpositive exactly when N >= |f_i|/2, which is
the monotonicity condition enforced throughout.  Dividing by the center
weight gives the resolvent map T_a, a contraction with factor
beta = (2*d*N/h) / (lam + 2*d*N/h), and F_h[u] = (lam + 2*d*N/h)(u - T u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridField, interior_gradient, interior_laplacian, _shifted
from .problems import ControlProblem, PolicyField, grid_drift, policy_cost_and_drift

__all__ = [
    "SchemeParams",
    "StencilCoeffs",
    "StencilCertificate",
    "MonotonicityError",
    "viscosity_coefficient",
    "stencil_coefficients",
    "apply_policy_operator",
    "bellman_residual",
    "resolvent_map",
    "contraction_factor",
    "certify_monotone_stencil",
]

VISCOSITY_MODES = ("theory", "bench1d", "bench2d")


class MonotonicityError(ValueError):
    """A stencil weight or assembled off-diagonal has the wrong sign."""


@dataclass(frozen=True)
class SchemeParams:
    """Discretization parameters: viscosity coefficient N, spacing h, dim, lam."""

    viscosity: float
    h: float
    dim: int
    lam: float

    def __post_init__(self) -> None:
        for name in ("viscosity", "h", "lam"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")

    @property
    def center_weight(self) -> float:
        return self.lam + 2.0 * self.dim * self.viscosity / self.h


@dataclass(frozen=True)
class StencilCoeffs:
    """Monotone stencil weights at one node: center plus per-axis neighbors."""

    center: float
    plus: np.ndarray
    minus: np.ndarray


@dataclass(frozen=True)
class StencilCertificate:
    """Result of a sampled monotonicity certification."""

    max_neighbor_coefficient: float
    max_row_sum_deviation: float
    nodes_checked: int
    controls_checked: int


def viscosity_coefficient(problem: ControlProblem, grid: Grid, mode: str) -> float:
    """Artificial viscosity N for the given problem and grid.

    theory   max(1, ||f||_inf / 2) with ||f||_inf estimated over grid nodes
             and control-box corners (|b_i| + a_max per component);
    bench1d  max(1, a_max / 2), the 1D benchmark rule;
    bench2d  1.05 * (||b||_inf + a_max) / 2 with ||b||_inf the grid maximum
             component magnitude of the drift, the 2D benchmark rule.
    """
    if mode == "bench1d":
        return max(1.0, 0.5 * problem.a_max)
    b = grid_drift(problem, grid)
    bmax = float(np.max(np.abs(b)))
    if mode == "bench2d":
        return 1.05 * 0.5 * (bmax + problem.a_max)
    if mode == "theory":
        return max(1.0, 0.5 * (bmax + problem.a_max))
    raise ValueError(f"unknown viscosity mode {mode!r}; expected one of {VISCOSITY_MODES}")


def stencil_coefficients(params: SchemeParams, f_at_node: np.ndarray) -> StencilCoeffs:
    """Stencil weights for one node given the drift value f there.

    Raises MonotonicityError if any neighbor weight is positive beyond
    rounding, i.e. if the viscosity does not dominate |f_i|/2.
    """
    f = np.asarray(f_at_node, dtype=float)
    if f.shape != (params.dim,):
        raise ValueError(f"f has shape {f.shape}, expected ({params.dim},)")
    ratio = params.viscosity / params.h
    plus = -ratio - f / (2.0 * params.h)
    minus = -ratio + f / (2.0 * params.h)
    tol = 1e-12 * max(1.0, ratio)
    worst = max(float(plus.max()), float(minus.max()))
    if worst > tol:
        raise MonotonicityError(
            f"positive neighbor weight {worst:.3e}: viscosity {params.viscosity} "
            f"does not dominate |f|/2 = {float(np.max(np.abs(f))) / 2.0:.6g}"
        )
    return StencilCoeffs(center=params.center_weight, plus=plus, minus=minus)


def _check_params(problem: ControlProblem, grid: Grid, params: SchemeParams) -> None:
    if params.dim != grid.dim or params.dim != problem.dim:
        raise ValueError("params, grid, and problem dimensions disagree")
    if params.h != grid.h:
        raise ValueError(f"params.h={params.h} does not match grid.h={grid.h}")


def apply_policy_operator(
    problem: ControlProblem,
    params: SchemeParams,
    policy: PolicyField,
    field: GridField,
) -> GridField:
    """L_alpha applied to a field: residual of the frozen-policy equation.

    Interior nodes carry lam*u - c_alpha - f_alpha . grad_h u - N*h*lap_h u;
    boundary entries are 0.
    """
    _check_params(problem, grid := field.grid, params)
    c, f = policy_cost_and_drift(problem, grid, policy)
    g = interior_gradient(field)
    lap = interior_laplacian(field)
    res = (
        params.lam * field.interior()
        - c
        - np.sum(f * g, axis=-1)
        - params.viscosity * grid.h * lap
    )
    out = np.zeros(grid.shape)
    out[(slice(1, -1),) * grid.dim] = res
    return GridField(grid, out)


def bellman_residual(
    problem: ControlProblem, params: SchemeParams, field: GridField
) -> GridField:
    """F_h[u] via the closed-form control maximizer; boundary entries are 0."""
    _check_params(problem, grid := field.grid, params)
    inner = grid.interior_coordinates()
    g = interior_gradient(field)
    lap = interior_laplacian(field)
    ham = _hamiltonian_interior(problem, inner, g)
    res = params.lam * field.interior() + ham - params.viscosity * grid.h * lap
    out = np.zeros(grid.shape)
    out[(slice(1, -1),) * grid.dim] = res
    return GridField(grid, out)


def _hamiltonian_interior(problem: ControlProblem, coords: np.ndarray, p: np.ndarray) -> np.ndarray:
    a = np.clip(-p, -problem.a_max, problem.a_max)
    c = np.asarray(problem.state_cost(coords), dtype=float) + 0.5 * np.sum(a * a, axis=-1)
    f = np.asarray(problem.drift_base(coords), dtype=float) + a
    return -c - np.sum(f * p, axis=-1)


def resolvent_map(
    problem: ControlProblem,
    params: SchemeParams,
    field: GridField,
    policy: PolicyField | None = None,
) -> GridField:
    """One sweep of the damped fixed-point map T (or T_alpha when given).

    At interior nodes,

        T_a u = [ c(x, a) + sum_i (N/h + f_i/(2h)) u(x + h e_i)
                            + sum_i (N/h - f_i/(2h)) u(x - h e_i) ]
                / (lam + 2*d*N/h),

    and without a policy the exact minimizer over controls is used, so the
    result is T u = inf_a T_a u.  Boundary values pass through unchanged,
    making Dirichlet data invariant under iteration of the map.
    """
    _check_params(problem, grid := field.grid, params)
    if policy is None:
        g = interior_gradient(field)
        a = np.clip(-g, -problem.a_max, problem.a_max)
        policy = PolicyField(grid, a, problem.a_max)
    c, f = policy_cost_and_drift(problem, grid, policy)
    ratio = params.viscosity / grid.h
    num = c.copy()
    for k in range(grid.dim):
        up = _shifted(field.values, k, +1, grid.dim)
        dn = _shifted(field.values, k, -1, grid.dim)
        fk = f[..., k]
        num += (ratio + fk / (2.0 * grid.h)) * up
        num += (ratio - fk / (2.0 * grid.h)) * dn
    out = field.values.copy()
    out[(slice(1, -1),) * grid.dim] = num / params.center_weight
    return GridField(grid, out)


def contraction_factor(lam: float, dim: int, viscosity: float, h: float) -> float:
    """beta = (2*d*N/h) / (lam + 2*d*N/h), the resolvent contraction factor."""
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    for name, v in (("lam", lam), ("viscosity", viscosity), ("h", h)):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{name} must be positive, got {v}")
    r = 2.0 * dim * viscosity / h
    return r / (lam + r)


def certify_monotone_stencil(
    problem: ControlProblem,
    grid: Grid,
    params: SchemeParams,
    n_controls: int = 10000,
    seed: int = 20240,
    chunk: int = 128,
) -> StencilCertificate:
    """Sampled certification of stencil monotonicity over nodes x controls.

    Draws n_controls controls uniformly from the box (corners always
    included), forms the stencil at every interior node for each, and checks
    that all neighbor weights are nonpositive and that center plus neighbor
    weights reproduce lam to rounding.  Raises MonotonicityError on failure.
    """
    _check_params(problem, grid, params)
    rng = np.random.default_rng(seed)
    controls = rng.uniform(-problem.a_max, problem.a_max, size=(n_controls, grid.dim))
    corners = np.array(
        np.meshgrid(*[[-problem.a_max, problem.a_max]] * grid.dim, indexing="ij")
    ).reshape(grid.dim, -1).T
    controls = np.concatenate([controls, corners], axis=0)

    b = np.asarray(problem.drift_base(grid.interior_coordinates()), dtype=float)
    b = b.reshape(-1, grid.dim)
    ratio = params.viscosity / params.h
    center = params.center_weight
    tol = 1e-12 * max(1.0, ratio)

    worst = -np.inf
    rowdev = 0.0
    for start in range(0, controls.shape[0], chunk):
        a = controls[start : start + chunk]
        f = b[None, :, :] + a[:, None, :]
        plus = -ratio - f / (2.0 * params.h)
        minus = -ratio + f / (2.0 * params.h)
        worst = max(worst, float(plus.max()), float(minus.max()))
        rowsum = center + np.sum(plus + minus, axis=-1)
        rowdev = max(rowdev, float(np.max(np.abs(rowsum - params.lam))))
    if worst > tol:
        raise MonotonicityError(
            f"sampled certification failed: neighbor weight {worst:.3e} > 0"
        )
    return StencilCertificate(
        max_neighbor_coefficient=worst,
        max_row_sum_deviation=rowdev,
        nodes_checked=b.shape[0],
        controls_checked=controls.shape[0],
    )
