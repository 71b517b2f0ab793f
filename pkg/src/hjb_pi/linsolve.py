"""Policy-evaluation linear systems: structure-aware assembly and solvers.

Assembly moves Dirichlet neighbor terms into the right-hand side, leaving a
strictly diagonally dominant system over interior unknowns (dominance margin
lam, inherited from the monotone stencil).  1D systems are tridiagonal and
solved by Thomas elimination; 2D systems keep the five-point structure and
are solved by SOR with lexicographic sweeps.  A dense LU path exists purely
as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends
from .grid import Grid, GridField
from .problems import ControlProblem, PolicyField, policy_cost_and_drift
from .scheme import MonotonicityError, SchemeParams

__all__ = [
    "TridiagonalSystem",
    "StructuredSystem2D",
    "SolveStats",
    "SolverError",
    "assemble_evaluation_system",
    "solve_tridiagonal",
    "solve_sor",
    "solve_dense_oracle",
    "system_to_dense",
]

DENSE_ORACLE_LIMIT = 2500


class SolverError(RuntimeError):
    """A linear solve failed (zero pivot or non-convergence)."""


@dataclass
class TridiagonalSystem:
    """Rows center*u_i + sup_i*u_{i+1} + sub_i*u_{i-1} = rhs_i over interior
    unknowns; sub[0] and sup[-1] are 0 (boundary terms live in rhs)."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.shape[0]


@dataclass
class StructuredSystem2D:
    """Five-point rows center*u + xplus*u_E + xminus*u_W + yplus*u_N
    + yminus*u_S = rhs over the (m0, m1) interior block; coefficients that
    would reference boundary nodes are 0 with their contribution in rhs."""

    center: np.ndarray
    xplus: np.ndarray
    xminus: np.ndarray
    yplus: np.ndarray
    yminus: np.ndarray
    rhs: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.center.shape

    @property
    def n(self) -> int:
        return self.center.size


@dataclass
class SolveStats:
    iterations: int
    final_update_norm: float
    converged: bool


def _neighbor_weights(params: SchemeParams, f: np.ndarray) -> tuple[list, list]:
    """Per-axis (plus, minus) weight arrays; raises on a sign violation."""
    ratio = params.viscosity / params.h
    tol = 1e-12 * max(1.0, ratio)
    plus, minus = [], []
    for k in range(params.dim):
        fk = f[..., k]
        pk = -ratio - fk / (2.0 * params.h)
        mk = -ratio + fk / (2.0 * params.h)
        worst = max(float(pk.max()), float(mk.max()))
        if worst > tol:
            raise MonotonicityError(
                f"assembly found positive off-diagonal {worst:.3e} on axis {k}"
            )
        plus.append(pk)
        minus.append(mk)
    return plus, minus


def assemble_evaluation_system(
    problem: ControlProblem,
    params: SchemeParams,
    policy: PolicyField,
    grid: Grid,
    boundary: GridField,
):
    """Assemble L_alpha u = 0 over interior unknowns with Dirichlet data.

    Returns a TridiagonalSystem (1D) or StructuredSystem2D (2D).  Dominance
    margin lam is asserted row by row.
    """
    if boundary.grid != grid:
        raise ValueError("boundary field lives on a different grid")
    c, f = policy_cost_and_drift(problem, grid, policy)
    plus, minus = _neighbor_weights(params, f)
    center = params.center_weight
    bvals = boundary.values

    if grid.dim == 1:
        m = grid.nodes_per_axis - 2
        diag = np.full(m, center)
        sup = plus[0].copy()
        sub = minus[0].copy()
        rhs = c.copy()
        rhs[0] -= sub[0] * bvals[0]
        sub[0] = 0.0
        rhs[-1] -= sup[-1] * bvals[-1]
        sup[-1] = 0.0
        _assert_dominance(diag, np.abs(sub) + np.abs(sup), params.lam)
        return TridiagonalSystem(sub=sub, diag=diag, sup=sup, rhs=rhs)

    m0 = m1 = grid.nodes_per_axis - 2
    xplus, yplus = plus
    xminus, yminus = minus
    xplus = xplus.copy()
    xminus = xminus.copy()
    yplus = yplus.copy()
    yminus = yminus.copy()
    rhs = c.copy()
    # fold boundary neighbors into the right-hand side, then zero the weights
    rhs[0, :] -= xminus[0, :] * bvals[0, 1:-1]
    xminus[0, :] = 0.0
    rhs[-1, :] -= xplus[-1, :] * bvals[-1, 1:-1]
    xplus[-1, :] = 0.0
    rhs[:, 0] -= yminus[:, 0] * bvals[1:-1, 0]
    yminus[:, 0] = 0.0
    rhs[:, -1] -= yplus[:, -1] * bvals[1:-1, -1]
    yplus[:, -1] = 0.0
    offsum = np.abs(xplus) + np.abs(xminus) + np.abs(yplus) + np.abs(yminus)
    _assert_dominance(np.full((m0, m1), center), offsum, params.lam)
    return StructuredSystem2D(
        center=np.full((m0, m1), center),
        xplus=xplus,
        xminus=xminus,
        yplus=yplus,
        yminus=yminus,
        rhs=rhs,
    )


def _assert_dominance(diag: np.ndarray, offsum: np.ndarray, lam: float) -> None:
    margin = diag - offsum
    if float(margin.min()) < lam - 1e-12 * float(diag.max()):
        raise MonotonicityError(
            f"diagonal dominance margin {float(margin.min()):.6g} fell below {lam}"
        )


def solve_tridiagonal(system: TridiagonalSystem) -> np.ndarray:
    """Thomas elimination through the active kernel backend."""
    n = system.n
    out = np.empty(n)
    work = np.empty(n)
    status = backends.active_backend().thomas_solve(
        np.ascontiguousarray(system.sub),
        np.ascontiguousarray(system.diag),
        np.ascontiguousarray(system.sup),
        np.ascontiguousarray(system.rhs),
        work,
        out,
    )
    if status != 0:
        raise SolverError("zero pivot in tridiagonal elimination")
    return out


def solve_sor(
    system: StructuredSystem2D,
    omega: float = 1.7,
    tol: float = 1e-10,
    max_iter: int = 5000,
    initial: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveStats]:
    """SOR with lexicographic sweeps; stops on the max-norm of the update.

    The returned stats report the sweep count and last update norm; callers
    decide whether a non-converged result is fatal.
    """
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must lie in (0, 2), got {omega}")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter at least 1")
    m0, m1 = system.shape
    padded = np.zeros((m0 + 2, m1 + 2))
    if initial is not None:
        initial = np.asarray(initial, dtype=float)
        if initial.shape != (m0, m1):
            raise ValueError(f"initial guess shape {initial.shape}, expected {(m0, m1)}")
        padded[1:-1, 1:-1] = initial
    sweep = backends.active_backend().sor_sweep
    args = (
        np.ascontiguousarray(system.center),
        np.ascontiguousarray(system.xplus),
        np.ascontiguousarray(system.xminus),
        np.ascontiguousarray(system.yplus),
        np.ascontiguousarray(system.yminus),
        np.ascontiguousarray(system.rhs),
    )
    update = np.inf
    iters = 0
    for iters in range(1, max_iter + 1):
        update = sweep(padded, *args, omega)
        if not np.isfinite(update):
            raise SolverError(f"SOR diverged after {iters} sweeps")
        if update <= tol:
            break
    converged = update <= tol
    return padded[1:-1, 1:-1].copy(), SolveStats(
        iterations=iters, final_update_norm=float(update), converged=bool(converged)
    )


def system_to_dense(system) -> tuple[np.ndarray, np.ndarray]:
    """Dense (A, b) for either system type; test/oracle use only."""
    if isinstance(system, TridiagonalSystem):
        n = system.n
        a = np.diag(system.diag)
        a += np.diag(system.sub[1:], -1)
        a += np.diag(system.sup[:-1], 1)
        return a, system.rhs.copy()
    if isinstance(system, StructuredSystem2D):
        m0, m1 = system.shape
        n = m0 * m1
        a = np.zeros((n, n))
        b = system.rhs.reshape(-1).copy()
        for i in range(m0):
            for j in range(m1):
                row = i * m1 + j
                a[row, row] = system.center[i, j]
                if i + 1 < m0:
                    a[row, row + m1] = system.xplus[i, j]
                if i > 0:
                    a[row, row - m1] = system.xminus[i, j]
                if j + 1 < m1:
                    a[row, row + 1] = system.yplus[i, j]
                if j > 0:
                    a[row, row - 1] = system.yminus[i, j]
        return a, b
    raise TypeError(f"unsupported system type {type(system).__name__}")


def solve_dense_oracle(system) -> np.ndarray:
    """LAPACK dense solve of the same system; reference path for tests."""
    if system.n > DENSE_ORACLE_LIMIT:
        raise ValueError(f"dense oracle limited to {DENSE_ORACLE_LIMIT} unknowns")
    a, b = system_to_dense(system)
    x = np.linalg.solve(a, b)
    if isinstance(system, StructuredSystem2D):
        return x.reshape(system.shape)
    return x
