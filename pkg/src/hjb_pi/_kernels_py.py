"""Pure-Python twins of the compiled kernels in _kernels.pyx.

Statement-for-statement identical arithmetic, so results match the compiled
backend to the last bit (the extension is built without FMA contraction).
Slow but dependency-free; hjb_pi.backends falls back here when the extension
is not importable.
"""

from __future__ import annotations


def thomas_solve(sub, diag, sup, rhs, work, out) -> int:
    """Tridiagonal elimination; see the compiled twin for the contract."""
    n = diag.shape[0]
    if diag[0] == 0.0:
        return -1
    work[0] = sup[0] / diag[0]
    out[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - sub[i] * work[i - 1]
        if denom == 0.0:
            return -1
        work[i] = sup[i] / denom
        out[i] = (rhs[i] - sub[i] * out[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        out[i] = out[i] - work[i] * out[i + 1]
    return 0


def sor_sweep(u, center, xplus, xminus, yplus, yminus, rhs, omega) -> float:
    """One lexicographic SOR sweep on a padded unknown array, in place."""
    m0, m1 = center.shape
    maxupd = 0.0
    for i in range(m0):
        for j in range(m1):
            s = (xplus[i, j] * u[i + 2, j + 1]
                 + xminus[i, j] * u[i, j + 1]
                 + yplus[i, j] * u[i + 1, j + 2]
                 + yminus[i, j] * u[i + 1, j])
            unew = (1.0 - omega) * u[i + 1, j + 1] \
                + omega * ((rhs[i, j] - s) / center[i, j])
            upd = unew - u[i + 1, j + 1]
            if upd < 0.0:
                upd = -upd
            if upd > maxupd:
                maxupd = upd
            u[i + 1, j + 1] = unew
    return maxupd
