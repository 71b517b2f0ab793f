# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Thomas elimination and lexicographic SOR sweeps.

These mirror hjb_pi._kernels_py statement for statement; the extension is
built with FMA contraction disabled so both backends perform the identical
IEEE double operations.  Selection happens in hjb_pi.backends.
"""


def thomas_solve(double[::1] sub, double[::1] diag, double[::1] sup,
                 double[::1] rhs, double[::1] work, double[::1] out):
    """Tridiagonal elimination; sub[0] and sup[n-1] are ignored.

    Fills out with the solution using work as scratch.  Returns 0 on
    success, -1 on a zero pivot (impossible for diagonally dominant input,
    kept as a defensive guard).
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double denom
    cdef int status = 0
    with nogil:
        if diag[0] == 0.0:
            status = -1
        else:
            work[0] = sup[0] / diag[0]
            out[0] = rhs[0] / diag[0]
            for i in range(1, n):
                denom = diag[i] - sub[i] * work[i - 1]
                if denom == 0.0:
                    status = -1
                    break
                work[i] = sup[i] / denom
                out[i] = (rhs[i] - sub[i] * out[i - 1]) / denom
            if status == 0:
                for i in range(n - 2, -1, -1):
                    out[i] = out[i] - work[i] * out[i + 1]
    return status


def sor_sweep(double[:, ::1] u, double[:, ::1] center,
              double[:, ::1] xplus, double[:, ::1] xminus,
              double[:, ::1] yplus, double[:, ::1] yminus,
              double[:, ::1] rhs, double omega):
    """One lexicographic SOR sweep over a padded unknown array.

    u has a one-node ring around the (m0, m1) unknown block; ring entries
    back zeroed coefficients and are never written.  Updates u in place in
    row-major node order and returns the max absolute update, which is the
    stopping quantity of the outer solve loop.
    """
    cdef Py_ssize_t m0 = center.shape[0]
    cdef Py_ssize_t m1 = center.shape[1]
    cdef Py_ssize_t i, j
    cdef double s, unew, upd, maxupd
    maxupd = 0.0
    with nogil:
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
