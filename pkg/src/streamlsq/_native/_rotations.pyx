# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Jacobi rotation sweeps, the hot loops of the symmetric eigensolvers.

Two kernels live here: classic two-sided cyclic Jacobi for a symmetric matrix
held in memory, and one-sided Jacobi on the rows of a factor R (diagonalizing
R R^T implicitly), which is the cache-friendly choice for large Gram
eigenproblems.  Rotations below the skip threshold are not applied; skipped
entries are small enough that the convergence target still holds.
"""

from libc.math cimport fabs, sqrt


def jacobi_sweeps(double[:, ::1] a, double[:, ::1] v, double rel_tol, int max_sweeps):
    """Diagonalize symmetric ``a`` in place, accumulating rotations into ``v``.

    Returns ``(sweeps_used, off_norm, target)`` where convergence means
    ``off_norm <= target`` with ``target = rel_tol * ||a||_F``.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, i
    cdef int sweep
    cdef double fro2 = 0.0, off2, target, skip_tol
    cdef double apq, app, aqq, theta, t, c, s, tmp_p, tmp_q

    for p in range(n):
        for q in range(n):
            fro2 += a[p, q] * a[p, q]
    target = rel_tol * sqrt(fro2)
    skip_tol = target / n if n > 0 else 0.0

    off2 = _off_norm2(a)
    if sqrt(off2) <= target:
        return 0, sqrt(off2), target

    for sweep in range(1, max_sweeps + 1):
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) <= skip_tol:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c

                for i in range(n):
                    tmp_p = a[i, p]
                    tmp_q = a[i, q]
                    a[i, p] = c * tmp_p - s * tmp_q
                    a[i, q] = s * tmp_p + c * tmp_q
                for i in range(n):
                    tmp_p = a[p, i]
                    tmp_q = a[q, i]
                    a[p, i] = c * tmp_p - s * tmp_q
                    a[q, i] = s * tmp_p + c * tmp_q
                # Exact values for the rotated 2x2 block (avoids cancellation).
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0

                for i in range(n):
                    tmp_p = v[i, p]
                    tmp_q = v[i, q]
                    v[i, p] = c * tmp_p - s * tmp_q
                    v[i, q] = s * tmp_p + c * tmp_q

        off2 = _off_norm2(a)
        if sqrt(off2) <= target:
            return sweep, sqrt(off2), target

    return max_sweeps, sqrt(off2), target


cdef double _off_norm2(double[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q
    cdef double acc = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            acc += 2.0 * a[p, q] * a[p, q]
    return acc


def onesided_sweeps(double[:, ::1] r, double[:, ::1] v, double rel_tol, int max_sweeps):
    """Orthogonalize the rows of ``r`` by plane rotations (one-sided Jacobi).

    Implicitly diagonalizes the Gram matrix ``r @ r.T``; ``v`` accumulates the
    same rotations row-wise, so on convergence row i of ``v`` is the
    eigenvector for eigenvalue ``||r[i]||^2``.  Returns
    ``(sweeps_used, converged)``.  A pair is accepted as orthogonal when
    ``|<r_p, r_q>| <= rel_tol * ||r_p|| * ||r_q||``; pairs of rows that both
    sit at the numerical null floor of the Gram are never rotated (their
    mutual angles are noise and chasing them stalls convergence).
    """
    cdef Py_ssize_t n = r.shape[0]
    cdef Py_ssize_t m = r.shape[1]
    cdef Py_ssize_t nv = v.shape[1]
    cdef Py_ssize_t p, q, i
    cdef int sweep, rotated
    cdef double beta, alpha, gamma, theta, t, c, s, tmp_p, tmp_q
    cdef double trace = 0.0, null_floor

    cdef double[::1] sq = r[:, 0].copy() if m > 0 else None
    for p in range(n):
        alpha = 0.0
        for i in range(m):
            alpha += r[p, i] * r[p, i]
        sq[p] = alpha
        trace += alpha
    null_floor = 1e-13 * trace

    for sweep in range(1, max_sweeps + 1):
        # Cached norms drift after cancellation-heavy rotations; refresh them
        # exactly once per sweep so skip decisions stay honest.
        for p in range(n):
            alpha = 0.0
            for i in range(m):
                alpha += r[p, i] * r[p, i]
            sq[p] = alpha
        rotated = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = sq[p]
                gamma = sq[q]
                if alpha <= null_floor and gamma <= null_floor:
                    continue
                beta = 0.0
                for i in range(m):
                    beta += r[p, i] * r[q, i]
                if beta * beta <= rel_tol * rel_tol * alpha * gamma:
                    continue
                rotated = 1
                theta = (gamma - alpha) / (2.0 * beta)
                if theta >= 0.0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for i in range(m):
                    tmp_p = r[p, i]
                    tmp_q = r[q, i]
                    r[p, i] = c * tmp_p - s * tmp_q
                    r[q, i] = s * tmp_p + c * tmp_q
                for i in range(nv):
                    tmp_p = v[p, i]
                    tmp_q = v[q, i]
                    v[p, i] = c * tmp_p - s * tmp_q
                    v[q, i] = s * tmp_p + c * tmp_q
                sq[p] = alpha - t * beta
                sq[q] = gamma + t * beta
                if sq[p] <= 0.01 * alpha:
                    tmp_p = 0.0
                    for i in range(m):
                        tmp_p += r[p, i] * r[p, i]
                    sq[p] = tmp_p
                if sq[q] <= 0.01 * gamma:
                    tmp_q = 0.0
                    for i in range(m):
                        tmp_q += r[q, i] * r[q, i]
                    sq[q] = tmp_q
        if not rotated:
            return sweep, True

    return max_sweeps, False
