"""Pure-numpy twin of the compiled Jacobi rotation kernels.

Same cyclic rotation order and same per-element arithmetic as the Cython
version; row and column updates are vectorized.  Kept interchangeable so the
backends can be benchmarked against each other.
"""

import numpy as np


def jacobi_sweeps(a, v, rel_tol, max_sweeps):
    """Diagonalize symmetric ``a`` in place, accumulating rotations into ``v``.

    Returns ``(sweeps_used, off_norm, target)``; converged when
    ``off_norm <= target`` with ``target = rel_tol * ||a||_F``.
    """
    n = a.shape[0]
    target = rel_tol * np.sqrt(np.sum(a * a))
    skip_tol = target / n if n > 0 else 0.0

    off = _off_norm(a)
    if off <= target:
        return 0, off, target

    for sweep in range(1, max_sweeps + 1):
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip_tol:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                c, s, t = _rotation(app, aqq, apq)

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

        off = _off_norm(a)
        if off <= target:
            return sweep, off, target

    return max_sweeps, off, target


def onesided_sweeps(r, v, rel_tol, max_sweeps):
    """Orthogonalize the rows of ``r`` by plane rotations (one-sided Jacobi).

    Implicitly diagonalizes ``r @ r.T``; ``v`` accumulates rotations row-wise.
    Returns ``(sweeps_used, converged)``.
    """
    n = r.shape[0]
    sq = np.einsum("ij,ij->i", r, r)
    null_floor = 1e-13 * float(np.sum(sq))
    tol2 = rel_tol * rel_tol

    for sweep in range(1, max_sweeps + 1):
        # Cached norms drift after cancellation-heavy rotations; refresh them
        # exactly once per sweep so skip decisions stay honest.
        sq = np.einsum("ij,ij->i", r, r)
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = sq[p]
                gamma = sq[q]
                if alpha <= null_floor and gamma <= null_floor:
                    continue
                beta = float(r[p] @ r[q])
                if beta * beta <= tol2 * alpha * gamma:
                    continue
                rotated = True
                c, s, t = _rotation(alpha, gamma, beta)
                row_p = r[p].copy()
                row_q = r[q].copy()
                r[p] = c * row_p - s * row_q
                r[q] = s * row_p + c * row_q
                vp = v[p].copy()
                vq = v[q].copy()
                v[p] = c * vp - s * vq
                v[q] = s * vp + c * vq
                sq[p] = alpha - t * beta
                sq[q] = gamma + t * beta
                if sq[p] <= 0.01 * alpha:
                    sq[p] = float(r[p] @ r[p])
                if sq[q] <= 0.01 * gamma:
                    sq[q] = float(r[q] @ r[q])
        if not rotated:
            return sweep, True

    return max_sweeps, False


def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    if theta >= 0.0:
        t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
    else:
        t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, t * c, t


def _off_norm(a):
    off = a - np.diag(np.diag(a))
    return np.sqrt(np.sum(off * off))
