"""Dense linear-algebra and quadrature kernels shared by the rest of the package.

Everything operates on plain float64 numpy arrays.  Block sizes in this
problem stay in the hundreds, so the solvers favor transparency over
scalability: Cholesky with an explicit pivot check, cyclic Jacobi for the
symmetric eigenproblem (hot loop in ``streamlsq._native``), and power
iteration for spectral norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _native
from .errors import NoConvergence, NotPositiveDefinite

#: Relative pivot threshold below which a matrix is declared not SPD.
CHOLESKY_PIVOT_RTOL = 1e-14

#: Relative symmetry tolerance required of eigensolver / Cholesky inputs.
SYMMETRY_RTOL = 1e-10


def as_matrix(m) -> np.ndarray:
    """Validate and convert to a finite float64 2-D array."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def check_symmetric(m, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale and np.max(np.abs(a - a.T)) > rtol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return a


# ---------------------------------------------------------------------------
# Quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for integration over [nodes[0], nodes[-1]]'s panel span."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-D arrays")
        if nodes.size and np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")

    def integrate(self, f) -> float:
        """Integrate a vectorized callable (or an array of node values)."""
        values = f(self.nodes) if callable(f) else np.asarray(f, dtype=float)
        return float(self.weights @ values)


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_legendre(a: float, b: float, order: int) -> QuadratureRule:
    """Gauss-Legendre rule on a single panel [a, b].

    Exact (to roundoff) for polynomials of degree <= 2*order - 1.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if not 2 <= order <= 32:
        raise ValueError(f"order must be in 2..32, got {order}")
    x, w = _leggauss(order)
    half = 0.5 * (b - a)
    return QuadratureRule(a + half * (x + 1.0), half * w)


def composite_rule(
    a: float,
    b: float,
    order: int = 10,
    max_panel: float | None = None,
    breakpoints=(),
) -> QuadratureRule:
    """Composite Gauss-Legendre rule with panels split at ``breakpoints``.

    Each segment between consecutive breakpoints is subdivided into panels of
    width at most ``max_panel`` (one panel if ``max_panel`` is None).
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    cuts = sorted({float(a), float(b), *(float(p) for p in breakpoints if a < p < b)})
    nodes, weights = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if max_panel is None:
            n_panels = 1
        else:
            n_panels = max(1, int(np.ceil((hi - lo) / max_panel - 1e-12)))
        edges = np.linspace(lo, hi, n_panels + 1)
        for plo, phi in zip(edges[:-1], edges[1:]):
            rule = gauss_legendre(plo, phi, order)
            nodes.append(rule.nodes)
            weights.append(rule.weights)
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights))


# ---------------------------------------------------------------------------
# Cholesky


def cholesky_factor(m) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric positive-definite matrix.

    Raises NotPositiveDefinite when a pivot drops to 1e-14 of the largest
    diagonal entry, which in this package signals missing regularization.
    """
    a = check_symmetric(m)
    n = a.shape[0]
    ell = np.zeros_like(a)
    max_diag = np.max(np.diag(a)) if n else 0.0
    threshold = CHOLESKY_PIVOT_RTOL * max_diag
    for j in range(n):
        d = a[j, j] - ell[j, :j] @ ell[j, :j]
        if d <= threshold:
            raise NotPositiveDefinite(f"pivot {d:.3e} at index {j} (threshold {threshold:.3e})")
        ell[j, j] = np.sqrt(d)
        if j + 1 < n:
            ell[j + 1 :, j] = (a[j + 1 :, j] - ell[j + 1 :, :j] @ ell[j, :j]) / ell[j, j]
    return ell


def _solve_lower(ell: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = b.astype(float).copy()
    for i in range(ell.shape[0]):
        x[i] = (x[i] - ell[i, :i] @ x[:i]) / ell[i, i]
    return x


def _solve_upper_t(ell: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Solves ell.T @ x = b with ell lower triangular.
    n = ell.shape[0]
    x = b.astype(float).copy()
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - ell[i + 1 :, i] @ x[i + 1 :]) / ell[i, i]
    return x


def cholesky_solve_factored(ell: np.ndarray, rhs) -> np.ndarray:
    """Solve M x = rhs given the Cholesky factor of M."""
    b = np.asarray(rhs, dtype=float)
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    if b.shape[0] != ell.shape[0]:
        raise ValueError("rhs row count does not match the factor")
    x = _solve_upper_t(ell, _solve_lower(ell, b))
    return x[:, 0] if vector else x


def cholesky_solve(m, rhs) -> np.ndarray:
    """Solve M x = rhs for symmetric positive-definite M (vector or matrix rhs)."""
    return cholesky_solve_factored(cholesky_factor(m), rhs)


# ---------------------------------------------------------------------------
# Symmetric eigensolver


def jacobi_eigh(m, rel_tol: float = 1e-11, max_sweeps: int = 30):
    """Full symmetric eigendecomposition by cyclic Jacobi rotations.

    Args:
        m: symmetric matrix, at most 2048 rows.
        rel_tol: off-diagonal Frobenius target relative to ||m||_F.
        max_sweeps: sweep budget before giving up.

    Returns:
        (eigenvalues descending, eigenvector columns in matching order).
    """
    a = check_symmetric(m)
    n = a.shape[0]
    if n > 2048:
        raise ValueError(f"matrix too large for the dense eigensolver: {n}")
    if n == 0:
        return np.empty(0), np.empty((0, 0))
    work = 0.5 * (a + a.T)
    if not work.flags["C_CONTIGUOUS"]:
        work = np.ascontiguousarray(work)
    vecs = np.eye(n)
    sweeps, off, target = _native.jacobi_sweeps(work, vecs, rel_tol, max_sweeps)
    if off > target:
        raise NoConvergence(f"off-diagonal norm {off:.3e} > {target:.3e} after {sweeps} sweeps")
    diag = np.diag(work).copy()
    order = np.argsort(-diag, kind="stable")
    return diag[order], vecs[:, order]


def gram_eigh(g, rel_tol: float = 1e-13, max_sweeps: int = 60):
    """Eigendecomposition of the Gram matrix ``g.T @ g`` without forming it.

    One-sided Jacobi on the columns of ``g``; all eigenvalues come back
    non-negative and the eigenvectors are orthogonal to rotation accuracy.
    Much faster than :func:`jacobi_eigh` for large Grams because every
    rotation touches contiguous memory.

    Returns:
        (eigenvalues descending, eigenvector columns in matching order).
    """
    a = as_matrix(g)
    m, n = a.shape
    if n == 0:
        return np.empty(0), np.empty((0, 0))
    work = np.ascontiguousarray(a.T)  # rows of `work` are columns of g
    vecs = np.eye(n)
    sweeps, converged = _native.onesided_sweeps(work, vecs, rel_tol, max_sweeps)
    if not converged:
        raise NoConvergence(f"column orthogonalization incomplete after {sweeps} sweeps")
    vals = np.einsum("ij,ij->i", work, work)
    order = np.argsort(-vals, kind="stable")
    return vals[order], np.ascontiguousarray(vecs[order].T)


def sym_extremes(m) -> tuple[float, float]:
    """(smallest, largest) eigenvalue of a symmetric matrix."""
    vals, _ = jacobi_eigh(m)
    return float(vals[-1]), float(vals[0])


# ---------------------------------------------------------------------------
# Spectral norm


def spectral_norm(m, rel_tol: float = 1e-12, max_iter: int = 1000) -> float:
    """Largest singular value by power iteration on the Gram matrix.

    Deterministic all-ones start; 1000-iteration cap.  Accurate to about 1e-8
    relative for matrices without pathological spectral-gap structure.
    """
    a = as_matrix(m)
    if a.size == 0 or not np.any(a):
        return 0.0
    gram = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    n = gram.shape[0]
    v = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for _ in range(max_iter):
        w = gram @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        lam_new = float(v @ w)
        v = w / norm_w
        if abs(lam_new - lam) <= rel_tol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))
