"""Independent dense solver for the batched least-squares problem.

Used as ground truth against the streaming solver: the full measurement
matrix is assembled with no exploitation of its banded structure and the
normal equations are solved by one dense Cholesky.  Deliberately simple
enough to trust; problem sizes here stay in the low thousands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite, SingularSystem
from .linalg import cholesky_factor, cholesky_solve_factored


@dataclass
class BatchProblem:
    """Batches 0..K with their per-packet regularization weights."""

    batches: list
    lam: np.ndarray

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        if len(self.batches) == 0:
            raise ValueError("need at least one batch")
        if self.lam.shape != (len(self.batches),):
            raise ValueError("one lambda per batch required")
        n = self.batches[0].a.shape[1]
        for batch in self.batches:
            if batch.a.shape[1] != n or batch.b.shape[1] != n:
                raise ValueError("inconsistent coefficient counts across batches")

    @property
    def n_coeffs(self) -> int:
        return self.batches[0].a.shape[1]

    @property
    def last(self) -> int:
        return len(self.batches) - 1

    def stack(self) -> tuple[np.ndarray, np.ndarray]:
        """Full measurement matrix (rows are measurements, column blocks are
        packets) and the stacked value vector."""
        n = self.n_coeffs
        n_packets = len(self.batches)
        rows = sum(batch.size for batch in self.batches)
        phi = np.zeros((rows, n_packets * n))
        y = np.zeros(rows)
        row = 0
        for j, batch in enumerate(self.batches):
            m = batch.size
            phi[row : row + m, j * n : (j + 1) * n] = batch.a
            if j > 0:
                phi[row : row + m, (j - 1) * n : j * n] = batch.b
            y[row : row + m] = batch.values
            row += m
        return phi, y


def solve_dense(problem: BatchProblem) -> np.ndarray:
    """Joint least-squares estimate for all packets, shape (K + 1, N).

    Solves the explicitly assembled normal equations by dense Cholesky, with
    one refinement pass if the first solve leaves a noticeable residual.
    """
    n = problem.n_coeffs
    phi, y = problem.stack()
    h = phi.T @ phi + np.kron(np.diag(problem.lam), np.eye(n))
    h = 0.5 * (h + h.T)
    rhs = phi.T @ y
    try:
        factor = cholesky_factor(h)
    except NotPositiveDefinite as exc:
        raise SingularSystem(f"normal equations not positive definite: {exc}") from exc
    alpha = cholesky_solve_factored(factor, rhs)
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm > 0:
        resid = rhs - h @ alpha
        if np.linalg.norm(resid) > 1e-9 * rhs_norm:
            alpha = alpha + cholesky_solve_factored(factor, resid)
            resid = rhs - h @ alpha
            if np.linalg.norm(resid) > 1e-9 * rhs_norm:
                raise SingularSystem(
                    f"residual {np.linalg.norm(resid):.3e} after refinement "
                    f"(rhs norm {rhs_norm:.3e})"
                )
    return alpha.reshape(len(problem.batches), n)


def residual(problem: BatchProblem, alphas) -> float:
    """Objective value: squared data misfit plus the weighted coefficient energy."""
    alphas = np.asarray(alphas, dtype=float).reshape(len(problem.batches), problem.n_coeffs)
    phi, y = problem.stack()
    misfit = phi @ alphas.ravel() - y
    penalty = float(np.sum(problem.lam * np.sum(alphas * alphas, axis=1)))
    return float(misfit @ misfit) + penalty


def gradient_norm(problem: BatchProblem, alphas) -> float:
    """Norm of the objective gradient at ``alphas`` (zero at the optimum)."""
    alphas = np.asarray(alphas, dtype=float).reshape(len(problem.batches), problem.n_coeffs)
    phi, y = problem.stack()
    grad = phi.T @ (phi @ alphas.ravel() - y)
    grad = grad + (problem.lam[:, None] * alphas).ravel()
    return float(np.linalg.norm(grad))


def solve_stacked_qr(problem: BatchProblem) -> np.ndarray:
    """Second, independent route: QR on the regularized stacked system.

    Appends sqrt(lambda)-scaled identity rows and solves the pure
    least-squares problem, bypassing the normal equations entirely.
    """
    n = problem.n_coeffs
    n_packets = len(problem.batches)
    phi, y = problem.stack()
    reg = np.kron(np.diag(np.sqrt(problem.lam)), np.eye(n))
    keep = np.diag(reg) > 0
    stacked = np.vstack([phi, reg[keep]])
    target = np.concatenate([y, np.zeros(int(np.count_nonzero(keep)))])
    q, r = np.linalg.qr(stacked)
    alpha = np.linalg.solve(r, q.T @ target)
    return alpha.reshape(n_packets, n)
