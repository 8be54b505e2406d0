"""Streaming block solver for the batched least-squares problem.

The normal equations over batches 0..K are block tridiagonal; this module
maintains their block LU factorization incrementally.  Each arriving batch
promotes the previous tail block, appends a new tail, and refreshes recent
packet estimates with a backward sweep whose depth is configurable.  With the
off-diagonal coupling blocks small relative to the diagonal ones, estimate
corrections decay geometrically with lag, so a shallow sweep loses almost
nothing (see the analysis module for the quantitative envelope).

Conventions: the coupling block stored for step k is
``E[k] = A[k+1].T @ B[k+1]``, the block below the diagonal of the normal
equations; the upper block is its transpose.  All per-block inversions are
Cholesky solves; inverses are never formed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    HistoryTruncated,
    NonContiguousBatch,
    NotPositiveDefinite,
    SingularBlock,
    SingularTail,
)
from .linalg import cholesky_factor, cholesky_solve_factored
from .measurement import SampleBatch

CHECKPOINT_VERSION = 1

#: Default scale for boundary-batch regularization relative to trace(A'A)/N.
DEFAULT_TAIL_SCALE = 1e-8


@dataclass
class EstimateHistory:
    """Append-only record of coefficient estimates.

    ``snapshots[(k, K)]`` is the estimate for packet k after batch K was
    absorbed; ``frozen[k]`` holds values emitted by the freeze policy.
    """

    n_coeffs: int
    snapshots: dict = field(default_factory=dict)
    frozen: dict = field(default_factory=dict)

    def record(self, k: int, upto: int, alpha: np.ndarray):
        self.snapshots[(k, upto)] = np.array(alpha, dtype=float)

    def estimate(self, k: int, upto: int) -> np.ndarray:
        return self.snapshots[(k, upto)]

    def latest(self, k: int) -> np.ndarray:
        upto = max(big for (kk, big) in self.snapshots if kk == k)
        return self.snapshots[(k, upto)]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "K", "n", "alpha"])
            for (k, upto) in sorted(self.snapshots):
                for n, value in enumerate(self.snapshots[(k, upto)], start=1):
                    writer.writerow([k, upto, n, repr(float(value))])

    def frozen_to_csv(self, path):
        write_converged_csv(self.frozen, path)


def write_converged_csv(alphas: dict, path):
    """Per-packet converged coefficients as ``k,n,alpha_star`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "n", "alpha_star"])
        for k in sorted(alphas):
            for n, value in enumerate(alphas[k], start=1):
                writer.writerow([k, n, repr(float(value))])


@dataclass
class FactorState:
    """Rolling factorization state after absorbing batches 0..K.

    Retains, per past step k < K: the sweep blocks U[k], the forward vectors
    v[k], and the coupling blocks E[k].  The tail holds the current Schur
    complement Q'_K and right-hand side w'_K; ``alpha_tail`` is the newest
    packet's estimate.  Replaying the same batches reproduces this state
    bit for bit.
    """

    n_coeffs: int
    k_first: int
    K: int
    lam: list
    q_tail: np.ndarray
    w_tail: np.ndarray
    alpha_tail: np.ndarray
    u_blocks: dict = field(default_factory=dict)
    e_blocks: dict = field(default_factory=dict)
    v_vectors: dict = field(default_factory=dict)
    history: EstimateHistory = None
    tail_transient: bool = False
    released_below: int = 0

    def retained_blocks(self) -> int:
        """Number of N x N blocks and N vectors currently held (memory gauge)."""
        return len(self.u_blocks) + len(self.e_blocks) + len(self.v_vectors) + 1


def default_tail_lambda(batch: SampleBatch, scale: float = DEFAULT_TAIL_SCALE) -> float:
    """Regularization sized to the batch energy: scale * trace(A'A) / N."""
    if batch.a is None or batch.a.size == 0:
        return scale
    return scale * float(np.sum(batch.a * batch.a)) / batch.a.shape[1]


def _gram(m: np.ndarray) -> np.ndarray:
    g = m.T @ m
    return 0.5 * (g + g.T)


def init(batch0: SampleBatch, lam0: float | None = None, tail_transient: bool = False) -> FactorState:
    """Start the factorization from batch 0.

    The first batch touches no earlier packet, so its tail block is just
    the regularized self Gram.  ``lam0 = None`` applies the default boundary
    regularization; pass 0.0 explicitly for none.
    """
    if batch0.a is None:
        raise ValueError("batch 0 must be assembled before init")
    n = batch0.a.shape[1]
    if lam0 is None:
        lam0 = default_tail_lambda(batch0)
    q_tail = _gram(batch0.a) + lam0 * np.eye(n)
    w_tail = batch0.a.T @ batch0.values
    try:
        alpha = cholesky_solve_factored(cholesky_factor(q_tail), w_tail)
    except NotPositiveDefinite as exc:
        raise SingularTail(f"initial tail block not positive definite: {exc}") from exc
    history = EstimateHistory(n_coeffs=n)
    history.record(batch0.k, batch0.k, alpha)
    return FactorState(
        n_coeffs=n,
        k_first=batch0.k,
        K=batch0.k,
        lam=[float(lam0)],
        q_tail=q_tail,
        w_tail=w_tail,
        alpha_tail=alpha,
        history=history,
        tail_transient=tail_transient,
        released_below=batch0.k,
    )


def step(
    state: FactorState,
    batch: SampleBatch,
    lam: float | None = None,
    l_max: int | None = None,
) -> dict:
    """Absorb the next batch and refresh estimates back to lag ``l_max``.

    Promotes the old tail (its packet now has both its batches), appends the
    new tail block, and runs the backward sweep.  Returns the refreshed
    estimates ``{k: alpha}``; the same values are recorded in the history.

    An arriving batch only covers part of its packet's support, so the new
    tail block is usually singular without regularization; ``lam = None``
    applies the default energy-scaled value (pass 0.0 explicitly to opt
    out).  In ``tail_transient`` mode the regularizer is subtracted again
    when the tail is promoted, leaving interior packets unregularized.

    Raises:
        NonContiguousBatch: if ``batch.k != state.K + 1``.
        SingularBlock: if a promoted or new tail block is not positive
            definite (regularization needed, e.g. for an empty batch).
    """
    if batch.a is None or batch.b is None:
        raise ValueError("batch must be assembled before step")
    if batch.k != state.K + 1:
        raise NonContiguousBatch(f"expected batch {state.K + 1}, got {batch.k}")
    if lam is None:
        lam = default_tail_lambda(batch)
    k_prev = state.K
    n = state.n_coeffs

    q_prev = state.q_tail + _gram(batch.b)
    if state.tail_transient and state.lam[-1] != 0.0:
        q_prev = q_prev - state.lam[-1] * np.eye(n)
        state.lam[-1] = 0.0
    w_prev = state.w_tail + batch.b.T @ batch.values

    rhs = w_prev.copy()
    if k_prev - 1 in state.v_vectors:
        rhs = rhs - state.e_blocks[k_prev - 1] @ state.v_vectors[k_prev - 1]
    try:
        q_factor = cholesky_factor(q_prev)
    except NotPositiveDefinite as exc:
        raise SingularBlock(f"block {k_prev} lost positive definiteness: {exc}") from exc
    v_prev = cholesky_solve_factored(q_factor, rhs)

    e_prev = batch.a.T @ batch.b
    u_prev = cholesky_solve_factored(q_factor, e_prev.T)

    q_new = _gram(batch.a) + lam * np.eye(n) - e_prev @ u_prev
    q_new = 0.5 * (q_new + q_new.T)
    w_new = batch.a.T @ batch.values
    try:
        alpha_new = cholesky_solve_factored(cholesky_factor(q_new), w_new - e_prev @ v_prev)
    except NotPositiveDefinite as exc:
        raise SingularBlock(f"tail block {batch.k} not positive definite: {exc}") from exc

    state.u_blocks[k_prev] = u_prev
    state.e_blocks[k_prev] = e_prev
    state.v_vectors[k_prev] = v_prev
    state.q_tail = q_new
    state.w_tail = w_new
    state.alpha_tail = alpha_new
    state.K = batch.k
    state.lam.append(float(lam))

    updates = {batch.k: alpha_new}
    state.history.record(batch.k, batch.k, alpha_new)
    depth = batch.k - state.released_below if l_max is None else min(l_max, batch.k - state.k_first)
    alpha = alpha_new
    for back in range(1, depth + 1):
        k = batch.k - back
        if k not in state.v_vectors:
            break
        alpha = state.v_vectors[k] - state.u_blocks[k] @ alpha
        updates[k] = alpha
        state.history.record(k, batch.k, alpha)
    return updates


def full_backward_sweep(state: FactorState) -> np.ndarray:
    """Exact joint least-squares solution for every observed packet.

    Requires the full retained history (no freezing).  Returns an array
    with one row per packet, row i the estimate for packet k_first + i.
    """
    if state.released_below > state.k_first:
        raise HistoryTruncated(
            f"history released below k={state.released_below}; full sweep unavailable"
        )
    first = state.k_first
    out = np.empty((state.K - first + 1, state.n_coeffs))
    out[state.K - first] = state.alpha_tail
    for k in range(state.K - 1, first - 1, -1):
        if k not in state.v_vectors:
            raise HistoryTruncated(f"missing history for packet {k}")
        out[k - first] = state.v_vectors[k] - state.u_blocks[k] @ out[k + 1 - first]
    return out


def freeze_policy(state: FactorState, lag: int) -> dict:
    """Freeze packets older than ``lag`` and release their per-k memory.

    A packet's estimate changes by a geometrically shrinking amount per new
    batch, so estimates ``lag`` batches old are emitted as converged values.
    Returns the newly frozen ``{k: alpha_star}``.
    """
    if lag < 1:
        raise ValueError("freeze lag must be at least 1")
    newly = {}
    cutoff = state.K - lag
    for k in range(state.released_below, cutoff + 1):
        if k in state.history.frozen:
            continue
        newly[k] = state.history.latest(k)
        state.history.frozen[k] = newly[k]
    if cutoff >= state.released_below:
        for k in list(state.u_blocks):
            if k < cutoff:
                del state.u_blocks[k]
                del state.e_blocks[k]
                del state.v_vectors[k]
        state.released_below = max(state.released_below, cutoff)
    return newly


# ---------------------------------------------------------------------------
# Checkpointing


def save_checkpoint(state: FactorState, path):
    """Versioned JSON dump sufficient to resume streaming exactly.

    Floats round-trip losslessly through JSON's repr-based encoding.
    """
    payload = {
        "version": CHECKPOINT_VERSION,
        "n_coeffs": state.n_coeffs,
        "k_first": state.k_first,
        "K": state.K,
        "lam": state.lam,
        "tail_transient": state.tail_transient,
        "released_below": state.released_below,
        "q_tail": state.q_tail.tolist(),
        "w_tail": state.w_tail.tolist(),
        "alpha_tail": state.alpha_tail.tolist(),
        "u_blocks": {str(k): v.tolist() for k, v in state.u_blocks.items()},
        "e_blocks": {str(k): v.tolist() for k, v in state.e_blocks.items()},
        "v_vectors": {str(k): v.tolist() for k, v in state.v_vectors.items()},
        "snapshots": [
            [k, upto, alpha.tolist()] for (k, upto), alpha in state.history.snapshots.items()
        ],
        "frozen": {str(k): v.tolist() for k, v in state.history.frozen.items()},
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_checkpoint(path) -> FactorState:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload["version"] != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload['version']}")
    history = EstimateHistory(n_coeffs=payload["n_coeffs"])
    for k, upto, alpha in payload["snapshots"]:
        history.snapshots[(k, upto)] = np.array(alpha, dtype=float)
    history.frozen = {int(k): np.array(v, dtype=float) for k, v in payload["frozen"].items()}
    return FactorState(
        n_coeffs=payload["n_coeffs"],
        k_first=payload["k_first"],
        K=payload["K"],
        lam=list(payload["lam"]),
        q_tail=np.array(payload["q_tail"], dtype=float),
        w_tail=np.array(payload["w_tail"], dtype=float),
        alpha_tail=np.array(payload["alpha_tail"], dtype=float),
        u_blocks={int(k): np.array(v, dtype=float) for k, v in payload["u_blocks"].items()},
        e_blocks={int(k): np.array(v, dtype=float) for k, v in payload["e_blocks"].items()},
        v_vectors={int(k): np.array(v, dtype=float) for k, v in payload["v_vectors"].items()},
        history=history,
        tail_transient=payload["tail_transient"],
        released_below=payload["released_below"],
    )
