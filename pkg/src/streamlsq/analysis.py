"""Conditioning diagnostics, convergence envelopes, and lag-error tables.

Quantities tracked per stream: kappa (the common scale of the diagonal
blocks), delta (their relative spread), theta (relative size of the coupling
blocks).  When ``theta <= (1 - delta) / 2`` the Schur-complement recursion is
a contraction: every factorization block stays within ``kappa * eps`` of
``kappa * I`` for the closed-form ``eps`` below, and packet estimates
converge geometrically at rate ``theta / (1 - eps)`` as later batches
arrive.  This module computes those numbers from measured blocks, checks the
predicted bounds against observed estimate corrections, and formats the
lag-error tables.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .basis import PacketBasis
from .errors import OutOfRegime
from .linalg import cholesky_factor, cholesky_solve_factored, jacobi_eigh, spectral_norm
from .stream_solver import EstimateHistory

EM_DASH = "—"


# ---------------------------------------------------------------------------
# Contraction fixed point


def epsilon_bound(delta: float, theta: float, return_sequence: bool = False):
    """Tight bound on the relative deviation of the factorization blocks.

    Closed form ``eps = (1 + delta)/2 - sqrt((1 - delta)^2 / 4 - theta^2)``,
    the fixed point of ``e -> delta + theta^2 / (1 - e)``.  The iterated
    sequence starting from delta is verified to increase monotonically to the
    fixed point within 1e-12.

    Raises:
        OutOfRegime: if ``delta >= 1`` or ``theta > (1 - delta) / 2``.
    """
    if delta >= 1.0 or delta < 0.0:
        raise OutOfRegime(f"delta must be in [0, 1), got {delta}")
    if theta < 0.0 or theta > (1.0 - delta) / 2.0 + 1e-15:
        raise OutOfRegime(f"theta {theta} exceeds (1 - delta)/2 = {(1 - delta) / 2}")
    eps = (1.0 + delta) / 2.0 - np.sqrt(max((1.0 - delta) ** 2 / 4.0 - theta**2, 0.0))

    # The recursion contracts geometrically strictly inside the regime; at the
    # exact boundary the fixed point is parabolic and the sequence creeps, so
    # there we settle for monotone approach from below.
    seq = [delta]
    converged = False
    for _ in range(100000):
        nxt = delta + theta**2 / (1.0 - seq[-1])
        if nxt < seq[-1] - 1e-15:
            raise RuntimeError("deviation recursion decreased; inputs inconsistent")
        if nxt > eps + 1e-12:
            raise RuntimeError("deviation recursion overshot its fixed point")
        seq.append(nxt)
        if abs(nxt - eps) <= 1e-12:
            converged = True
            break
        if nxt - seq[-2] < 1e-16:
            break
    rate = theta / (1.0 - eps) if eps < 1.0 else 1.0
    if not converged and rate < 0.999:
        raise RuntimeError("deviation recursion failed to reach its fixed point")
    return (float(eps), np.array(seq)) if return_sequence else float(eps)


# ---------------------------------------------------------------------------
# Block extraction and conditioning report


def blocks_from_batches(batches, lam):
    """Normal-equation blocks and their factorization for assembled batches.

    Returns ``(d_blocks, e_blocks, q_blocks, q_tail_blocks)``: the diagonal
    blocks D_0..D_{K-1}, couplings E_0..E_{K-1} (below-diagonal orientation),
    the recursion blocks Q_0..Q_{K-1}, and the tail Schur complements
    Q'_0..Q'_K observed at each arrival.
    """
    lam = np.asarray(lam, dtype=float)
    n = batches[0].a.shape[1]
    eye = np.eye(n)
    self_blocks = [b.a.T @ b.a + lam_k * eye for b, lam_k in zip(batches, lam)]
    d_blocks = [
        self_blocks[k] + batches[k + 1].b.T @ batches[k + 1].b for k in range(len(batches) - 1)
    ]
    e_blocks = [batches[k + 1].a.T @ batches[k + 1].b for k in range(len(batches) - 1)]

    q_blocks = []
    q_tail_blocks = [self_blocks[0]]
    for k in range(len(batches) - 1):
        if k == 0:
            q_k = d_blocks[0]
        else:
            u = cholesky_solve_factored(cholesky_factor(q_blocks[k - 1]), e_blocks[k - 1].T)
            q_k = d_blocks[k] - e_blocks[k - 1] @ u
        q_k = 0.5 * (q_k + q_k.T)
        q_blocks.append(q_k)
        u = cholesky_solve_factored(cholesky_factor(q_k), e_blocks[k].T)
        q_tail = self_blocks[k + 1] - e_blocks[k] @ u
        q_tail_blocks.append(0.5 * (q_tail + q_tail.T))
    return d_blocks, e_blocks, q_blocks, q_tail_blocks


@dataclass
class ConditioningReport:
    """Measured block spectra and the derived convergence constants."""

    lam_min_d: np.ndarray
    lam_max_d: np.ndarray
    norm_e: np.ndarray
    lam_min_q: np.ndarray
    lam_max_q: np.ndarray
    lam_min_q_tail: np.ndarray
    kappa: float
    delta: float
    theta: float
    eps: float
    eps_measured: float
    in_regime: bool
    lambda_bound: float
    m_y: float
    rho: float
    big_c: float

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["k", "lam_min_D", "lam_max_D", "norm_E", "lam_min_Q", "lam_max_Q", "lam_min_Qp"]
            )
            for k in range(self.lam_min_q_tail.size):
                row = [k]
                for arr in (
                    self.lam_min_d,
                    self.lam_max_d,
                    self.norm_e,
                    self.lam_min_q,
                    self.lam_max_q,
                ):
                    row.append(repr(float(arr[k])) if k < arr.size else "")
                row.append(repr(float(self.lam_min_q_tail[k])))
                writer.writerow(row)

    def summary(self) -> dict:
        return {
            "kappa": self.kappa,
            "delta": self.delta,
            "theta": self.theta,
            "eps": self.eps,
            "eps_measured": self.eps_measured,
            "in_regime": self.in_regime,
            "lambda_bound": self.lambda_bound,
            "m_y": self.m_y,
            "rho": self.rho,
            "big_c": self.big_c,
        }

    def __str__(self):
        lines = ["conditioning report:"]
        for key, value in self.summary().items():
            lines.append(f"  {key} = {value}")
        return "\n".join(lines)


def envelope_constant(delta: float, theta: float, eps: float, lambda_bound: float) -> float:
    """Prefactor of the geometric convergence envelope."""
    return float(
        (1.0 + lambda_bound * theta) * (1.0 - eps) / (1.0 - eps - theta) ** 2 * np.sqrt(1.0 + delta)
    )


def conditioning(d_blocks, e_blocks, q_blocks, q_tail_blocks, y_batches) -> ConditioningReport:
    """Measure block spectra and derive the convergence constants.

    ``kappa`` is the midpoint of the overall eigenvalue range of the diagonal
    blocks (the choice that minimizes delta for a shared center).  When the
    measured (delta, theta) are in regime, ``eps`` is the closed-form bound;
    the measured deviation of the recursion blocks is reported either way.
    """
    if len(d_blocks) < 1:
        raise ValueError("need at least 2 batches (1 completed diagonal block)")
    extremes_d = np.array([_sym_extremes(d) for d in d_blocks])
    extremes_q = np.array([_sym_extremes(q) for q in q_blocks])
    lam_min_tail = np.array([_sym_extremes(q)[0] for q in q_tail_blocks])
    norm_e = np.array([spectral_norm(e) for e in e_blocks])

    kappa = 0.5 * (extremes_d[:, 1].max() + extremes_d[:, 0].min())
    delta = float(
        max(np.abs(extremes_d[:, 1] - kappa).max(), np.abs(extremes_d[:, 0] - kappa).max()) / kappa
    )
    theta = float(norm_e.max() / kappa) if norm_e.size else 0.0
    eps_measured = float(
        max(np.abs(extremes_q[:, 1] - kappa).max(), np.abs(extremes_q[:, 0] - kappa).max()) / kappa
    )
    in_regime = delta < 1.0 and theta <= (1.0 - delta) / 2.0
    eps = epsilon_bound(delta, theta) if in_regime else eps_measured

    tail_floor = lam_min_tail.min()
    lambda_bound = float(kappa / tail_floor) if tail_floor > 0 else float("inf")
    pair_energy = 0.0
    for k in range(len(y_batches) - 1):
        pair_energy = max(
            pair_energy, float(np.sum(y_batches[k] ** 2) + np.sum(y_batches[k + 1] ** 2))
        )
    m_y = float(np.sqrt(pair_energy / kappa))
    rho = float(theta / (1.0 - eps)) if eps < 1.0 else float("inf")
    big_c = envelope_constant(delta, theta, eps, lambda_bound) if eps + theta < 1.0 else float("inf")

    return ConditioningReport(
        lam_min_d=extremes_d[:, 0],
        lam_max_d=extremes_d[:, 1],
        norm_e=norm_e,
        lam_min_q=extremes_q[:, 0],
        lam_max_q=extremes_q[:, 1],
        lam_min_q_tail=lam_min_tail,
        kappa=float(kappa),
        delta=delta,
        theta=theta,
        eps=float(eps),
        eps_measured=eps_measured,
        in_regime=in_regime,
        lambda_bound=lambda_bound,
        m_y=m_y,
        rho=rho,
        big_c=big_c,
    )


def _sym_extremes(m) -> tuple[float, float]:
    vals, _ = jacobi_eigh(m)
    return float(vals[-1]), float(vals[0])


# ---------------------------------------------------------------------------
# Lag-error tables


@dataclass
class LagErrorTable:
    """log10 relative distance of every running estimate from its converged value."""

    ks: np.ndarray
    upto: np.ndarray
    entries: np.ndarray  # (len(upto), len(ks)), NaN where K < k

    def entry(self, upto: int, k: int) -> float:
        i = int(np.where(self.upto == upto)[0][0])
        j = int(np.where(self.ks == k)[0][0])
        return float(self.entries[i, j])

    def lag_entries(self, lag: int) -> np.ndarray:
        """All defined entries with K - k equal to ``lag``."""
        out = []
        for i, big in enumerate(self.upto):
            for j, k in enumerate(self.ks):
                if big - k == lag and np.isfinite(self.entries[i, j]):
                    out.append(self.entries[i, j])
        return np.array(out)

    def fit_slope(self) -> float:
        """Least-squares slope of mean entry versus lag, in decades per lag."""
        lags, means = [], []
        for lag in range(0, int(self.upto.max() - self.ks.min()) + 1):
            vals = self.lag_entries(lag)
            vals = vals[np.isfinite(vals)]
            if vals.size:
                lags.append(lag)
                means.append(float(np.mean(vals)))
        lags = np.array(lags, dtype=float)
        means = np.array(means)
        if lags.size < 2:
            return float("nan")
        coeffs = np.polyfit(lags, means, 1)
        return float(coeffs[0])

    def _cell(self, i, j) -> str:
        value = self.entries[i, j]
        return EM_DASH if np.isnan(value) else f"{value:.2f}"

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["K"] + [f"k={k}" for k in self.ks])
            for i, big in enumerate(self.upto):
                writer.writerow([big] + [self._cell(i, j) for j in range(self.ks.size)])

    def pretty(self) -> str:
        header = ["K\\k"] + [str(k) for k in self.ks]
        rows = [header]
        for i, big in enumerate(self.upto):
            rows.append([str(big)] + [self._cell(i, j) for j in range(self.ks.size)])
        widths = [max(len(row[j]) for row in rows) for j in range(len(header))]
        return "\n".join(
            "  ".join(cell.rjust(widths[j]) for j, cell in enumerate(row)) for row in rows
        )


def lag_table(
    history: EstimateHistory,
    final_alphas: np.ndarray,
    ks=None,
    upto=None,
    k_offset: int = 0,
) -> LagErrorTable:
    """Build the lag-error table from recorded snapshots.

    ``final_alphas[k - k_offset]`` is the converged reference for packet k
    (normally the full sweep at the last observed batch).  Entries are
    ``log10(||alpha[k|K] - alpha*[k]|| / ||alpha*[k]||)`` for K >= k.
    """
    final_alphas = np.asarray(final_alphas, dtype=float)
    all_k = sorted({k for (k, _) in history.snapshots})
    all_upto = sorted({big for (_, big) in history.snapshots})
    ks = np.array(all_k if ks is None else list(ks), dtype=int)
    upto = np.array(all_upto if upto is None else list(upto), dtype=int)

    entries = np.full((upto.size, ks.size), np.nan)
    with np.errstate(divide="ignore"):
        for i, big in enumerate(upto):
            for j, k in enumerate(ks):
                if (k, big) not in history.snapshots:
                    continue
                ref = final_alphas[k - k_offset]
                err = np.linalg.norm(history.snapshots[(k, big)] - ref)
                entries[i, j] = np.log10(err / np.linalg.norm(ref))
    return LagErrorTable(ks=ks, upto=upto, entries=entries)


# ---------------------------------------------------------------------------
# Convergence envelope


def theorem_envelope(report: ConditioningReport, lags) -> np.ndarray:
    """Predicted worst-case estimate error at each lag: C * M_y * rho**lag.

    Raises OutOfRegime when the measured conditioning does not support the
    geometric bound.
    """
    if not report.in_regime:
        raise OutOfRegime(
            f"theta {report.theta} > (1 - delta)/2 with delta {report.delta}"
        )
    lags = np.asarray(lags, dtype=float)
    return report.big_c * report.m_y * report.rho**lags


def check_envelope(
    report: ConditioningReport,
    history: EstimateHistory,
    final_alphas: np.ndarray,
    k_offset: int = 0,
) -> tuple[int, float]:
    """Count envelope violations over all recorded (k, K) snapshots.

    Returns (violations, worst_margin) where margin is measured error minus
    envelope; a negative worst margin means every error sat below its bound.
    """
    final_alphas = np.asarray(final_alphas, dtype=float)
    violations = 0
    worst = -np.inf
    for (k, big), alpha in history.snapshots.items():
        lag = big - k
        bound = report.big_c * report.m_y * report.rho**lag
        err = float(np.linalg.norm(alpha - final_alphas[k - k_offset]))
        margin = err - bound
        worst = max(worst, margin)
        if margin > 1e-10:
            violations += 1
    return violations, worst


# ---------------------------------------------------------------------------
# Random-sampling Monte Carlo


@dataclass
class MonteCarloResult:
    """Empirical conditioning of random uniform sampling at each rate M."""

    n_funcs: int
    m_grid: np.ndarray
    delta_quantiles: np.ndarray  # (len(m_grid), 3): 25/50/75 percentiles
    lam_min_over_m: np.ndarray  # medians
    lam_max_over_m: np.ndarray
    norm_e_over_m: np.ndarray
    success_rate: np.ndarray
    delta_target: float
    p_target: float
    m_required: float  # smallest grid M meeting the target rate, NaN if none

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "M",
                    "delta_q25",
                    "delta_median",
                    "delta_q75",
                    "lam_min_over_M",
                    "lam_max_over_M",
                    "norm_E_over_M",
                    "success_rate",
                ]
            )
            for i, m in enumerate(self.m_grid):
                writer.writerow(
                    [
                        repr(float(m)),
                        repr(float(self.delta_quantiles[i, 0])),
                        repr(float(self.delta_quantiles[i, 1])),
                        repr(float(self.delta_quantiles[i, 2])),
                        repr(float(self.lam_min_over_m[i])),
                        repr(float(self.lam_max_over_m[i])),
                        repr(float(self.norm_e_over_m[i])),
                        repr(float(self.success_rate[i])),
                    ]
                )


def sampling_monte_carlo(
    basis: PacketBasis,
    m_grid,
    trials: int,
    delta_target: float = 0.2,
    p_target: float = 0.05,
    seed: int = 0,
) -> MonteCarloResult:
    """Empirical check that uniform random sampling conditions the blocks.

    For each rate M on the grid, draws ``M * (2 + 2 eta)`` sample locations
    uniformly over two adjacent packet supports, forms the two diagonal
    blocks and their coupling with no regularization, and records the
    eigenvalue spread ``delta`` (both blocks) and ``||E|| / M``.  A trial
    succeeds when delta <= delta_target; the reported ``m_required`` is the
    smallest grid M succeeding in at least ``1 - 3 p_target`` of trials.

    Per-trial generators are seeded as ``seed + trial`` so results do not
    depend on scheduling.
    """
    eta = basis.eta
    m_grid = np.asarray(sorted(m_grid), dtype=float)
    span = 2.0 + 2.0 * eta

    delta_q = np.zeros((m_grid.size, 3))
    lam_min_med = np.zeros(m_grid.size)
    lam_max_med = np.zeros(m_grid.size)
    norm_e_med = np.zeros(m_grid.size)
    success = np.zeros(m_grid.size)

    for i, m_rate in enumerate(m_grid):
        n_samples = int(round(m_rate * span))
        deltas = np.zeros(trials)
        lam_mins = np.zeros(trials)
        lam_maxs = np.zeros(trials)
        norm_es = np.zeros(trials)
        for trial in range(trials):
            rng = np.random.default_rng(seed + trial)
            t = rng.uniform(-eta, 2.0 + eta, size=n_samples)
            psi0 = basis.evaluate_packet(0, t)
            psi1 = basis.evaluate_packet(1, t)
            d0 = psi0.T @ psi0
            d1 = psi1.T @ psi1
            in_t1 = (t >= 1.0 - eta) & (t < 2.0 - eta)
            e0 = psi1[in_t1].T @ psi0[in_t1]
            lo0, hi0 = _sym_extremes(d0)
            lo1, hi1 = _sym_extremes(d1)
            lam_mins[trial] = min(lo0, lo1) / m_rate
            lam_maxs[trial] = max(hi0, hi1) / m_rate
            deltas[trial] = max(abs(lam_maxs[trial] - 1.0), abs(1.0 - lam_mins[trial]))
            norm_es[trial] = spectral_norm(e0) / m_rate
        delta_q[i] = np.percentile(deltas, [25, 50, 75])
        lam_min_med[i] = np.median(lam_mins)
        lam_max_med[i] = np.median(lam_maxs)
        norm_e_med[i] = np.median(norm_es)
        success[i] = float(np.mean(deltas <= delta_target))

    required = float("nan")
    threshold = 1.0 - 3.0 * p_target
    for i, m_rate in enumerate(m_grid):
        if success[i] >= threshold:
            required = float(m_rate)
            break
    return MonteCarloResult(
        n_funcs=basis.n_funcs,
        m_grid=m_grid,
        delta_quantiles=delta_q,
        lam_min_over_m=lam_min_med,
        lam_max_over_m=lam_max_med,
        norm_e_over_m=norm_e_med,
        success_rate=success,
        delta_target=delta_target,
        p_target=p_target,
        m_required=required,
    )
