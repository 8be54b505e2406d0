"""Packetized basis families for local signal representation.

A packet basis is a family ``psi[k, n](t)``, ``n = 1..N``, where every packet
``k`` spans the interval ``[k - eta, k + 1 + eta]`` and packets are integer
shifts of packet 0.  Three families are provided:

* windowed cosines under a smooth power-complementary window (an orthobasis),
* eigenfunctions of the band-and-fold kernel, which concentrate bandlimited
  energy in roughly ``2 * omega`` functions per unit time,
* scaled translates of the Daubechies-4 scaling function (a shift-invariant
  family, orthogonal up to scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarse
from .linalg import QuadratureRule, composite_rule, gram_eigh

_SQRT3 = math.sqrt(3.0)

#: Refinement mask of the Daubechies-4 scaling function, normalized to sum 2.
_D4_MASK = np.array([(1 + _SQRT3) / 4, (3 + _SQRT3) / 4, (3 - _SQRT3) / 4, (1 - _SQRT3) / 4])

DEFAULT_QUAD_ORDER = 10


# ---------------------------------------------------------------------------
# Window


def _ramp(u):
    """Smooth 0-to-1 ramp sin((pi/2) sin^2((pi/2) u)) on [0, 1]."""
    u = np.asarray(u, dtype=float)
    return np.sin(0.5 * np.pi * np.sin(0.5 * np.pi * u) ** 2)


@dataclass(frozen=True)
class WindowSpec:
    """Power-complementary window: 1 on [eta, 1-eta], smooth ramps on both sides.

    The squared shifts sum to one, sum_k g(t - k)^2 = 1, which is what makes
    the windowed-cosine packets orthogonal across k.
    """

    eta: float

    def __post_init__(self):
        if not 0.0 < self.eta <= 0.5:
            raise ValueError(f"eta must be in (0, 1/2], got {self.eta}")

    def __call__(self, t):
        return window_eval(self, t)


def window_eval(spec: WindowSpec, t):
    """Evaluate the window at scalar or array ``t`` (zero outside [-eta, 1+eta])."""
    eta = spec.eta
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)

    rising = (t >= -eta) & (t <= eta)
    flat = (t > eta) & (t < 1.0 - eta)
    falling = (t >= 1.0 - eta) & (t <= 1.0 + eta)
    out[rising] = _ramp((t[rising] + eta) / (2.0 * eta))
    out[flat] = 1.0
    out[falling] = _ramp((-t[falling] + 1.0 + eta) / (2.0 * eta))
    return float(out[0]) if scalar else out


def project_onto_packet(spec: WindowSpec, x, k: int, t):
    """Apply the packet-k projector to a signal callable.

    Folds the signal symmetrically about ``k`` (even) and about ``k + 1``
    (odd) under the window ramps, then windows the result.  Works for real or
    complex-valued ``x``; the output is the component of the signal living in
    packet space k.
    """
    eta = spec.eta
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    u = t - k

    probe = np.asarray(x(t[:1] if t.size else np.array([0.0])))
    out = np.zeros(t.shape, dtype=np.result_type(probe.dtype, float))

    left = (u >= -eta) & (u <= eta)
    mid = (u > eta) & (u < 1.0 - eta)
    right = (u >= 1.0 - eta) & (u <= 1.0 + eta)

    if np.any(left):
        ul = u[left]
        g_here = window_eval(spec, ul)
        g_mirror = window_eval(spec, -ul)
        z = g_here * x(k + ul) + g_mirror * x(k - ul)
        out[left] = g_here * z
    if np.any(mid):
        out[mid] = x(k + u[mid])
    if np.any(right):
        ur = u[right]
        g_here = window_eval(spec, ur)
        g_mirror = window_eval(spec, 2.0 - ur)
        z = g_here * x(k + ur) - g_mirror * x(k + 2.0 - ur)
        out[right] = g_here * z
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# Basis families


class PacketBasis:
    """Family of N basis functions per integer packet, shifted copies of packet 0.

    Subclasses implement ``_packet0(u) -> (len(u), N)`` for ``u`` inside the
    support ``[-eta, 1 + eta]``; evaluation at shifted packets and exact
    zeroing outside the support is handled here, so shift covariance is exact
    by construction.
    """

    family = "abstract"

    def __init__(self, n_funcs: int, eta: float):
        self.n_funcs = int(n_funcs)
        self.eta = float(eta)

    def support(self, k: int) -> tuple[float, float]:
        return (k - self.eta, k + 1.0 + self.eta)

    def breakpoints(self, k: int = 0) -> list[float]:
        """Points where the evaluator is only piecewise smooth."""
        return [k - self.eta, k + self.eta, k + 1.0 - self.eta, k + 1.0 + self.eta]

    def evaluate_packet(self, k: int, t) -> np.ndarray:
        """Values of all N functions of packet ``k``; shape (len(t), N)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u = t - k
        out = np.zeros((t.size, self.n_funcs))
        inside = (u >= -self.eta) & (u <= 1.0 + self.eta)
        if np.any(inside):
            out[inside] = self._packet0(u[inside])
        return out

    def evaluate(self, k: int, n: int, t):
        """Single basis function ``psi[k, n]``; ``n`` is 1-based."""
        if not 1 <= n <= self.n_funcs:
            raise ValueError(f"n must be in 1..{self.n_funcs}, got {n}")
        values = self.evaluate_packet(k, t)[:, n - 1]
        return float(values[0]) if np.ndim(t) == 0 else values

    def _packet0(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def quadrature(self, order: int = DEFAULT_QUAD_ORDER) -> QuadratureRule:
        """Family-default rule over the packet-0 support, resolving every function."""
        return packet_quadrature(self.eta, self.n_funcs, order=order)

    def gram(self, order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
        """Quadrature Gram matrix of packet 0."""
        rule = self.quadrature(order)
        psi = self.evaluate_packet(0, rule.nodes)
        return psi.T @ (rule.weights[:, None] * psi)

    def to_config(self) -> dict:
        raise NotImplementedError


def packet_quadrature(eta: float, n_funcs: int, order: int = DEFAULT_QUAD_ORDER) -> QuadratureRule:
    """Composite rule over [-eta, 1+eta] with panels split at the window seams
    and narrow enough (width <= 1/(4N)) to resolve the fastest oscillation."""
    return composite_rule(
        -eta,
        1.0 + eta,
        order=order,
        max_panel=1.0 / (4.0 * n_funcs),
        breakpoints=(eta, 1.0 - eta),
    )


def packet_project(basis: PacketBasis, x, k: int, order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    """Coefficients of signal ``x`` against packet ``k`` by quadrature.

    For orthonormal families this is the analysis transform; the integral
    runs over the packet support ``[k - eta, k + 1 + eta]``.
    """
    rule = basis.quadrature(order)
    nodes = rule.nodes + k
    psi = basis.evaluate_packet(k, nodes)
    values = np.asarray(x(nodes), dtype=float)
    return psi.T @ (rule.weights * values)


def synthesize(basis: PacketBasis, alphas: dict[int, np.ndarray], t) -> np.ndarray:
    """Signal values sum_k sum_n alpha[k][n] psi[k, n](t)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros(t.size)
    for k, alpha in alphas.items():
        lo, hi = basis.support(k)
        mask = (t >= lo) & (t <= hi)
        if np.any(mask):
            out[mask] += basis.evaluate_packet(k, t[mask]) @ np.asarray(alpha, dtype=float)
    return out


# ---------------------------------------------------------------------------
# Windowed cosine family


class LotBasis(PacketBasis):
    """Windowed cosine orthobasis: g(t - k) sqrt(2) cos(pi (n - 1/2) (t - k))."""

    family = "lot"

    def __init__(self, n_funcs: int, eta: float):
        super().__init__(n_funcs, eta)
        self.window = WindowSpec(eta)

    def _packet0(self, u):
        g = window_eval(self.window, u)
        phases = np.pi * (np.arange(self.n_funcs) + 0.5)
        return g[:, None] * np.sqrt(2.0) * np.cos(np.outer(u, phases))

    def to_config(self):
        return {"family": self.family, "n": self.n_funcs, "eta": self.eta}


def lot_basis(n_funcs: int, eta: float) -> LotBasis:
    return LotBasis(n_funcs, eta)


def lot_basis_eval(basis: LotBasis, k: int, n: int, t):
    """Closed-form windowed cosine evaluation (n is 1-based)."""
    return basis.evaluate(k, n, t)


# ---------------------------------------------------------------------------
# Band-and-fold (bandlimited-optimal) family


@dataclass
class SlepianSpectrum:
    """Spectrum of the band-and-fold kernel on the construction grid.

    ``omega`` is the bandlimit in cycles per unit time; eigenvalues are sorted
    descending.  ``eigenfunctions`` holds node values (grid_size x count) for
    the retained functions; ``imag_residual`` records the largest imaginary
    magnitude discarded when the kernel was symmetrized, relative to its
    largest real entry.
    """

    omega: float
    eigenvalues: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    eigenfunctions: np.ndarray
    imag_residual: float


def _folded_exp(window: WindowSpec, omegas: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Packet-0 projection of complex sinusoids exp(2j pi omega t).

    Returns an array of shape (len(t), len(omegas)).  The even fold about 0
    and odd fold about 1 keep each column supported on [-eta, 1 + eta].
    """
    eta = window.eta
    t = np.asarray(t, dtype=float)
    out = np.zeros((t.size, omegas.size), dtype=complex)

    left = (t >= -eta) & (t <= eta)
    mid = (t > eta) & (t < 1.0 - eta)
    right = (t >= 1.0 - eta) & (t <= 1.0 + eta)

    two_pi_j = 2j * np.pi
    if np.any(mid):
        out[mid] = np.exp(two_pi_j * np.outer(t[mid], omegas))
    if np.any(left):
        tl = t[left]
        g_here = window_eval(window, tl)[:, None]
        g_mirror = window_eval(window, -tl)[:, None]
        e_here = np.exp(two_pi_j * np.outer(tl, omegas))
        z = g_here * e_here + g_mirror * e_here.conj()
        out[left] = g_here * z
    if np.any(right):
        tr = t[right]
        g_here = window_eval(window, tr)[:, None]
        g_mirror = window_eval(window, 2.0 - tr)[:, None]
        e_here = np.exp(two_pi_j * np.outer(tr, omegas))
        e_mirror = np.exp(two_pi_j * np.outer(2.0 - tr, omegas))
        z = g_here * e_here - g_mirror * e_mirror
        out[right] = g_here * z
    return out


class SlepianLotBasis(PacketBasis):
    """Eigenfunctions of the band-and-fold kernel as packet basis functions.

    Evaluation anywhere uses the kernel's eigenfunction identity: each basis
    function is a fixed quadrature superposition of folded sinusoids, so
    values off the construction grid are as smooth as the kernel itself.
    """

    family = "slepian-lot"

    def __init__(self, n_funcs, eta, omega, grid_size, window, freq_rule, coef, spectrum):
        super().__init__(n_funcs, eta)
        self.omega = float(omega)
        self.grid_size = int(grid_size)
        self.window = window
        self._freq_rule = freq_rule
        self._coef = coef  # (n_freq, N) complex extension coefficients
        self.spectrum = spectrum

    def _packet0(self, u):
        # Chunked so arbitrary-length requests stay within memory.
        out = np.empty((u.size, self.n_funcs))
        step = 4096
        for lo in range(0, u.size, step):
            F = _folded_exp(self.window, self._freq_rule.nodes, u[lo : lo + step])
            out[lo : lo + step] = (F @ self._coef).real
        return out

    def to_config(self):
        return {
            "family": self.family,
            "n": self.n_funcs,
            "eta": self.eta,
            "omega": self.omega,
            "grid_size": self.grid_size,
        }


def _slepian_time_rule(eta: float, grid_size: int, order: int) -> QuadratureRule:
    span = 1.0 + 2.0 * eta
    n_panels = max(4, int(np.ceil(grid_size / order)))
    return composite_rule(
        -eta, 1.0 + eta, order=order, max_panel=span / n_panels, breakpoints=(eta, 1.0 - eta)
    )


def build_slepian_lot(
    omega: float,
    eta: float,
    n_funcs: int,
    grid_size: int,
    order: int = DEFAULT_QUAD_ORDER,
) -> tuple[SlepianLotBasis, SlepianSpectrum]:
    """Construct the bandlimited-optimal packet basis for bandlimit ``omega``.

    ``omega`` is in cycles per unit time, so the spectrum of the kernel rolls
    off after about ``2 * omega`` eigenvalues.  The kernel is discretized on a
    composite quadrature grid of roughly ``grid_size`` nodes, symmetrized, and
    diagonalized; the top ``n_funcs`` eigenfunctions become the basis.

    Raises:
        GridTooCoarse: if the resulting functions fail an orthonormality
            check on a refined grid by more than 1e-6, which means the grid
            cannot support ``n_funcs`` functions at this bandlimit.
    """
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    min_grid = 8.0 * (2.0 * omega / np.pi + n_funcs)
    if grid_size < min_grid:
        raise ValueError(f"grid_size {grid_size} below minimum {min_grid:.0f} for this basis")

    window = WindowSpec(eta)
    t_rule = _slepian_time_rule(eta, grid_size, order)
    freq_rule = composite_rule(-omega, omega, order=order, max_panel=0.25)

    F = _folded_exp(window, freq_rule.nodes, t_rule.nodes)  # (n_t, n_f)

    # Symmetrization diagnostic: the +/- omega quadrature symmetry should make
    # the kernel real; record how much imaginary part gets discarded.
    wf = freq_rule.weights
    ref = np.sqrt(wf) * F.real
    imf = np.sqrt(wf) * F.imag
    k_imag = imf @ ref.T - ref @ imf.T
    k_real_scale = float(np.max(np.abs(ref @ ref.T + imf @ imf.T)))
    imag_residual = float(np.max(np.abs(k_imag))) / k_real_scale if k_real_scale else 0.0

    # The symmetrized Nystrom matrix is exactly the Gram of this real factor:
    # rows are sqrt(w_f)-weighted folded cos/sin, columns sqrt(w_t)-weighted.
    sqrt_wt = np.sqrt(t_rule.weights)
    factor = np.vstack([ref.T, imf.T]) * sqrt_wt[None, :]
    evals, evecs = gram_eigh(factor)

    top = evecs[:, :n_funcs]
    # Deterministic sign: largest-magnitude node value positive.
    sign = np.where(top[np.argmax(np.abs(top), axis=0), np.arange(n_funcs)] >= 0, 1.0, -1.0)
    top = top * sign
    psi_nodes = top / sqrt_wt[:, None]

    gamma = evals[:n_funcs]
    if np.any(gamma <= 0):
        raise GridTooCoarse(
            f"kernel numerical rank below n_funcs={n_funcs}; smallest retained "
            f"eigenvalue {gamma.min():.3e}"
        )
    proj = F.conj().T @ (t_rule.weights[:, None] * psi_nodes)  # (n_f, N)
    coef = (freq_rule.weights[:, None] * proj) / gamma[None, :]

    spectrum = SlepianSpectrum(
        omega=omega,
        eigenvalues=evals,
        nodes=t_rule.nodes,
        weights=t_rule.weights,
        eigenfunctions=psi_nodes,
        imag_residual=imag_residual,
    )
    basis = SlepianLotBasis(n_funcs, eta, omega, grid_size, window, freq_rule, coef, spectrum)

    check_rule = _slepian_time_rule(eta, 2 * grid_size, order)
    psi_check = basis.evaluate_packet(0, check_rule.nodes)
    gram = psi_check.T @ (check_rule.weights[:, None] * psi_check)
    deviation = float(np.max(np.abs(gram - np.eye(n_funcs))))
    if deviation > 1e-6:
        raise GridTooCoarse(
            f"refined-grid Gram deviates from identity by {deviation:.3e} "
            f"(grid_size={grid_size}, n_funcs={n_funcs})"
        )
    return basis, spectrum


# ---------------------------------------------------------------------------
# Shift-invariant family (Daubechies-4 scaling function)


_D4_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def daubechies4_scaling(level: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Daubechies-4 scaling function on its support [0, 3].

    Dyadic refinement: values are exact at every grid point of resolution
    2**-level (the refinement equation maps a grid onto the next finer one).
    Returns (grid, values).
    """
    if level in _D4_CACHE:
        return _D4_CACHE[level]
    # Values at the integers: phi(1) and phi(2) solve the refinement
    # eigenproblem with eigenvalue 1, normalized to sum 1.
    vals = np.array([0.0, (1 + _SQRT3) / 2, (1 - _SQRT3) / 2, 0.0])
    for lev in range(1, level + 1):
        old = vals
        n_old = old.size
        new = np.zeros(2 * n_old - 1)
        new[::2] = old
        # phi(t) = sum_k h[k] phi(2t - k); for a new odd index j, the point
        # 2t - k sits at old index j - k * 2**(lev-1).
        shift = 2 ** (lev - 1)
        for k_idx, h_k in enumerate(_D4_MASK):
            src = np.arange(1, new.size, 2) - k_idx * shift
            valid = (src >= 0) & (src < n_old)
            new[1::2][valid] += h_k * old[src[valid]]
        vals = new
    grid = np.linspace(0.0, 3.0, vals.size)
    _D4_CACHE[level] = (grid, vals)
    return grid, vals


class ShiftInvariantBasis(PacketBasis):
    """Equally spaced scaled translates of a compactly supported generator.

    psi[k, n](t) = N phi(N t - N k - n + 1/2) with the generator centered on
    [-s, s]; for Daubechies-4, s = 1.5 and eta = 1/N.  Not unit-normalized
    (each function has squared norm N), so the Gram is N times the
    generator's translate Gram.
    """

    family = "shift-invariant"

    def __init__(self, n_funcs: int, generator: str = "daubechies4", level: int = 12):
        if generator != "daubechies4":
            raise ValueError(f"unknown generator {generator!r}")
        if n_funcs < 4:
            raise ValueError(f"need at least 4 functions per packet, got {n_funcs}")
        self.generator = generator
        self.level = int(level)
        self.half_support = 1.5
        eta = self.half_support / n_funcs - 0.5 / n_funcs
        super().__init__(n_funcs, eta)
        self._grid, self._values = daubechies4_scaling(level)

    def _packet0(self, u):
        n = self.n_funcs
        out = np.empty((u.size, n))
        base = n * u + 1.0  # argument of the standard-support generator for n=1
        for j in range(n):
            out[:, j] = n * np.interp(base - j, self._grid, self._values, left=0.0, right=0.0)
        return out

    def quadrature(self, order: int = DEFAULT_QUAD_ORDER) -> QuadratureRule:
        """Trapezoid rule on the dyadic evaluation grid.

        The evaluator is piecewise linear between dyadic points, and the
        trapezoid rule integrates it exactly, so integrals against this
        family are consistent with what the evaluator returns.
        """
        step = 2.0 ** (-self.level) / self.n_funcs
        n_steps = int(round((1.0 + 2.0 * self.eta) / step))
        nodes = -self.eta + step * np.arange(n_steps + 1)
        weights = np.full(nodes.size, step)
        weights[0] = weights[-1] = 0.5 * step
        return QuadratureRule(nodes, weights)

    def breakpoints(self, k: int = 0) -> list[float]:
        edges = [k + (j - 2.0) / self.n_funcs for j in range(self.n_funcs + 4)]
        return sorted({k - self.eta, k + 1.0 + self.eta, *edges})

    def to_config(self):
        return {
            "family": self.family,
            "n": self.n_funcs,
            "generator": self.generator,
            "level": self.level,
        }


def build_shift_invariant(generator: str, n_funcs: int, level: int = 12) -> ShiftInvariantBasis:
    return ShiftInvariantBasis(n_funcs, generator=generator, level=level)


# ---------------------------------------------------------------------------
# Flatness


def flatness_beta(basis: PacketBasis, grid_size: int | None = None) -> float:
    """Peak of the summed squared magnitudes of two adjacent packets, over N.

    Functions are normalized by their measured norms first so the value is
    that of the underlying orthonormal family (relevant for the
    shift-invariant family, whose stored functions carry an N scaling).
    Grid maximization with one golden-section refinement around the argmax.
    """
    n = basis.n_funcs
    if grid_size is None:
        grid_size = 64 * n
    grid_size = max(grid_size, 64 * n)
    norms2 = np.diag(basis.gram())

    lo, hi = basis.support(0)[0], basis.support(1)[1]
    grid = np.linspace(lo, hi, grid_size)

    def level(t):
        t = np.atleast_1d(t)
        s0 = basis.evaluate_packet(0, t) ** 2 / norms2
        s1 = basis.evaluate_packet(1, t) ** 2 / norms2
        return (s0.sum(axis=1) + s1.sum(axis=1)) / n

    values = level(grid)
    best = int(np.argmax(values))
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, grid_size - 1)]

    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1 = float(level(x1)[0])
    f2 = float(level(x2)[0])
    for _ in range(60):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = float(level(x2)[0])
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = float(level(x1)[0])
        if b - a < 1e-12:
            break
    return float(max(values[best], f1, f2))


# ---------------------------------------------------------------------------
# Serialization


def basis_from_config(config: dict) -> PacketBasis:
    """Rebuild a basis from its descriptor (the inverse of ``to_config``)."""
    family = config["family"]
    if family == "lot":
        return LotBasis(config["n"], config["eta"])
    if family == "slepian-lot":
        basis, _ = build_slepian_lot(
            config["omega"], config["eta"], config["n"], config["grid_size"]
        )
        return basis
    if family == "shift-invariant":
        return ShiftInvariantBasis(
            config["n"], generator=config["generator"], level=config.get("level", 12)
        )
    raise ValueError(f"unknown basis family {family!r}")
