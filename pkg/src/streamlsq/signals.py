"""Synthetic test signals and event-driven samplers.

The two stock signals mirror the stock experiments: a bandlimited sinc
superposition sampled at its level crossings, and a per-interval random
Fourier ("OFDM"-style) signal observed through a delay-doppler channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .measurement import DelayDopplerTaps, SampleStream

_QAM_LEVELS = np.array([-3.0, -1.0, 1.0, 3.0]) / np.sqrt(10.0)


@dataclass
class SyntheticSignal:
    """Deterministic (seeded) test signal, evaluable at arbitrary times."""

    kind: str
    x: Callable[[np.ndarray], np.ndarray]
    bandlimit: float | None = None  # rad/s, None when not bandlimited
    meta: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.x(t)


def gen_bandlimited(
    seed: int,
    spacing: float = 1.0 / 64.0,
    support: tuple[float, float] = (-5.0, 21.0),
) -> SyntheticSignal:
    """Random bandlimited signal: unit-normal weights on a sinc grid.

    Grid points are ``spacing`` apart across ``support``; the signal value at
    each grid point equals its weight (the sinc interpolation property).
    Bandlimit ``pi / spacing`` rad/s.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    lo, hi = support
    grid = lo + spacing * np.arange(int(round((hi - lo) / spacing)) + 1)
    rng = np.random.default_rng(seed)
    weights = rng.standard_normal(grid.size)

    def x(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.size)
        # Chunked so big evaluation grids stay within memory.
        step = max(1, int(4e6 // grid.size))
        for i in range(0, t.size, step):
            block = np.sinc((t[i : i + step, None] - grid[None, :]) / spacing)
            out[i : i + step] = block @ weights
        return out

    return SyntheticSignal(
        kind="bandlimited-sinc",
        x=x,
        bandlimit=np.pi / spacing,
        meta={"seed": seed, "spacing": spacing, "support": list(support), "weights": weights},
    )


def gen_ofdm(
    seed: int,
    components: int = 64,
    intervals: tuple[int, int] = (-1, 18),
) -> SyntheticSignal:
    """Per-unit-interval random Fourier signal with QAM-16 coefficients.

    On each interval ``[j, j+1)`` the signal is a plain Fourier series with
    ``components/2`` cosine and sine terms whose coefficients are drawn
    uniformly from the unit-energy QAM-16 alphabet, independently across
    intervals; the signal is discontinuous at the interval boundaries.
    """
    if components % 2:
        raise ValueError("components must be even")
    half = components // 2
    j_lo, j_hi = int(intervals[0]), int(intervals[1])
    n_intervals = j_hi - j_lo
    rng = np.random.default_rng(seed)
    cos_coef = rng.choice(_QAM_LEVELS, size=(n_intervals, half))
    sin_coef = rng.choice(_QAM_LEVELS, size=(n_intervals, half))
    harmonics = np.arange(1, half + 1)

    def x(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        j = np.floor(t).astype(int)
        if np.any(j < j_lo) or np.any(j >= j_hi):
            raise ValueError(
                f"time outside configured intervals [{j_lo}, {j_hi}): "
                f"[{t.min()}, {t.max()}]"
            )
        u = t - j
        phase = 2.0 * np.pi * np.outer(u, harmonics)
        rows = j - j_lo
        return np.einsum("ij,ij->i", np.cos(phase), cos_coef[rows]) + np.einsum(
            "ij,ij->i", np.sin(phase), sin_coef[rows]
        )

    return SyntheticSignal(
        kind="ofdm",
        x=x,
        bandlimit=None,
        meta={
            "seed": seed,
            "components": components,
            "intervals": [j_lo, j_hi],
            "cos_coef": cos_coef,
            "sin_coef": sin_coef,
        },
    )


def level_crossings(
    signal,
    levels,
    window: tuple[float, float],
    scan_step: float = 1e-4,
    refine_tol: float = 1e-10,
    max_bisections: int = 200,
) -> SampleStream:
    """Times where the signal crosses each level, as (time, level) samples.

    Sign changes are located on a uniform scan grid and each bracket is
    refined by bisection until ``|x(t) - level| <= refine_tol``.  Grid points
    that hit a level exactly are emitted as-is.  The scan step must be well
    below the signal's fastest oscillation or crossings will be missed.
    """
    x = signal.x if hasattr(signal, "x") else signal
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    lo, hi = window
    grid = np.arange(lo, hi + 0.5 * scan_step, scan_step)
    grid[-1] = min(grid[-1], hi)
    values = np.asarray(x(grid), dtype=float)

    all_times, all_levels = [], []
    lo_brackets, hi_brackets, level_of = [], [], []
    for level in levels:
        d = values - level
        on_level = np.abs(d) <= refine_tol
        for idx in np.nonzero(on_level)[0]:
            all_times.append(grid[idx])
            all_levels.append(level)
        # Brackets whose endpoint already counts as a hit would duplicate it.
        sign_change = np.nonzero(
            (d[:-1] * d[1:] < 0.0) & ~on_level[:-1] & ~on_level[1:]
        )[0]
        lo_brackets.append(grid[sign_change])
        hi_brackets.append(grid[sign_change + 1])
        level_of.append(np.full(sign_change.size, level))

    t_lo = np.concatenate(lo_brackets) if lo_brackets else np.empty(0)
    t_hi = np.concatenate(hi_brackets) if hi_brackets else np.empty(0)
    lev = np.concatenate(level_of) if level_of else np.empty(0)

    if t_lo.size:
        f_lo = x(t_lo) - lev
        active = np.ones(t_lo.size, dtype=bool)
        mid = 0.5 * (t_lo + t_hi)
        for _ in range(max_bisections):
            mid = 0.5 * (t_lo + t_hi)
            f_mid = x(mid) - lev
            done = np.abs(f_mid) <= refine_tol
            active = active & ~done
            if not np.any(active):
                break
            go_left = (f_lo * f_mid < 0.0) & active
            go_right = active & ~go_left
            t_hi[go_left] = mid[go_left]
            t_lo[go_right] = mid[go_right]
            f_lo[go_right] = f_mid[go_right]
        all_times.extend(mid.tolist())
        all_levels.extend(lev.tolist())

    order = np.argsort(np.asarray(all_times), kind="stable")
    times = np.asarray(all_times, dtype=float)[order]
    level_values = np.asarray(all_levels, dtype=float)[order]
    return SampleStream(times, level_values)


def default_levels(count: int = 16, lo: float = -2.5, hi: float = 2.5) -> np.ndarray:
    """``count`` levels equally spaced over the half-open range [lo, hi)."""
    return lo + (hi - lo) * np.arange(count) / count


def delay_doppler_sample(
    signal,
    taps: DelayDopplerTaps,
    window: tuple[float, float],
    t_step: float = 0.01,
) -> SampleStream:
    """Equispaced measurements of the signal through a delay-doppler channel."""
    x = signal.x if hasattr(signal, "x") else signal
    lo, hi = window
    times = lo + t_step * np.arange(int(np.floor((hi - lo) / t_step + 1e-9)) + 1)
    return SampleStream(times, taps.apply(x, times))


def kernel_sample(
    signal,
    kernel,
    length: float,
    window: tuple[float, float],
    t_step: float = 0.01,
    order: int = 10,
    breakpoints=(),
) -> SampleStream:
    """Equispaced measurements by integrating the signal against a kernel.

    Each value is the quadrature of ``x(t) * kernel(t_m, t)`` over
    ``[t_m - length, t_m]``.  Pass ``breakpoints`` where the signal is only
    piecewise smooth so the quadrature panels split there.
    """
    from .linalg import composite_rule

    x = signal.x if hasattr(signal, "x") else signal
    lo, hi = window
    times = lo + t_step * np.arange(int(np.floor((hi - lo) / t_step + 1e-9)) + 1)
    breakpoints = np.asarray(sorted(breakpoints), dtype=float)
    values = np.empty(times.size)
    for m, t_m in enumerate(times):
        cuts = breakpoints[(breakpoints > t_m - length) & (breakpoints < t_m)]
        rule = composite_rule(
            t_m - length, t_m, order=order, max_panel=length / 4.0, breakpoints=cuts
        )
        values[m] = rule.integrate(x(rule.nodes) * np.asarray(kernel(t_m, rule.nodes)))
    return SampleStream(times, values)
