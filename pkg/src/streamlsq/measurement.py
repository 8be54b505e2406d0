"""Batching of timestamped measurements and assembly of per-batch matrices.

Batch k collects every measurement with time in ``[k - eta, k + 1 - eta)``.
Each batch touches exactly two packets, so its model is
``y = B @ alpha[k-1] + A @ alpha[k]`` where row m of A (B) holds the
evaluation of packet k (k-1) against measurement functional m.  Point
samples, local-kernel integrals, and tap-sum channel measurements all
assemble into the same shape.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .basis import PacketBasis
from .errors import KernelTooLong, UnsortedStream
from .linalg import composite_rule


@dataclass
class SampleStream:
    """Time-ordered measurements (t_m, y_m)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be matching 1-D arrays")
        if not np.all(np.isfinite(self.times)) or not np.all(np.isfinite(self.values)):
            raise ValueError("stream entries must be finite")
        if self.times.size > 1 and np.any(np.diff(self.times) < 0):
            raise UnsortedStream("sample times must be non-decreasing")

    def __len__(self):
        return self.times.size

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "y"])
            for t, y in zip(self.times, self.values):
                writer.writerow([repr(float(t)), repr(float(y))])

    @classmethod
    def from_csv(cls, path) -> "SampleStream":
        times, values = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["t", "y"]:
                raise ValueError(f"expected header 't,y' in {path}, got {header}")
            for row in reader:
                times.append(float(row[0]))
                values.append(float(row[1]))
        return cls(np.array(times), np.array(values))


def with_noise(stream: SampleStream, sigma: float, rng) -> SampleStream:
    """Additive zero-mean Gaussian measurement noise."""
    if sigma == 0.0:
        return stream
    return SampleStream(stream.times, stream.values + sigma * rng.standard_normal(len(stream)))


@dataclass
class SampleBatch:
    """All measurements in one batch interval, plus the assembled matrices."""

    k: int
    times: np.ndarray
    values: np.ndarray
    a: np.ndarray | None = None  # (M, N) against packet k
    b: np.ndarray | None = None  # (M, N) against packet k-1

    @property
    def size(self) -> int:
        return self.times.size


def batch_interval(k: int, eta: float) -> tuple[float, float]:
    """Half-open batch window [k - eta, k + 1 - eta)."""
    return (k - eta, k + 1.0 - eta)


def batch_index(times, eta: float) -> np.ndarray:
    """Batch index for each time under the half-open rule."""
    return np.floor(np.asarray(times, dtype=float) + eta).astype(int)


def batch_stream(
    stream: SampleStream,
    eta: float,
    k_first: int | None = None,
    k_last: int | None = None,
) -> list[SampleBatch]:
    """Split a stream into contiguous batches (empty batches included).

    With ``k_first``/``k_last`` given, samples outside the configured range
    are rejected with a warning rather than silently dropped; otherwise the
    range is inferred from the data.
    """
    if len(stream) == 0:
        if k_first is None or k_last is None:
            return []
        idx = np.empty(0, dtype=int)
    else:
        idx = batch_index(stream.times, eta)
        if k_first is None:
            k_first = int(idx.min())
        if k_last is None:
            k_last = int(idx.max())

    keep = (idx >= k_first) & (idx <= k_last)
    n_rejected = int(np.count_nonzero(~keep))
    if n_rejected:
        warnings.warn(
            f"rejecting {n_rejected} samples outside batches {k_first}..{k_last}",
            stacklevel=2,
        )
    times = stream.times[keep]
    values = stream.values[keep]
    idx = idx[keep]

    batches = []
    for k in range(k_first, k_last + 1):
        mask = idx == k
        batches.append(SampleBatch(k=k, times=times[mask], values=values[mask]))
    return batches


# ---------------------------------------------------------------------------
# Assembly


def assemble_point(batch: SampleBatch, basis: PacketBasis) -> SampleBatch:
    """Fill A and B with point evaluations of packets k and k-1."""
    return replace(
        batch,
        a=basis.evaluate_packet(batch.k, batch.times),
        b=basis.evaluate_packet(batch.k - 1, batch.times),
    )


@dataclass
class KernelMeasurementSpec:
    """Measurement by integration against a known kernel of support length L.

    ``kernel(t_m, t)`` returns the kernel values for the measurement taken at
    time ``t_m``; it must vanish outside ``[t_m - length, t_m]``.  Kernels may
    vary from measurement to measurement (time-varying convolution).
    """

    kernel: Callable[[float, np.ndarray], np.ndarray]
    length: float


def box_kernel(width: float) -> Callable[[float, np.ndarray], np.ndarray]:
    """Normalized box covering [t_m - width, t_m]; the narrow-width limit of a
    point sample at the box center."""

    def kernel(t_m, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= t_m - width) & (t <= t_m), 1.0 / width, 0.0)

    return kernel


def assemble_kernel(
    batch: SampleBatch,
    basis: PacketBasis,
    spec: KernelMeasurementSpec,
    order: int = 10,
) -> SampleBatch:
    """Fill A and B with kernel integrals against packets k and k-1.

    Quadrature panels are split at both the kernel support edges and the
    basis breakpoints, so piecewise-smooth integrands are handled at full
    order.  Raises KernelTooLong if the kernel support could touch more than
    two packets.
    """
    max_len = 1.0 - 2.0 * basis.eta
    if spec.length > max_len + 1e-12:
        raise KernelTooLong(
            f"kernel support {spec.length} exceeds {max_len} for eta={basis.eta}"
        )
    n = basis.n_funcs
    a = np.zeros((batch.size, n))
    b = np.zeros((batch.size, n))
    cuts = sorted(set(basis.breakpoints(batch.k)) | set(basis.breakpoints(batch.k - 1)))
    for m, t_m in enumerate(batch.times):
        lo, hi = t_m - spec.length, t_m
        rule = composite_rule(
            lo,
            hi,
            order=order,
            max_panel=1.0 / (4.0 * n),
            breakpoints=[c for c in cuts if lo < c < hi],
        )
        h = np.asarray(spec.kernel(t_m, rule.nodes), dtype=float)
        wh = rule.weights * h
        a[m] = wh @ basis.evaluate_packet(batch.k, rule.nodes)
        b[m] = wh @ basis.evaluate_packet(batch.k - 1, rule.nodes)
    return replace(batch, a=a, b=b)


@dataclass
class DelayDopplerTaps:
    """Channel taps: amplitudes, delays, and modulation frequencies."""

    amplitudes: np.ndarray
    delays: np.ndarray
    frequencies: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        self.delays = np.asarray(self.delays, dtype=float)
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        if not self.amplitudes.shape == self.delays.shape == self.frequencies.shape:
            raise ValueError("tap arrays must have matching shapes")
        if np.any(self.delays < 0):
            raise ValueError("tap delays must be non-negative")

    def to_config(self) -> dict:
        return {
            "a": self.amplitudes.tolist(),
            "tau": self.delays.tolist(),
            "f": self.frequencies.tolist(),
        }

    @classmethod
    def from_config(cls, cfg) -> "DelayDopplerTaps":
        """Accepts ``{"a": [...], "tau": [...], "f": [...]}`` or a list of
        per-tap ``{"a": .., "tau": .., "f": ..}`` entries."""
        if isinstance(cfg, list):
            return cls(
                [tap["a"] for tap in cfg],
                [tap["tau"] for tap in cfg],
                [tap["f"] for tap in cfg],
            )
        return cls(cfg["a"], cfg["tau"], cfg["f"])

    def apply(self, x: Callable[[np.ndarray], np.ndarray], t) -> np.ndarray:
        """Channel output sum_d a_d cos(2 pi f_d (t - tau_d)) x(t - tau_d)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for a_d, tau_d, f_d in zip(self.amplitudes, self.delays, self.frequencies):
            shifted = t - tau_d
            out += a_d * np.cos(2.0 * np.pi * f_d * shifted) * x(shifted)
        return out


def assemble_taps(batch: SampleBatch, basis: PacketBasis, taps: DelayDopplerTaps) -> SampleBatch:
    """Fill A and B for tap-sum measurements (weighted delayed point samples).

    This is the zero-width limit of a kernel measurement; the maximum delay
    plays the role of the kernel support length.
    """
    max_delay = float(np.max(taps.delays)) if taps.delays.size else 0.0
    if max_delay > 1.0 - 2.0 * basis.eta + 1e-12:
        raise KernelTooLong(
            f"max tap delay {max_delay} exceeds {1.0 - 2.0 * basis.eta} for eta={basis.eta}"
        )
    n = basis.n_funcs
    a = np.zeros((batch.size, n))
    b = np.zeros((batch.size, n))
    for a_d, tau_d, f_d in zip(taps.amplitudes, taps.delays, taps.frequencies):
        shifted = batch.times - tau_d
        weight = a_d * np.cos(2.0 * np.pi * f_d * shifted)
        a += weight[:, None] * basis.evaluate_packet(batch.k, shifted)
        b += weight[:, None] * basis.evaluate_packet(batch.k - 1, shifted)
    return replace(batch, a=a, b=b)
