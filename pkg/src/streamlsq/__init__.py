"""Streaming least-squares reconstruction from non-uniform local measurements.

Signals are represented on overlapping packets of compactly supported basis
functions; batches of point samples or short-kernel measurements arrive in
time order and a rolling block factorization keeps every packet's
least-squares coefficient estimate current.
"""

from ._native import BACKEND as kernel_backend
from .basis import (
    PacketBasis,
    WindowSpec,
    basis_from_config,
    build_shift_invariant,
    build_slepian_lot,
    flatness_beta,
    lot_basis,
    packet_project,
    synthesize,
)
from .errors import StreamlsqError
from .measurement import (
    DelayDopplerTaps,
    KernelMeasurementSpec,
    SampleBatch,
    SampleStream,
    assemble_kernel,
    assemble_point,
    assemble_taps,
    batch_stream,
)
from .oracle import BatchProblem, solve_dense
from .stream_solver import (
    FactorState,
    freeze_policy,
    full_backward_sweep,
    init,
    load_checkpoint,
    save_checkpoint,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BatchProblem",
    "DelayDopplerTaps",
    "FactorState",
    "KernelMeasurementSpec",
    "PacketBasis",
    "SampleBatch",
    "SampleStream",
    "StreamlsqError",
    "WindowSpec",
    "assemble_kernel",
    "assemble_point",
    "assemble_taps",
    "basis_from_config",
    "batch_stream",
    "build_shift_invariant",
    "build_slepian_lot",
    "flatness_beta",
    "freeze_policy",
    "full_backward_sweep",
    "init",
    "kernel_backend",
    "load_checkpoint",
    "lot_basis",
    "packet_project",
    "save_checkpoint",
    "solve_dense",
    "step",
    "synthesize",
    "__version__",
]
