"""Backend selection for the hot rotation kernels.

The compiled extension is preferred when present; setting the environment
variable ``STREAMLSQ_FORCE_PYTHON=1`` before import forces the numpy fallback
(useful for benchmarking and debugging).
"""

import os

if os.environ.get("STREAMLSQ_FORCE_PYTHON") == "1":
    from ._rotations_py import jacobi_sweeps, onesided_sweeps

    BACKEND = "python"
else:
    try:
        from ._rotations import jacobi_sweeps, onesided_sweeps

        BACKEND = "compiled"
    except ImportError:
        from ._rotations_py import jacobi_sweeps, onesided_sweeps

        BACKEND = "python"

__all__ = ["jacobi_sweeps", "onesided_sweeps", "BACKEND"]
