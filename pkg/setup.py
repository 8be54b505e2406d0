"""Build script for the optional compiled rotation kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import time); the compiled path is only a speedup for the dense
symmetric eigensolver.  If Cython or a C compiler is unavailable the build
degrades to pure Python instead of failing.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "streamlsq._native._rotations",
                ["src/streamlsq/_native/_rotations.pyx"],
                # Keep scalar arithmetic uncontracted so the compiled kernel
                # matches the numpy fallback operation for operation.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:  # pragma: no cover - build environment without Cython
    warnings.warn("Cython not available; installing with the pure-Python kernel only")

setup(ext_modules=ext_modules)
