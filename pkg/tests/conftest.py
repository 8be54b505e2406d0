"""Shared fixtures.  The expensive pipelines run once per session."""

import time

import numpy as np
import pytest

from streamlsq import basis as basis_mod
from streamlsq import experiment


@pytest.fixture(scope="session")
def lot8():
    return basis_mod.lot_basis(8, 0.25)


@pytest.fixture(scope="session")
def slepian_small():
    """Quick band-and-fold basis, comfortably inside the spectral plateau."""
    basis, spectrum = basis_mod.build_slepian_lot(8.0, 0.25, 12, 420)
    return basis, spectrum


@pytest.fixture(scope="session")
def slepian_big():
    """The documented configuration: bandlimit 16, 40 functions, grid ~1024."""
    start = time.monotonic()
    basis, spectrum = basis_mod.build_slepian_lot(16.0, 0.5, 40, 1024)
    elapsed = time.monotonic() - start
    return basis, spectrum, elapsed


@pytest.fixture(scope="session")
def lc_run():
    start = time.monotonic()
    result = experiment.run_experiment(experiment.level_crossing_config(seed=7))
    elapsed = time.monotonic() - start
    return result, elapsed


@pytest.fixture(scope="session")
def lc_run_lmax3():
    cfg = experiment.level_crossing_config(seed=7).with_overrides(l_max=3)
    return experiment.run_experiment(cfg)


@pytest.fixture(scope="session")
def dd_run():
    return experiment.run_experiment(experiment.delay_doppler_config(seed=7))


@pytest.fixture(scope="session")
def dd_run_lmax3():
    cfg = experiment.delay_doppler_config(seed=7).with_overrides(l_max=3)
    return experiment.run_experiment(cfg)


def random_spd(rng, n, shift=1.0):
    g = rng.standard_normal((n, n))
    return g.T @ g + shift * np.eye(n)
