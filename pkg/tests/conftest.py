"""Shared Monte Carlo ensembles for the heavy statistics tests.

The big fixtures sample full spectra once per session and are reused by every
test that needs that (n, m) ensemble; spectra depend only on (n, m, seed), so
window coordinates b enter later through the statistics, not the sampling.
"""

from __future__ import annotations

import numpy as np
import pytest

from bssk.model import ModelParams
from bssk.sampler import FAST_DRIVER, eigenvalues, sample_loe, stream_for


def sample_spectra(n: int, m: int, count: int, seed: int) -> list:
    params = ModelParams.critical_window(n, m, 0.0, seed)
    out = []
    for k in range(count):
        out.append(eigenvalues(sample_loe(params, stream_for(seed, k)), driver=FAST_DRIVER))
    return out


@pytest.fixture(scope="session")
def spectra_4000_square():
    """2000 spectra at (n, m) = (4000, 4000), the lam = 1 window ensemble."""
    return sample_spectra(4000, 4000, 2000, seed=67001)


@pytest.fixture(scope="session")
def spectra_4000_half():
    """2000 spectra at (n, m) = (4000, 8000), the lam = 1/2 window ensemble."""
    return sample_spectra(4000, 8000, 2000, seed=68001)


@pytest.fixture(scope="session")
def spectra_2000_half():
    """500 spectra at (n, m) = (2000, 4000) for the event checks."""
    return sample_spectra(2000, 4000, 500, seed=20001)


@pytest.fixture(scope="session")
def tw_reference():
    from bssk.edge_stats import load_tw1_reference

    return load_tw1_reference()
