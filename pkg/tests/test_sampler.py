import math

import numpy as np
import pytest

from bssk.model import ModelParams
from bssk.sampler import (
    Spectrum,
    TridiagonalSample,
    eigenvalues,
    eigenvector_top,
    sample_chi,
    sample_chi_array,
    sample_loe,
    spectrum_to_csv,
    stream_for,
    top_eigenvalues,
)


def test_chi_squared_two_is_exponential():
    stream = stream_for(11, 0)
    draws = sample_chi_array(np.full(100_000, 2.0), stream) ** 2
    assert 1.96 < draws.mean() < 2.04


@pytest.mark.parametrize("dof", [1.0, 3.0, 17.5])
def test_chi_moments(dof):
    stream = stream_for(12, int(dof * 10))
    draws = sample_chi_array(np.full(100_000, dof), stream) ** 2
    se_mean = math.sqrt(2.0 * dof / len(draws))
    assert abs(draws.mean() - dof) < 3.0 * se_mean
    var = draws.var(ddof=1)
    se_var = math.sqrt((8.0 * dof * (dof + 3.0) + 12 * dof) / len(draws))  # ~sd of var estimate
    assert abs(var - 2.0 * dof) < 4.0 * se_var


def test_chi_rejects_bad_dof():
    with pytest.raises(ValueError):
        sample_chi(0.0, stream_for(1, 0))


def test_stream_determinism():
    a = sample_chi_array(np.arange(1.0, 50.0), stream_for(5, 7))
    b = sample_chi_array(np.arange(1.0, 50.0), stream_for(5, 7))
    assert np.array_equal(a, b)
    c = sample_chi_array(np.arange(1.0, 50.0), stream_for(5, 8))
    assert not np.array_equal(a, c)


def test_loe_degrees_of_freedom_recovered():
    # n=2, m=4: a1^2 ~ chi2(3), a2^2 ~ chi2(4), b1^2 ~ chi2(1); df = mean of squares
    params = ModelParams.critical_window(2, 4, 0.0, 77)
    a2 = np.zeros(2)
    b2 = 0.0
    draws = 100_000
    for k in range(draws):
        s = sample_loe(params, stream_for(77, k))
        a2 += s.a**2
        b2 += s.b[0] ** 2
    a2 /= draws
    b2 /= draws
    assert abs(a2[0] - 3.0) / 3.0 < 0.02
    assert abs(a2[1] - 4.0) / 4.0 < 0.02
    assert abs(b2 - 1.0) < 0.02


def test_sample_determinism_across_runs():
    params = ModelParams.critical_window(50, 100, 1.0, 3)
    s1 = sample_loe(params, stream_for(3, 9))
    s2 = sample_loe(params, stream_for(3, 9))
    assert np.array_equal(s1.a, s2.a) and np.array_equal(s1.b, s2.b)


def test_n_one_rejected_at_construction():
    with pytest.raises(ValueError):
        ModelParams.critical_window(1, 4, 0.0, 0)


def frozen_2x2_sample():
    return TridiagonalSample(a=np.array([1.0, 1.0]), b=np.array([1.0]), n=2, m=4)


def test_eigenvalues_2x2_quadratic_oracle():
    # (1/4) [[1, 1], [1, 2]]: eigenvalues (3 +- sqrt(5))/8
    spec = eigenvalues(frozen_2x2_sample())
    want = np.array([(3 + math.sqrt(5)) / 8, (3 - math.sqrt(5)) / 8])
    assert np.allclose(spec.mu, want, atol=1e-14)


def test_trace_and_determinant_identities():
    params = ModelParams.critical_window(300, 450, 0.5, 21)
    for k in range(3):
        s = sample_loe(params, stream_for(21, k))
        spec = eigenvalues(s)
        trace = (np.sum(s.a**2) + np.sum(s.b**2)) / s.m
        assert abs(np.sum(spec.mu) - trace) < 1e-10 * trace
        logdet = 2.0 * np.sum(np.log(s.a)) - s.n * math.log(s.m)
        assert abs(np.sum(np.log(spec.mu)) - logdet) < 1e-8 * abs(logdet)


def test_eigensolver_drivers_agree():
    params = ModelParams.critical_window(500, 700, 0.0, 8)
    s = sample_loe(params, stream_for(8, 0))
    mu_bisect = eigenvalues(s, driver="stebz").mu
    mu_fast = eigenvalues(s, driver="sterf").mu
    assert np.max(np.abs(mu_bisect - mu_fast)) < 1e-12 * max(1.0, mu_bisect[0])


def test_top_eigenvalues_match_full_solve():
    params = ModelParams.critical_window(400, 400, 0.0, 13)
    s = sample_loe(params, stream_for(13, 1))
    spec = eigenvalues(s)
    top2 = top_eigenvalues(s, 2)
    assert np.allclose(top2, spec.mu[:2], atol=1e-12)


def test_eigenvector_2x2_closed_form():
    s = frozen_2x2_sample()
    mu1, v = eigenvector_top(s)
    # top eigenvector of [[1,1],[1,2]]/4: direction (1, (1+sqrt(5))/2)
    direction = np.array([1.0, (1.0 + math.sqrt(5)) / 2.0])
    direction /= np.linalg.norm(direction)
    assert mu1 == pytest.approx((3 + math.sqrt(5)) / 8, abs=1e-14)
    assert np.allclose(v, direction, atol=1e-10)
    assert v[0] > 0  # first nonzero component positive


def test_eigenvector_residual_at_n500():
    params = ModelParams.critical_window(500, 1000, 1.0, 30)
    for k in range(3):
        s = sample_loe(params, stream_for(30, k))
        mu1, v = eigenvector_top(s)
        diag, off = s.matrix_bands()
        mv = diag * v
        mv[:-1] += off * v[1:]
        mv[1:] += off * v[:-1]
        assert np.linalg.norm(mv - mu1 * v) <= 1e-10


def test_spectrum_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        Spectrum(mu=np.array([1.0, 2.0]))
    spec = eigenvalues(frozen_2x2_sample())
    path = tmp_path / "spec.csv"
    spectrum_to_csv(spec, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "index,mu"
    assert len(lines) == 3
    assert float(lines[1].split(",")[1]) == pytest.approx(spec.mu[0], rel=1e-16)


def test_positive_entry_enforcement():
    with pytest.raises(ValueError):
        TridiagonalSample(a=np.array([1.0, -1.0]), b=np.array([1.0]), n=2, m=4)
