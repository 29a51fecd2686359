import math

import numpy as np
import pytest

from bssk.model import ModelParams, c_lambda, limit_coefficient
from bssk.edge_stats import (
    DegenerateSpectrumError,
    EmpiricalDistribution,
    TWReference,
    clt_statistic,
    compute_T_statistics,
    edge_rescale,
    limit_law_cdf,
    limit_law_sample,
    load_tw1_reference,
)
from bssk.sampler import Spectrum, eigenvalues, sample_loe, stream_for


def synthetic_params(n=100, m=100):
    return ModelParams.critical_window(n, m, -1.0, 1)


def test_clt_statistic_at_zero_shift_is_t1n():
    params = synthetic_params()
    spec = eigenvalues(sample_loe(params, stream_for(1, 0)))
    st = compute_T_statistics(spec, params)
    assert clt_statistic(spec, params, 0.0) == st.T1n  # identical call path, bitwise


def test_t1n_closed_form_on_constant_spectrum():
    # mu_i = d_+ - 1: sum log|d_+ - mu_i| = 0, so T1n = (C_lam n - log(n)/6)/sqrt((2/3)log n)
    n = 64
    params = synthetic_params(n, n)
    spec = Spectrum(mu=np.full(n, 3.0))
    st = compute_T_statistics(spec, params)
    want = (c_lambda(1.0) * n - math.log(n) / 6.0) / math.sqrt(2.0 / 3.0 * math.log(n))
    assert st.T1n == pytest.approx(want, rel=1e-14)
    assert st.T2n == pytest.approx(edge_rescale(3.0, n, 1.0), rel=1e-14)
    assert st.T2n < 0.0


def test_degenerate_spectrum_guard():
    n = 16
    params = synthetic_params(n, n)
    spec = Spectrum(mu=np.full(n, 4.0))  # exactly at the edge: log 0
    with pytest.raises(DegenerateSpectrumError):
        compute_T_statistics(spec, params)


def test_t2n_sign_matches_edge_side():
    n = 32
    params = synthetic_params(n, n)
    above = Spectrum(mu=np.concatenate(([4.2], np.linspace(3.0, 0.5, n - 1))))
    below = Spectrum(mu=np.linspace(3.9, 0.5, n))
    assert compute_T_statistics(above, params).T2n > 0
    assert compute_T_statistics(below, params).T2n < 0


def test_t0n_flagged_when_mu1_exceeds_gamma_tilde():
    n = 32
    params = synthetic_params(n, n)  # b = -1: gamma_tilde - d_+ ~ 0.27 at n=32
    spec = Spectrum(mu=np.concatenate(([7.0], np.linspace(3.0, 0.5, n - 1))))
    st = compute_T_statistics(spec, params)
    assert not st.t0_defined
    ok = Spectrum(mu=np.linspace(3.9, 0.5, n))
    assert compute_T_statistics(ok, params).t0_defined


def test_clt_statistic_shift_linearity():
    # difference of statistics at sigma and 0 equals the log-sum difference
    # minus the deterministic drift, exactly
    n = 200
    params = synthetic_params(n, n)
    spec = eigenvalues(sample_loe(params, stream_for(3, 1)))
    sigma = 2.5
    gamma = 4.0 + sigma * n ** (-2.0 / 3.0)
    lhs = clt_statistic(spec, params, sigma) - clt_statistic(spec, params, 0.0)
    drift = 0.5 * sigma * n ** (1.0 / 3.0) - sigma**1.5 / 6.0
    sums = math.fsum(np.log(np.abs(4.0 - spec.mu))) - math.fsum(np.log(np.abs(gamma - spec.mu)))
    rhs = (drift + sums) / math.sqrt(2.0 / 3.0 * math.log(n))
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_clt_statistic_rejects_negative_shift():
    params = synthetic_params()
    spec = eigenvalues(sample_loe(params, stream_for(1, 0)))
    with pytest.raises(ValueError):
        clt_statistic(spec, params, -1.0)


# -- Tracy-Widom reference ---------------------------------------------------


def test_table_validation_rejects_non_monotone():
    grid = np.linspace(-10, 6, 50)
    cdf = np.linspace(1e-8, 1 - 1e-8, 50)
    cdf[20] = cdf[19]  # tie
    with pytest.raises(ValueError):
        TWReference(grid=grid, cdf=cdf)
    good = TWReference(grid=grid, cdf=np.linspace(1e-8, 1 - 1e-8, 50))
    assert good.cdf_at(-20.0) == pytest.approx(1e-8)
    assert good.cdf_at(20.0) == pytest.approx(1 - 1e-8)


def test_tw_cdf_monotone(tw_reference):
    x = np.linspace(-10, 6, 2000)
    vals = tw_reference.cdf_at(x)
    assert np.all(np.diff(vals) >= 0)
    assert tw_reference.cdf[0] < 1e-6 and tw_reference.cdf[-1] > 1 - 1e-6


def test_tw_sample_moments(tw_reference):
    draws = tw_reference.sample(stream_for(2, 2), size=100_000)
    assert -1.27 < draws.mean() < -1.15
    assert 1.20 < draws.std() < 1.34


def test_tw_inverse_transform_self_consistency(tw_reference):
    draws = tw_reference.sample(stream_for(2, 3), size=100_000)
    emp = EmpiricalDistribution.from_values(draws)
    assert emp.ks(tw_reference.cdf_at) < 0.01


def test_csv_round_trip(tw_reference, tmp_path):
    path = tmp_path / "tw.csv"
    tw_reference.to_csv(path)
    again = TWReference.from_csv(path)
    assert np.array_equal(again.grid, tw_reference.grid)
    assert np.array_equal(again.cdf, tw_reference.cdf)


# -- limit law ----------------------------------------------------------------


def test_limit_law_pure_normal_for_nonpositive_b(tw_reference):
    from scipy.special import ndtr

    draws = limit_law_sample(-2.0, 0.5, "theorem", tw_reference, stream_for(4, 0), size=100_000)
    emp = EmpiricalDistribution.from_values(draws)
    assert emp.ks(lambda x: ndtr(x)) < 0.01
    cdf = limit_law_cdf(0.0, 0.5, "lemma", tw_reference)
    assert cdf(0.0) == pytest.approx(0.5, abs=1e-12)


def test_limit_law_moments(tw_reference):
    b, lam = 1.0, 0.5
    c = limit_coefficient(b, lam, "lemma")
    draws = limit_law_sample(b, lam, "lemma", tw_reference, stream_for(4, 1), size=100_000)
    tw = tw_reference.sample(stream_for(4, 2), size=200_000)
    mean_ref, var_ref = c * tw.mean(), 1.0 + c * c * tw.var()
    se_mean = math.sqrt(var_ref / len(draws))
    assert abs(draws.mean() - mean_ref) < 3.0 * se_mean
    assert abs(draws.var(ddof=1) - var_ref) / var_ref < 0.05


def test_limit_law_convolution_cdf(tw_reference):
    b, lam = 1.0, 0.5
    draws = limit_law_sample(b, lam, "lemma", tw_reference, stream_for(4, 3), size=100_000)
    emp = EmpiricalDistribution.from_values(draws)
    assert emp.ks(limit_law_cdf(b, lam, "lemma", tw_reference)) < 0.01


def test_ks_machinery():
    from scipy.special import ndtr

    draws = stream_for(9, 9).standard_normal(50_000)
    emp = EmpiricalDistribution.from_values(draws)
    assert emp.ks(lambda x: ndtr(x)) < 0.01
    # shifted reference must show the shift
    assert emp.ks(lambda x: ndtr(x - 0.5)) > 0.15
    with pytest.raises(ValueError):
        EmpiricalDistribution(samples=np.array([2.0, 1.0]))
