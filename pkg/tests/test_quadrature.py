import math

import numpy as np
import pytest

from bssk.model import ModelParams, beta_critical, constants_for
from bssk.quadrature import (
    QuadratureConfig,
    TailTooFatError,
    _integrate_line,
    contour_identity_check,
    kn_quadrature,
    qn_at_saddle,
    qn_quadrature,
    spectrum_of_coupling,
    z_direct_deterministic,
    z_direct_mc,
)
from bssk.saddle import SaddleFunctions, solve_gamma
from bssk.sampler import Spectrum, eigenvalues, sample_loe, stream_for


CFG = QuadratureConfig()


def test_filon_line_closed_forms():
    # int e^{i w y}/(1 + y^2) dy = pi e^{-w}
    for w in (0.5, 3.0):
        val, err = _integrate_line(lambda y: 1.0 / (1.0 + y**2) + 0j, w, 0.1, CFG)
        assert val.real == pytest.approx(math.pi * math.exp(-w), rel=1e-12)
        assert abs(val.imag) < 1e-14
    # Gaussian: int e^{-y^2} e^{i w y} dy = sqrt(pi) e^{-w^2/4}
    val, _ = _integrate_line(lambda y: np.exp(-(y**2)) + 0j, 4.0, 0.1, CFG)
    assert val.real == pytest.approx(math.sqrt(math.pi) * math.exp(-4.0), rel=1e-12)


def test_filon_slow_decay():
    # algebraic tail |y|^(-3/2) with oscillation, vs a mpmath oscillatory oracle
    import mpmath as mp

    w = 2.0
    val, err = _integrate_line(lambda y: (1.0 + y**2 + 0j) ** (-0.75), w, 0.1, CFG)
    ref = 2.0 * mp.quadosc(
        lambda y: mp.cos(w * y) * (1 + y**2) ** mp.mpf(-0.75), [0, mp.inf], omega=w
    )
    assert val.real == pytest.approx(float(ref), rel=1e-11)


def sampled_case(n, m, beta, seed=3):
    params = ModelParams.fixed_beta(n, m, beta, seed)
    c = constants_for(params)
    spec = eigenvalues(sample_loe(params, stream_for(seed, 0)))
    fns = SaddleFunctions.for_spectrum(spec, c.alpha_n, c.B_n)
    cp = solve_gamma(spec, c.alpha_n, c.B_n)
    return spec, fns, cp


def test_center_invariance():
    # two distinct admissible centers agree to 1e-8 relative (Cauchy's theorem)
    spec, fns, cp = sampled_case(3, 9, 0.7, seed=5)
    r1 = qn_quadrature(fns, (cp.gamma1, cp.gamma2))
    r2 = qn_quadrature(fns, (cp.gamma1 * 0.8, cp.gamma2 * 1.4))
    assert abs(r1.log_modulus - r2.log_modulus) < 1e-8 * abs(r1.log_modulus)
    assert abs(r1.phase - r2.phase) < 1e-8


def test_qn_real_positive():
    spec, fns, cp = sampled_case(6, 12, 0.6)
    res = qn_quadrature(fns, (cp.gamma1, cp.gamma2))
    assert res.imag_over_real < 1e-8
    assert res.value.real > 0


def test_center_admissibility_enforced():
    spec, fns, cp = sampled_case(4, 8, 0.6)
    with pytest.raises(ValueError):
        qn_quadrature(fns, (0.1, 0.1))  # 4 c1 c2 < mu_1


def test_tail_too_fat_guard():
    fns = SaddleFunctions(mu=np.array([1.0, 0.5]), alpha_n=0.25, b_n=1.0)  # m = 3
    with pytest.raises(TailTooFatError):
        qn_quadrature(fns, (1.0, 1.0))


def test_z_direct_normalizations():
    stream = stream_for(7, 0)
    j_matrix = stream.standard_normal((2, 6))
    # beta -> 0: Z -> 1
    assert abs(z_direct_deterministic(j_matrix, 1e-9)) < 1e-12
    # J = 0: Z = 1 for any beta
    assert abs(z_direct_deterministic(np.zeros((2, 6)), 1.7)) < 1e-12


def test_z_direct_two_oracles_agree():
    # deterministic Bessel path vs plain Monte Carlo within 3 standard errors
    stream = stream_for(7, 0)
    j_matrix = stream.standard_normal((2, 6))
    det = z_direct_deterministic(j_matrix, 1.0)
    mc, se = z_direct_mc(j_matrix, 1.0, 2_000_000, stream_for(8, 0))
    assert abs(det - mc) < 3.0 * se


def test_contour_identity_three_betas():
    # the acceptance-critical two-oracle comparison at n = 2, m = 6
    stream = stream_for(7, 0)
    j_matrix = stream.standard_normal((2, 6))
    for beta in (0.5, beta_critical(1.0 / 3.0), 2.0):
        out = contour_identity_check(j_matrix, beta)
        assert out["rel_error"] < 1e-6
        assert out["qn_imag_over_real"] < 1e-8


def test_contour_identity_beta_to_zero():
    stream = stream_for(9, 0)
    j_matrix = stream.standard_normal((2, 8))
    out = contour_identity_check(j_matrix, 0.05)
    # both sides approach log 1 = 0 quadratically in beta
    assert abs(out["log_z_direct"]) < 0.01
    assert abs(out["log_z_contour"]) < 0.01
    assert abs(out["log_z_direct"] - out["log_z_contour"]) < 1e-8


def test_contour_identity_deterministic():
    stream = stream_for(7, 0)
    j_matrix = stream.standard_normal((2, 6))
    a = contour_identity_check(j_matrix, 1.2)
    b = contour_identity_check(j_matrix, 1.2)
    assert a == b


def test_spectrum_of_coupling_matches_gram():
    j_matrix = stream_for(4, 4).standard_normal((2, 10))
    spec = spectrum_of_coupling(j_matrix)
    gram = j_matrix @ j_matrix.T / 10
    assert np.trace(gram) == pytest.approx(float(np.sum(spec.mu)), rel=1e-13)


def test_kn_real_and_positive():
    n, m = 64, 64
    params = ModelParams.critical_window(n, m, 1.0, 12)
    c = constants_for(params)
    spec = eigenvalues(sample_loe(params, stream_for(12, 0)))
    fns = SaddleFunctions.for_spectrum(spec, c.alpha_n, c.B_n)
    val = kn_quadrature(fns, params)
    assert abs(val.imag) < 1e-10 * abs(val.real)
    assert val.real > 0


def test_kn_needs_enough_eigenvalues():
    params = ModelParams.critical_window(2, 4, 1.0, 1)
    fns = SaddleFunctions(mu=np.array([1.0, 0.5]), alpha_n=0.5, b_n=1.0)
    with pytest.raises(TailTooFatError):
        kn_quadrature(fns, params)


def test_kn_scaling_band():
    # n^(1/3) (b sqrt(log n))^(1/2) K_n inside [1/20, 20] across sizes (b = 1)
    medians = []
    for n in (200, 400):
        params = ModelParams.critical_window(n, n, 1.0, 50)
        c = constants_for(params)
        vals = []
        for k in range(20):
            spec = eigenvalues(sample_loe(params, stream_for(50, k)), driver="sterf")
            fns = SaddleFunctions.for_spectrum(spec, c.alpha_n, c.B_n)
            kn = kn_quadrature(fns, params).real
            vals.append(n ** (1.0 / 3.0) * math.sqrt(math.sqrt(math.log(n))) * kn)
        medians.append(float(np.median(vals)))
    assert all(1.0 / 20.0 <= v <= 20.0 for v in medians)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(y_max=-1.0)
    with pytest.raises(ValueError):
        QuadratureConfig(rel_tol=1e-12)
    with pytest.raises(ValueError):
        QuadratureConfig(nodes_per_panel=2)


def test_qn_at_saddle_matches_explicit_center():
    spec, fns, cp = sampled_case(5, 10, 0.8, seed=6)
    a = qn_at_saddle(fns)
    b = qn_quadrature(fns, (cp.gamma1, cp.gamma2))
    assert a.log_modulus == b.log_modulus
