import math

import mpmath as mp
import numpy as np
import pytest

from bssk.model import ModelParams, beta_critical, constants_for, constants_from_lambda
from bssk.mp import MPLaw
from bssk.sampler import Spectrum, eigenvalues, sample_loe, stream_for
from bssk.saddle import (
    BranchCutError,
    SaddleFunctions,
    discriminant_d_infty,
    eval_g_infty,
    gamma_coordinates,
    gamma_tilde,
    mu1_coordinates,
    solve_gamma,
)


def two_point_spectrum():
    return Spectrum(mu=np.array([1.0, 0.5]))


def test_solve_gamma_against_high_precision_oracle():
    # (1/2)(1/(g-1) + 1/(g-0.5)) = 1/(1/2 + sqrt(1/4 + g)), solved with mpmath
    spec = two_point_spectrum()
    cp = solve_gamma(spec, alpha_n=0.5, b_n=1.0)
    f = lambda g: (mp.mpf(1) / (g - 1) + 1 / (g - mp.mpf("0.5"))) / 2 - 1 / (
        mp.mpf("0.5") + mp.sqrt(mp.mpf("0.25") + g)
    )
    oracle = mp.findroot(f, mp.mpf("2.0"), tol=1e-40)
    assert cp.gamma == pytest.approx(float(oracle), abs=1e-13)
    assert cp.residual <= 1e-12


def test_gamma_coordinates_identities():
    spec = two_point_spectrum()
    cp = solve_gamma(spec, alpha_n=0.5, b_n=1.0)
    assert 4.0 * cp.gamma1 * cp.gamma2 == pytest.approx(cp.gamma, rel=1e-12)
    root = math.sqrt(0.25 + cp.gamma)
    assert cp.gamma2 == pytest.approx((-0.5 + root) / 2.0, rel=1e-12)
    assert cp.gamma1 == pytest.approx((0.5 + root) / 2.0, rel=1e-12)
    assert 4.0 * cp.gamma1 * cp.gamma2 > spec.mu[0]


def test_gamma_diverges_as_bn_vanishes():
    spec = two_point_spectrum()
    gammas = [solve_gamma(spec, 0.5, b_n).gamma for b_n in (1.0, 0.3, 0.1, 0.03)]
    assert all(g2 > g1 for g1, g2 in zip(gammas, gammas[1:]))
    assert gammas[-1] > 1e2


def test_residual_on_sampled_spectra():
    params = ModelParams.critical_window(500, 1000, -1.0, 17)
    c = constants_for(params)
    for k in range(5):
        spec = eigenvalues(sample_loe(params, stream_for(17, k)))
        cp = solve_gamma(spec, c.alpha_n, c.B_n)
        assert cp.residual <= 1e-12
        assert cp.gamma > spec.mu[0]


def test_gamma_tilde_values():
    # equals d_+ exactly at beta_c
    for lam in (1.0, 0.5, 0.2):
        d_plus = (1.0 + math.sqrt(lam)) ** 2
        assert gamma_tilde(beta_critical(lam), lam) == pytest.approx(d_plus, rel=1e-14)
    assert gamma_tilde(1.0, 1.0) == pytest.approx(4.5, rel=1e-15)


def test_gamma_tilde_window_expansion():
    # gt - d_+ = 4 lam/(1+lam) D^2 - 4 lam^(5/4)/(1+lam)^(3/2) D^3 + O(D^4), D = beta - beta_c
    lam, delta = 0.5, 1e-2
    beta_c = beta_critical(lam)
    d_plus = (1.0 + math.sqrt(lam)) ** 2
    got = gamma_tilde(beta_c + delta, lam) - d_plus
    series = (
        4.0 * lam / (1.0 + lam) * delta**2
        - 4.0 * lam**1.25 / (1.0 + lam) ** 1.5 * delta**3
    )
    assert abs(got - series) < 1e-7


def sampled_fns(n=40, m=80, b=-1.0, seed=23):
    params = ModelParams.critical_window(n, m, b, seed)
    c = constants_for(params)
    spec = eigenvalues(sample_loe(params, stream_for(seed, 0)))
    fns = SaddleFunctions.for_spectrum(spec, c.alpha_n, c.B_n)
    cp = solve_gamma(spec, c.alpha_n, c.B_n)
    return params, c, spec, fns, cp


def test_gradient_vanishes_at_saddle():
    _, _, _, fns, cp = sampled_fns()
    assert abs(fns.partial(1, 0, cp.gamma1, cp.gamma2)) < 1e-9
    assert abs(fns.partial(0, 1, cp.gamma1, cp.gamma2)) < 1e-9


def test_g_real_on_real_points():
    _, _, _, fns, cp = sampled_fns()
    val = fns.G(cp.gamma1 + 0.3, cp.gamma2 + 0.2)
    assert val.imag == 0.0


def test_partials_match_finite_differences():
    _, _, _, fns, cp = sampled_fns()
    z1, z2 = cp.gamma1 + 0.1, cp.gamma2 + 0.1
    # h balances truncation against roundoff (second differences lose eps/h^2)
    h = 1e-5
    h2 = 1e-4
    cases = {
        (1, 0): (fns.G(z1 + h, z2) - fns.G(z1 - h, z2)) / (2 * h),
        (0, 1): (fns.G(z1, z2 + h) - fns.G(z1, z2 - h)) / (2 * h),
        (2, 0): (fns.G(z1 + h2, z2) - 2 * fns.G(z1, z2) + fns.G(z1 - h2, z2)) / h2**2,
        (0, 2): (fns.G(z1, z2 + h2) - 2 * fns.G(z1, z2) + fns.G(z1, z2 - h2)) / h2**2,
        (1, 1): (
            fns.G(z1 + h2, z2 + h2) - fns.G(z1 + h2, z2 - h2) - fns.G(z1 - h2, z2 + h2) + fns.G(z1 - h2, z2 - h2)
        )
        / (4 * h2**2),
    }
    for k, fd in cases.items():
        exact = fns.partial(*k, z1, z2)
        assert abs(exact - fd) <= 1e-6 * max(1.0, abs(exact))
    # third order against first-order differences of second partials
    d30_fd = (fns.partial(2, 0, z1 + h, z2) - fns.partial(2, 0, z1 - h, z2)) / (2 * h)
    assert abs(fns.partial(3, 0, z1, z2) - d30_fd) <= 1e-5 * max(1.0, abs(d30_fd))
    d21_fd = (fns.partial(1, 1, z1 + h, z2) - fns.partial(1, 1, z1 - h, z2)) / (2 * h)
    assert abs(fns.partial(2, 1, z1, z2) - d21_fd) <= 1e-5 * max(1.0, abs(d21_fd))
    d12_fd = (fns.partial(0, 2, z1 + h, z2) - fns.partial(0, 2, z1 - h, z2)) / (2 * h)
    assert abs(fns.partial(1, 2, z1, z2) - d12_fd) <= 1e-5 * max(1.0, abs(d12_fd))
    d03_fd = (fns.partial(0, 2, z1, z2 + h) - fns.partial(0, 2, z1, z2 - h)) / (2 * h)
    assert abs(fns.partial(0, 3, z1, z2) - d03_fd) <= 1e-5 * max(1.0, abs(d03_fd))


def test_branch_cut_flagging():
    fns = SaddleFunctions(mu=np.array([1.0, 0.5]), alpha_n=0.5, b_n=1.0)
    with pytest.raises(BranchCutError):
        fns.G(0.1, 0.5)  # 4 z1 z2 = 0.2 < mu_2 on the real axis
    assert fns.near_cut(0.1, 0.5 + 1e-14j)
    assert not fns.near_cut(1.0, 1.0)


def test_discriminant_d_infty():
    assert discriminant_d_infty(1.0, 1.0) == pytest.approx(4.0 / 3.0, rel=1e-14)
    with pytest.raises(ValueError):
        discriminant_d_infty(beta_critical(0.5), 0.5)


def test_mu1_coordinates_identities():
    params = ModelParams.critical_window(60, 60, 1.0, 5)
    c = constants_for(params)
    spec = eigenvalues(sample_loe(params, stream_for(5, 0)))
    m11, m12, a_plus = mu1_coordinates(spec, c.alpha_n, c.B_n)
    # alpha_n = 0 (n = m): symmetric coordinates sqrt(mu_1)/2
    assert m11 == pytest.approx(math.sqrt(spec.mu[0]) / 2.0, rel=1e-13)
    assert m12 == pytest.approx(m11, rel=1e-13)
    assert 4.0 * m11 * m12 == pytest.approx(spec.mu[0], rel=1e-12)
    # cross-check of the two printed forms of a_plus
    m21, _ = gamma_coordinates(spec.mu[1], c.alpha_n, c.B_n)
    other = spec.mu[0] / (8.0 * m11) + spec.mu[1] / (8.0 * m21)
    assert a_plus == pytest.approx(other, rel=1e-12)


def test_mu1_coordinates_asymmetric():
    params = ModelParams.critical_window(50, 125, 1.0, 6)
    c = constants_for(params)
    spec = eigenvalues(sample_loe(params, stream_for(6, 0)))
    m11, m12, _ = mu1_coordinates(spec, c.alpha_n, c.B_n)
    assert 4.0 * m11 * m12 == pytest.approx(spec.mu[0], rel=1e-12)
    assert m11 > m12


def test_g_infty_matches_g_for_large_n():
    # deterministic analog approximates the random G at moderate size
    params = ModelParams.fixed_beta(300, 600, 0.7 * beta_critical(0.5), 31)
    c = constants_for(params)
    spec = eigenvalues(sample_loe(params, stream_for(31, 0)))
    fns = SaddleFunctions.for_spectrum(spec, c.alpha_n, c.B_n)
    law = MPLaw(0.5)
    z1, z2 = 1.2, 0.9
    g_rand = fns.G(z1, z2)
    g_det = eval_g_infty(law, c.alpha, c.B, z1, z2)
    assert abs(g_rand - g_det) < 0.05


def test_g_hat_needs_simple_top():
    fns = SaddleFunctions(mu=np.array([1.0, 1.0, 0.5]), alpha_n=0.5, b_n=1.0)
    with pytest.raises(ValueError):
        fns.g_hat()


def test_g_hat_decomposition_small_scale(tw_reference):
    # G_hat = A(d_+, B) - log(n)/(3n) - (1/2n) sum log|d_+ - mu_i| + c2(B)(mu_1 - d_+) + O(1/n)
    from bssk.model import a_func

    n, m, b, seed = 2000, 4000, 1.0, 321
    params = ModelParams.critical_window(n, m, b, seed)
    c = constants_for(params)
    r = math.sqrt(c.lam)
    c2 = c.B**2 / (2.0 * (c.alpha + math.sqrt(c.alpha**2 + c.d_plus * c.B**2))) - 1.0 / (
        2.0 * r * (1.0 + r)
    )
    diffs = []
    for k in range(200):
        spec = eigenvalues(sample_loe(params, stream_for(seed, k)), driver="sterf")
        fns = SaddleFunctions.for_spectrum(spec, c.alpha_n, c.B_n)
        ghat = fns.g_hat()
        decomposition = (
            a_func(c.d_plus, c.B, c.alpha, "2B")
            - math.log(n) / (3.0 * n)
            - math.fsum(np.log(np.abs(c.d_plus - spec.mu))) / (2.0 * n)
            + c2 * (spec.mu[0] - c.d_plus)
        )
        diffs.append(abs(ghat - decomposition) * n)
    assert np.median(diffs) < 10.0
