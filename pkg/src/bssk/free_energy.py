"""Limiting free energy, steepest-descent approximation, finite-size assemblies.

The finite-size free energy is assembled from eigenvalue statistics along the
reductions that the asymptotic analysis itself uses: the high-temperature side
through the log-statistic at gamma_tilde, the low-temperature side through the
edge statistics (T1n, T2n) or through the non-singular saddle value G_hat plus
the one-dimensional line integral K_n.  The fluctuation statistic attached to
every report is

    statistic = (n+m)/sqrt((1/6) log n) * (F_finite - F_limit + (1/12) log n/(n+m)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum, lgamma
from typing import Literal

import numpy as np

from .model import AVariant, CoeffVariant, ModelParams, a_func, constants_for, limit_coefficient
from .edge_stats import DegenerateSpectrumError, compute_T_statistics
from .saddle import CriticalPoint, SaddleFunctions, gamma_tilde, mu1_coordinates
from .sampler import Spectrum

SnMode = Literal["asymptotic", "kn"]


@dataclass(frozen=True)
class FreeEnergyReport:
    """One finite-size free-energy evaluation and its fluctuation statistic."""

    F_limit: float
    F_finite: float
    statistic: float
    side: str
    diagnostics: dict


def fluctuation_statistic(f_finite: float, f_limit: float, n: int, m: int) -> float:
    """(n+m)/sqrt((1/6)log n) * (F_finite - F_limit + (1/12) log n/(n+m))."""
    log_n = math.log(n)
    return (n + m) / math.sqrt(log_n / 6.0) * (f_finite - f_limit + log_n / (12.0 * (n + m)))


def f_limit(beta: float, lam: float, a_variant: AVariant) -> float:
    """Limiting free energy F(beta); piecewise across beta_c.

    High branch beta^2/(2 beta_c^4); low branch
    f_lam + lam/(1+lam) A(d_+, B) - log(beta)/2 - lam C_lam/(2(1+lam)).
    """
    from .model import constants_from_lambda

    c = constants_from_lambda(lam, beta)
    if beta < c.beta_c:
        return beta**2 / (2.0 * c.beta_c**4)
    return (
        c.f_lambda
        + lam / (1.0 + lam) * a_func(c.d_plus, c.B, c.alpha, a_variant)
        - 0.5 * math.log(beta)
        - lam / (2.0 * (1.0 + lam)) * c.C_lambda
    )


def log_sphere_area(k: int) -> float:
    """log of the surface area of the unit (k-1)-sphere in R^k."""
    return math.log(2.0) + 0.5 * k * math.log(math.pi) - lgamma(0.5 * k)


def log_prefactor(n: int, m: int, beta: float) -> float:
    """Exact log of the factor multiplying Q_n in the partition-function identity.

    log[ 2^n / (|S^{m-1}||S^{n-1}|) * (pi^2 (n+m) / (m^2 n beta^2))^((n+m-4)/4) ].
    """
    power = (n + m - 4) / 4.0
    inner = 2.0 * math.log(math.pi) + math.log(n + m) - 2.0 * math.log(m) - math.log(n) - 2.0 * math.log(beta)
    return n * math.log(2.0) - log_sphere_area(m) - log_sphere_area(n) + power * inner


def f_from_log_qn(log_qn: float, n: int, m: int, beta: float) -> float:
    """Finite-size free energy from log Q_n via the exact prefactor."""
    return (log_qn + log_prefactor(n, m, beta)) / (n + m)


def log_qn_steepest_descent(cp: CriticalPoint, fns: SaddleFunctions) -> float:
    """log Q_n = n G(gamma_1, gamma_2) + log(2 pi) - log n - (1/2) log D at the saddle.

    Only valid where the discriminant D is real and positive (high side).
    The 2 pi is the exact value of the Gaussian integral
    int exp(-(n/2) y^T Hess y) d^2 y = 2 pi/(n sqrt(D)), and the contour
    quadrature oracle confirms it.
    """
    n = fns.n
    g = fns.G(cp.gamma1, cp.gamma2)
    d = fns.discriminant(cp.gamma1, cp.gamma2)
    if abs(d.imag) > 1e-9 * abs(d) or d.real <= 0.0:
        raise ValueError(f"steepest-descent formula needs a positive discriminant, got {d}")
    return n * g.real + math.log(2.0 * math.pi) - math.log(n) - 0.5 * math.log(d.real)


def f_finite_high(spectrum: Spectrum, params: ModelParams) -> FreeEnergyReport:
    """High-temperature finite-size free energy from the shifted log-statistic.

        F = -(1/(2(n+m))) sum_i log(gamma_tilde - mu_i) + lam beta^2/(1+lam)^2
            - (1-lam)/(2(1+lam)) log(1+lam+beta^2 lam) - lam/(1+lam) log beta
            + 1/(2(lam+1)) log(1+lam) - (1/6) log n/(n+m)

    Rejects spectra with mu_1 >= gamma_tilde (the rare event where the shifted
    logarithm degenerates).
    """
    c = constants_for(params)
    n, m, beta, lam = params.n, params.m, params.beta, c.lam
    gt = gamma_tilde(beta, lam)
    gaps = gt - spectrum.mu
    if not np.all(gaps > 0.0):
        raise DegenerateSpectrumError("mu_1 >= gamma_tilde: outside the high-temperature event")
    log_n = math.log(n)
    f_fin = (
        -fsum(np.log(gaps)) / (2.0 * (n + m))
        + lam * beta**2 / (1.0 + lam) ** 2
        - (1.0 - lam) / (2.0 * (1.0 + lam)) * math.log(1.0 + lam + beta**2 * lam)
        - lam / (1.0 + lam) * math.log(beta)
        + math.log(1.0 + lam) / (2.0 * (lam + 1.0))
        - log_n / (6.0 * (n + m))
    )
    f_lim = f_limit(beta, lam, "2B")
    stats = compute_T_statistics(spectrum, params)
    statistic = fluctuation_statistic(f_fin, f_lim, n, m)
    # F reconstructed through T0n alone; the difference is the deterministic
    # Taylor remainder of the window expansion, O(log log n / n).
    f_t0_route = (
        f_lim - log_n / (12.0 * (n + m)) + math.sqrt(log_n / 6.0) / (n + m) * stats.T0n
    )
    diag = {
        "T0n": stats.T0n,
        "T1n": stats.T1n,
        "T2n": stats.T2n,
        "sigma_n": stats.sigma_n,
        "gamma_tilde": gt,
        "f_t0_route": f_t0_route,
    }
    return FreeEnergyReport(
        F_limit=f_lim, F_finite=f_fin, statistic=statistic, side="high", diagnostics=diag
    )


def _log_sn_asymptotic(n: int, b: float) -> float:
    """Leading deterministic behavior of log S_n (the e^{O(1)} factor dropped)."""
    log_n = math.log(n)
    val = -5.0 / 6.0 * log_n
    if b > 0.0:
        val -= 0.5 * math.log(b * math.sqrt(log_n))
    return val


def _log_sn_quadrature(spectrum: Spectrum, params: ModelParams) -> float:
    """log S_n = log I11 + log K_n with K_n evaluated by line quadrature.

    I11 is the closed-form Gaussian y1-integral of the factorized integrand:
    I11 = sqrt(pi/(c1 n)) exp(-t^2/(4 c1 n)), t = B_n/mu_1^(1),
    c1 = B_n ((mu_1^(1)+mu_1^(2))/2 + 1/n) / (mu_1^(1))^2.
    """
    from .quadrature import kn_quadrature

    c = constants_for(params)
    n = params.n
    m11, m12, _ = mu1_coordinates(spectrum, c.alpha_n, c.B_n)
    c1 = c.B_n * (0.5 * (m11 + m12) + 1.0 / n) / m11**2
    t = c.B_n / m11
    log_i11 = 0.5 * math.log(math.pi / (c1 * n)) - t * t / (4.0 * c1 * n)
    kn = kn_quadrature(
        SaddleFunctions.for_spectrum(spectrum, c.alpha_n, c.B_n), params
    )
    return log_i11 + math.log(kn.real)


def f_ghat_route(
    spectrum: Spectrum,
    params: ModelParams,
    sn_mode: SnMode = "asymptotic",
) -> tuple[float, dict]:
    """Variant-free low-temperature free energy through G_hat.

        F = [n G_hat + log S_n + log(prefactor)] / (n+m)

    with the exact partition-function prefactor, and log S_n either from its
    asymptotic law (mode "asymptotic") or from the I11 * K_n quadrature
    (mode "kn").  This route contains no Tracy-Widom coefficient choice, which
    is what makes it usable as the arbiter between the two printed variants.
    """
    c = constants_for(params)
    n, m = params.n, params.m
    fns = SaddleFunctions.for_spectrum(spectrum, c.alpha_n, c.B_n)
    ghat = fns.g_hat()
    if sn_mode == "asymptotic":
        log_sn = _log_sn_asymptotic(n, params.b)
    elif sn_mode == "kn":
        log_sn = _log_sn_quadrature(spectrum, params)
    else:
        raise ValueError(f"unknown sn_mode {sn_mode!r}")
    f_val = (n * ghat + log_sn + log_prefactor(n, m, params.beta)) / (n + m)
    return f_val, {"G_hat": ghat, "log_Sn": log_sn}


def f_finite_low(
    spectrum: Spectrum,
    params: ModelParams,
    coeff_variant: CoeffVariant,
    a_variant: AVariant = "2B",
    sn_mode: SnMode = "asymptotic",
) -> FreeEnergyReport:
    """Low-temperature finite-size free energy via the T-statistic assembly.

        F = f_lam + lam/(1+lam) A(d_+, B) - log(beta)/2 - lam C_lam/(2(1+lam))
            - (1/12) log n/(n+m) + sqrt((1/6)log n)/(n+m) (T1n + c T2n)

    with c = limit_coefficient(b, lam, coeff_variant).  Diagnostics carry the
    exact G_hat and the variant-free reconstruction of F through it.
    """
    c = constants_for(params)
    n, m, lam = params.n, params.m, c.lam
    if not spectrum.mu[0] > spectrum.mu[1]:
        raise DegenerateSpectrumError("low-temperature assembly needs mu_1 > mu_2")
    stats = compute_T_statistics(spectrum, params)
    coeff = limit_coefficient(params.b, lam, coeff_variant)
    log_n = math.log(n)
    det = (
        c.f_lambda
        + lam / (1.0 + lam) * a_func(c.d_plus, c.B, c.alpha, a_variant)
        - 0.5 * math.log(params.beta)
        - lam / (2.0 * (1.0 + lam)) * c.C_lambda
        - log_n / (12.0 * (n + m))
    )
    f_fin = det + math.sqrt(log_n / 6.0) / (n + m) * (stats.T1n + coeff * stats.T2n)
    f_lim = f_limit(params.beta, lam, a_variant)
    statistic = fluctuation_statistic(f_fin, f_lim, n, m)
    f_ghat, ghat_diag = f_ghat_route(spectrum, params, sn_mode=sn_mode)
    diag = {
        "T1n": stats.T1n,
        "T2n": stats.T2n,
        "coeff": coeff,
        "f_ghat_route": f_ghat,
        "ghat_statistic": fluctuation_statistic(f_ghat, f_lim, n, m),
        **ghat_diag,
    }
    return FreeEnergyReport(
        F_limit=f_lim, F_finite=f_fin, statistic=statistic, side="low", diagnostics=diag
    )
