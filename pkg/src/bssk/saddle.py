"""The random saddle point gamma, its coordinates, and the exponent function G.

G(z1, z2) = B_n (z1 + z2) - (1/2n) sum_i log(4 z1 z2 - mu_i) - alpha_n log z1,
with the principal complex logarithm.  The saddle (gamma_1, gamma_2) lies on
the positive real axis with 4 gamma_1 gamma_2 = gamma > mu_1, where gamma
solves the implicit equation L(gamma) = R(gamma) below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import fsum

import numpy as np

from .mp import MPLaw
from .sampler import Spectrum


class NoRootError(ArithmeticError):
    """The saddle equation has no sign change below the search cap."""


class BranchCutError(ArithmeticError):
    """Evaluation point sits on the branch cut of some log(4 z1 z2 - mu_i)."""


def _csum(values: np.ndarray) -> complex:
    """Compensated sum of a complex array (exact fsum on each part)."""
    return complex(fsum(values.real), fsum(values.imag))


@dataclass(frozen=True)
class CriticalPoint:
    """Solution gamma > mu_1 of the saddle equation, with its coordinates."""

    gamma: float
    gamma1: float
    gamma2: float
    residual: float


def gamma_coordinates(gamma: float, alpha_n: float, b_n: float) -> tuple[float, float]:
    """(gamma_1, gamma_2) = ((alpha_n + root)/(2 B_n), (-alpha_n + root)/(2 B_n))."""
    root = math.sqrt(alpha_n * alpha_n + gamma * b_n * b_n)
    return (alpha_n + root) / (2.0 * b_n), (-alpha_n + root) / (2.0 * b_n)


def saddle_lhs(x: float, mu: np.ndarray) -> float:
    """L(x) = (1/n) sum_i 1/(x - mu_i), compensated."""
    return fsum(1.0 / (x - mu)) / len(mu)


def saddle_rhs(x: float, alpha_n: float, b_n: float) -> float:
    """R(x) = B_n^2 / (alpha_n + sqrt(alpha_n^2 + x B_n^2))."""
    return b_n * b_n / (alpha_n + math.sqrt(alpha_n * alpha_n + x * b_n * b_n))


def solve_gamma(
    spectrum: Spectrum, alpha_n: float, b_n: float, x_cap: float = 1e12
) -> CriticalPoint:
    """Solve L(gamma) = R(gamma) for the unique root above mu_1.

    L/R is strictly decreasing on (mu_1, inf), from +inf to 0, so bisection on
    the sign of L - R restricted to that interval is unconditionally safe.  The
    bracket is grown geometrically, then bisected down to a one-ulp interval;
    the endpoint with the smaller residual |L - R| is returned.
    """
    if not b_n > 0:
        raise ValueError("need B_n > 0")
    mu = spectrum.mu
    mu1 = float(mu[0])

    def h(x: float) -> float:
        return saddle_lhs(x, mu) - saddle_rhs(x, alpha_n, b_n)

    lo = mu1 + max(1e-18, 8.0 * abs(mu1) * np.finfo(float).eps)
    while h(lo) <= 0.0:
        # pathological only if mu_1 has near-degenerate copies; tighten toward mu_1
        lo = mu1 + (lo - mu1) / 16.0
        if lo == mu1:
            raise NoRootError("L(x) - R(x) not positive even adjacent to mu_1")
    step = max(1.0, abs(mu1))
    hi = mu1 + step
    while h(hi) > 0.0:
        step *= 2.0
        hi = mu1 + step
        if hi - mu1 > x_cap:
            raise NoRootError(f"no sign change up to mu_1 + {x_cap:g}")
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    r_lo, r_hi = abs(h(lo)), abs(h(hi))
    gamma = lo if r_lo <= r_hi else hi
    residual = min(r_lo, r_hi)
    g1, g2 = gamma_coordinates(gamma, alpha_n, b_n)
    return CriticalPoint(gamma=gamma, gamma1=g1, gamma2=g2, residual=residual)


def gamma_tilde(beta: float, lam: float) -> float:
    """Deterministic saddle location (1+lam)/beta^2 + 1 + lam + lam beta^2/(1+lam).

    Equals d_+ exactly at beta = beta_c, and exceeds d_+ on both sides.
    """
    return (1.0 + lam) / beta**2 + 1.0 + lam + lam * beta**2 / (1.0 + lam)


def discriminant_d_infty(beta: float, lam: float) -> float:
    """Deterministic discriminant 4 beta^4 / (lam^2 (beta_c^4 - beta^4)), beta < beta_c."""
    beta_c4 = (1.0 + lam) ** 2 / lam
    if beta**4 >= beta_c4:
        raise ValueError("discriminant_d_infty is only defined for beta < beta_c")
    return 4.0 * beta**4 / (lam**2 * (beta_c4 - beta**4))


def mu1_coordinates(
    spectrum: Spectrum, alpha_n: float, b_n: float
) -> tuple[float, float, float]:
    """(mu_1^(1), mu_1^(2), a_plus) for the low-temperature evaluation point.

    a_plus is the midpoint (mu_1^(2) + mu_2^(2))/2 of the two branch points on
    the z2 axis.
    """
    mu1, mu2 = float(spectrum.mu[0]), float(spectrum.mu[1])
    m11, m12 = gamma_coordinates(mu1, alpha_n, b_n)
    _, m22 = gamma_coordinates(mu2, alpha_n, b_n)
    return m11, m12, 0.5 * (m12 + m22)


@dataclass(frozen=True)
class SaddleFunctions:
    """G and its derivatives for a fixed spectrum and (alpha_n, B_n)."""

    mu: np.ndarray
    alpha_n: float
    b_n: float

    @classmethod
    def for_spectrum(cls, spectrum: Spectrum, alpha_n: float, b_n: float) -> "SaddleFunctions":
        return cls(mu=spectrum.mu, alpha_n=alpha_n, b_n=b_n)

    @property
    def n(self) -> int:
        return len(self.mu)

    def _shifted(self, z1: complex, z2: complex) -> np.ndarray:
        w = 4.0 * complex(z1) * complex(z2) - self.mu
        on_cut = (w.real <= 0.0) & (w.imag == 0.0)
        if np.any(on_cut):
            raise BranchCutError("4 z1 z2 - mu_i on the negative real axis")
        return w

    def near_cut(self, z1: complex, z2: complex, tol: float = 1e-12) -> bool:
        """True when some 4 z1 z2 - mu_i is within tol of the branch cut."""
        w = 4.0 * complex(z1) * complex(z2) - self.mu
        return bool(np.any((w.real <= 0.0) & (np.abs(w.imag) <= tol)))

    def G(self, z1: complex, z2: complex) -> complex:
        w = self._shifted(z1, z2)
        n = self.n
        val = self.b_n * (complex(z1) + complex(z2)) - _csum(np.log(w)) / (2.0 * n)
        if self.alpha_n != 0.0:
            val -= self.alpha_n * np.log(complex(z1))
        return complex(val)

    def _f_derivs(self, z1: complex, z2: complex, order: int) -> complex:
        """Derivatives of f(u) = -(1/2n) sum log(u - mu_i) at u = 4 z1 z2."""
        w = self._shifted(z1, z2)
        n = self.n
        if order == 1:
            return -_csum(1.0 / w) / (2.0 * n)
        if order == 2:
            return _csum(1.0 / w**2) / (2.0 * n)
        if order == 3:
            return -_csum(1.0 / w**3) / n
        raise ValueError("order must be 1, 2 or 3")

    def partial(self, k1: int, k2: int, z1: complex, z2: complex) -> complex:
        """Partial derivative d^{k1}_{z1} d^{k2}_{z2} G, for 1 <= k1+k2 <= 3."""
        if k1 < 0 or k2 < 0 or not 1 <= k1 + k2 <= 3:
            raise ValueError("need a multi-index with 1 <= |k| <= 3")
        z1, z2 = complex(z1), complex(z2)
        a = self.alpha_n
        table = {
            (1, 0): lambda: self.b_n + 4.0 * z2 * self._f_derivs(z1, z2, 1) - a / z1,
            (0, 1): lambda: self.b_n + 4.0 * z1 * self._f_derivs(z1, z2, 1),
            (2, 0): lambda: (4.0 * z2) ** 2 * self._f_derivs(z1, z2, 2) + a / z1**2,
            (0, 2): lambda: (4.0 * z1) ** 2 * self._f_derivs(z1, z2, 2),
            (1, 1): lambda: 4.0 * self._f_derivs(z1, z2, 1)
            + 16.0 * z1 * z2 * self._f_derivs(z1, z2, 2),
            (3, 0): lambda: (4.0 * z2) ** 3 * self._f_derivs(z1, z2, 3) - 2.0 * a / z1**3,
            (0, 3): lambda: (4.0 * z1) ** 3 * self._f_derivs(z1, z2, 3),
            (2, 1): lambda: 32.0 * z2 * self._f_derivs(z1, z2, 2)
            + 64.0 * z1 * z2**2 * self._f_derivs(z1, z2, 3),
            (1, 2): lambda: 32.0 * z1 * self._f_derivs(z1, z2, 2)
            + 64.0 * z2 * z1**2 * self._f_derivs(z1, z2, 3),
        }
        return complex(table[(k1, k2)]())

    def discriminant(self, z1: complex, z2: complex) -> complex:
        """D = d1^2 G * d2^2 G - (d1 d2 G)^2."""
        d20 = self.partial(2, 0, z1, z2)
        d02 = self.partial(0, 2, z1, z2)
        d11 = self.partial(1, 1, z1, z2)
        return d20 * d02 - d11 * d11

    def g_hat(self) -> float:
        """Non-singular part of G at (mu_1^(1), mu_1^(2)): omits the j = 1 log term."""
        mu1 = float(self.mu[0])
        gaps = mu1 - self.mu[1:]
        if not np.all(gaps > 0.0):
            raise ValueError("G_hat needs a simple top eigenvalue (mu_1 > mu_2)")
        m11, m12 = gamma_coordinates(mu1, self.alpha_n, self.b_n)
        val = self.b_n * (m11 + m12) - fsum(np.log(gaps)) / (2.0 * self.n)
        if self.alpha_n != 0.0:
            val -= self.alpha_n * math.log(m11)
        return float(val)


def eval_g_infty(law: MPLaw, alpha: float, big_b: float, z1, z2) -> complex:
    """Deterministic analog of G with the MP log potential in place of the sum."""
    z1, z2 = complex(z1), complex(z2)
    u = 4.0 * z1 * z2
    if u.imag == 0.0:
        u = u.real
        if u < law.d_plus:
            raise ValueError("eval_g_infty needs 4 z1 z2 >= d_+ on the real axis")
    h = law.log_potential(u)
    return complex(big_b * (z1 + z2) - alpha * np.log(z1) - 0.5 * h)
