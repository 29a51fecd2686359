"""Marchenko-Pastur law: density, Stieltjes transform, log potential, quantiles.

Support is [d_-, d_+] with d_pm = (1 pm sqrt(lam))^2.  Internally everything is
evaluated through the substitution x = (1+lam) + 2*sqrt(lam)*t, t in [-1, 1],
which absorbs the square-root edge behavior (and the 1/x factor at lam = 1,
where d_- = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

_QUANTILE_CACHE_NODES = 10_001


@dataclass
class MPLaw:
    """Marchenko-Pastur law at aspect ratio lam in (0, 1]."""

    lam: float
    d_minus: float = field(init=False)
    d_plus: float = field(init=False)
    _quantile_cache: tuple[np.ndarray, np.ndarray] | None = field(
        init=False, default=None, repr=False
    )
    _locations_cache: dict[int, np.ndarray] = field(init=False, default_factory=dict, repr=False)

    def __post_init__(self):
        if not (0.0 < self.lam <= 1.0):
            raise ValueError(f"need lam in (0, 1], got {self.lam}")
        r = math.sqrt(self.lam)
        self.d_minus = (1.0 - r) ** 2
        self.d_plus = (1.0 + r) ** 2

    # -- density ---------------------------------------------------------

    def density(self, x) -> np.ndarray | float:
        """p(x) = sqrt((d_+ - x)(x - d_-)) / (2 pi lam x), zero off support."""
        x = np.asarray(x, dtype=float)
        inside = (x > self.d_minus) & (x < self.d_plus)
        out = np.zeros_like(x)
        xs = x[inside]
        out[inside] = np.sqrt((self.d_plus - xs) * (xs - self.d_minus)) / (
            2.0 * np.pi * self.lam * xs
        )
        return out if out.ndim else float(out)

    # -- closed-form upper-tail mass --------------------------------------

    def top_mass(self, x) -> np.ndarray | float:
        """Integral of the density over [x, d_+].

        Closed form: with a = 1+lam, b = 2 sqrt(lam) and t = (x - a)/b,

            top_mass = 1/2 - (2/pi) * [ (a/b^2) arcsin t + sqrt(1-t^2)/b
                        - ((1-lam)/b^2) arcsin((b + a t)/(a + b t)) ]

        obtained by integrating sqrt(1-t^2)/(a + b t) in closed form.
        """
        a = 1.0 + self.lam
        b = 2.0 * math.sqrt(self.lam)
        x = np.asarray(x, dtype=float)
        t = np.clip((x - a) / b, -1.0, 1.0)
        anti = (a / b**2) * np.arcsin(t) + np.sqrt(np.maximum(0.0, 1.0 - t * t)) / b
        if self.lam < 1.0:
            u = np.clip((b + a * t) / (a + b * t), -1.0, 1.0)
            anti -= ((1.0 - self.lam) / b**2) * np.arcsin(u)
        q = 0.5 - (2.0 / math.pi) * anti
        q = np.clip(q, 0.0, 1.0)
        q = np.where(x <= self.d_minus, 1.0, q)
        q = np.where(x >= self.d_plus, 0.0, q)
        return q if q.ndim else float(q)

    # -- integrals of f(x) p(x) dx ----------------------------------------

    def expect(self, f, lo: float | None = None, hi: float | None = None, tol=1e-12):
        """Adaptive quadrature of f(x) p(x) dx over [lo, hi] (defaults: full support).

        f may return complex values.  The integral is evaluated in the theta
        variable (x = a + b cos theta), where the density kernel is smooth.
        """
        a = 1.0 + self.lam
        b = 2.0 * math.sqrt(self.lam)
        lo = self.d_minus if lo is None else max(lo, self.d_minus)
        hi = self.d_plus if hi is None else min(hi, self.d_plus)
        if hi <= lo:
            return 0.0
        th_lo = math.acos(min(1.0, max(-1.0, (hi - a) / b)))
        th_hi = math.acos(min(1.0, max(-1.0, (lo - a) / b)))

        def kernel(theta):
            x = a + b * math.cos(theta)
            return (2.0 / math.pi) * math.sin(theta) ** 2 / x * f(x)

        probe = kernel(0.5 * (th_lo + th_hi))
        if isinstance(probe, complex):
            re = quad(lambda t: kernel(t).real, th_lo, th_hi, epsabs=tol, epsrel=tol, limit=200)[0]
            im = quad(lambda t: kernel(t).imag, th_lo, th_hi, epsabs=tol, epsrel=tol, limit=200)[0]
            return complex(re, im)
        return quad(kernel, th_lo, th_hi, epsabs=tol, epsrel=tol, limit=200)[0]

    # -- Stieltjes transform ----------------------------------------------

    def stieltjes(self, z) -> complex:
        """s(z) = integral of p(x)/(z-x) dx, closed form, s(z) ~ 1/z at infinity.

        Valid for z off [d_-, d_+); the principal square roots give the right
        branch whenever Re z >= d_+ (the only region this artifact evaluates).
        """
        z = complex(z)
        root = np.sqrt(z - self.d_minus) * np.sqrt(z - self.d_plus)
        s = ((z + self.lam - 1.0) - root) / (2.0 * self.lam * z)
        return complex(s)

    def stieltjes_edge(self) -> float:
        """s(d_+) = 1/(sqrt(lam)(1+sqrt(lam)))."""
        r = math.sqrt(self.lam)
        return 1.0 / (r * (1.0 + r))

    # -- log potential -----------------------------------------------------

    def log_potential(self, z, tol=1e-12):
        """H(z) = integral of log(z - x) p(x) dx for Re z >= d_+ (quadrature).

        The log singularity at z = d_+ is integrable; complex z is allowed.
        """
        if isinstance(z, complex):
            return self.expect(lambda x: np.log(z - x), tol=tol)
        return self.expect(lambda x: math.log(z - x), tol=tol)

    # -- classical locations ------------------------------------------------

    def quantile_cache(self) -> tuple[np.ndarray, np.ndarray]:
        """Monotone (mass, location) table on Chebyshev-spaced nodes."""
        if self._quantile_cache is None:
            a = 1.0 + self.lam
            b = 2.0 * math.sqrt(self.lam)
            theta = np.linspace(0.0, math.pi, _QUANTILE_CACHE_NODES)
            x = a + b * np.cos(theta)
            x[0], x[-1] = self.d_plus, self.d_minus
            mass = self.top_mass(x)
            self._quantile_cache = (mass, x)
        return self._quantile_cache

    def classical_location(self, i: int, n: int) -> float:
        """g_i with i/n = integral of p over [g_i, d_+], solved to < 1e-10 residual."""
        if not 1 <= i <= n:
            raise ValueError(f"need 1 <= i <= n, got i={i}, n={n}")
        if i == n:
            return self.d_minus
        target = i / n
        mass, x = self.quantile_cache()
        j = int(np.searchsorted(mass, target))
        lo = x[min(j, len(x) - 1)]
        hi = x[max(j - 1, 0)]
        if lo > hi:
            lo, hi = hi, lo
        lo = max(lo - 1e-9, self.d_minus)
        hi = min(hi + 1e-9, self.d_plus)
        return float(brentq(lambda g: self.top_mass(g) - target, lo, hi, xtol=1e-14, rtol=8.9e-16))

    def classical_locations(self, n: int) -> np.ndarray:
        """All g_1..g_n (descending), cached per n."""
        if n not in self._locations_cache:
            self._locations_cache[n] = np.array(
                [self.classical_location(i, n) for i in range(1, n + 1)]
            )
        return self._locations_cache[n]
