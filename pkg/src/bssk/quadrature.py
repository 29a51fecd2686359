"""Ground-truth validation of the contour representation at small sizes.

Three oracles live here:

* qn_quadrature: the double contour integral for Q_n over vertical lines,
  evaluated by phase-factored (Filon-Legendre) product quadrature.  On each
  panel the oscillation e^{i omega y} is integrated exactly against a Legendre
  expansion of the smooth factor, so panels can grow geometrically into the
  slowly decaying tails regardless of the oscillation frequency.
* z_direct: the partition function straight from its definition as a surface
  integral over the two spheres (Bessel reduction of the tau-sphere plus a
  one-dimensional angle quadrature for n = 2, or plain Monte Carlo).
* kn_quadrature: the one-dimensional line integral K_n used on the
  low-temperature side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ive, spherical_jn

from .model import ModelParams, constants_for
from .saddle import SaddleFunctions, gamma_coordinates
from .sampler import Spectrum


class TailTooFatError(ValueError):
    """The integrand decays too slowly for the requested quadrature."""


class ToleranceNotMetError(ArithmeticError):
    def __init__(self, achieved: float, target: float):
        super().__init__(f"quadrature error estimate {achieved:.3e} exceeds target {target:.3e}")
        self.achieved = achieved
        self.target = target


@dataclass(frozen=True)
class QuadratureConfig:
    """Panel layout and accuracy target for the contour quadratures."""

    y_max: float = 1e14
    nodes_per_panel: int = 20
    max_panels: int = 400
    rel_tol: float = 1e-9

    def __post_init__(self):
        if not self.y_max > 0:
            raise ValueError("need y_max > 0")
        if not self.rel_tol >= 1e-10:
            raise ValueError("rel_tol below 1e-10 is not supported")
        if self.nodes_per_panel < 6 or self.max_panels < 4:
            raise ValueError("quadrature layout too coarse")


_FILON_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _filon_rule(p: int) -> tuple[np.ndarray, np.ndarray]:
    """(nodes, projection matrix) of the p-point Filon-Legendre rule.

    proj @ g(nodes) gives the Legendre coefficients of the degree p-1
    interpolant of g on [-1, 1].
    """
    if p not in _FILON_CACHE:
        x, w = np.polynomial.legendre.leggauss(p)
        pj = np.zeros((p, p))
        pj[0] = 1.0
        if p > 1:
            pj[1] = x
        for j in range(2, p):
            pj[j] = ((2 * j - 1) * x * pj[j - 1] - (j - 1) * pj[j - 2]) / j
        proj = pj * w * ((2 * np.arange(p) + 1) / 2.0)[:, None]
        _FILON_CACHE[p] = (x, proj)
    return _FILON_CACHE[p]


def _panel_edges(scale: float, y_max: float, max_panels: int, ratio: float = 1.7) -> np.ndarray:
    """Geometric panel edges [0, w, ...] growing by `ratio` up to y_max."""
    edges = [0.0, scale]
    while edges[-1] < y_max and len(edges) < max_panels:
        edges.append(edges[-1] + (edges[-1] - edges[-2]) * ratio)
    return np.asarray(edges)


class LineRule:
    """Precomputed two-sided Filon panel rule for integrals of g(y) e^{i omega y} dy.

    The panel layout (geometric growth away from 0) and the per-panel moment
    vectors are fixed at construction, so evaluating many integrands over the
    same line costs one g evaluation on all nodes plus two small matmuls.
    """

    def __init__(
        self,
        omega: float,
        scale: float,
        cfg: QuadratureConfig,
        y_max: float | None = None,
        ratio: float = 1.7,
    ):
        p = cfg.nodes_per_panel
        x, proj = _filon_rule(p)
        orders = np.arange(p)
        edges = _panel_edges(scale, y_max if y_max is not None else cfg.y_max, cfg.max_panels, ratio)
        centers, halves = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            for lo, hi in ((a, b), (-b, -a)):
                centers.append(0.5 * (lo + hi))
                halves.append(0.5 * (hi - lo))
        self.centers = np.asarray(centers)
        self.halves = np.asarray(halves)
        self.nodes = (self.centers[:, None] + self.halves[:, None] * x[None, :]).ravel()
        self.proj = proj
        self.p = p
        # per-panel weight vector: h * e^{i omega c} * (moments @ proj) folded to node space
        moments = 2.0 * (1j**orders)[None, :] * spherical_jn(
            orders[None, :], np.abs(omega * self.halves)[:, None]
        )
        if omega < 0:
            moments = moments * (-1.0) ** orders[None, :]
        panel_factor = self.halves * np.exp(1j * omega * self.centers)
        self.node_weights = (panel_factor[:, None] * (moments @ proj)).ravel()
        self.tail_slice = slice((len(self.centers) - 2) * p, None)

    def integrate(self, gvals: np.ndarray) -> tuple[complex, float]:
        """(integral, error estimate) from g evaluated on self.nodes."""
        total = complex(self.node_weights @ gvals)
        per_panel = gvals.reshape(-1, self.p)
        coeffs = per_panel @ self.proj.T
        err = float(
            np.abs(self.halves) @ (np.abs(coeffs[:, -1]) + np.abs(coeffs[:, -2]))
        )
        tail = complex(self.node_weights[self.tail_slice] @ gvals[self.tail_slice])
        return total, err + 2.0 * abs(tail)


def _integrate_line(
    g,
    omega: float,
    scale: float,
    cfg: QuadratureConfig,
    y_max: float | None = None,
    ratio: float = 1.7,
) -> tuple[complex, float]:
    """Two-sided integral of g(y) e^{i omega y} dy with geometric Filon panels."""
    rule = LineRule(omega, scale, cfg, y_max=y_max, ratio=ratio)
    return rule.integrate(g(rule.nodes))


@dataclass(frozen=True)
class QnResult:
    """Q_n on log scale: Q_n = exp(log_modulus + i phase)."""

    log_modulus: float
    phase: float
    rel_error: float

    @property
    def value(self) -> complex:
        return math.exp(self.log_modulus) * complex(math.cos(self.phase), math.sin(self.phase))

    @property
    def imag_over_real(self) -> float:
        return abs(math.tan(self.phase))


def qn_quadrature(
    fns: SaddleFunctions,
    center: tuple[float, float],
    cfg: QuadratureConfig = QuadratureConfig(),
) -> QnResult:
    """Q_n = int int exp(n G(c1 + i y1, c2 + i y2)) dy2 dy1 over vertical lines.

    The center must satisfy c1, c2 > 0 and 4 c1 c2 > mu_1; by contour
    deformation the value does not depend on the admissible center.  Requires
    m >= 4 so that the z1 tails are absolutely integrable; the z2 tails decay
    like |y|^(-n/2) and are handled by the phase-factored panels.
    """
    n = fns.n
    m = round(2.0 * fns.alpha_n * n + n)
    if m < 4:
        raise TailTooFatError(f"m = {m} < 4: contour tails not integrable enough")
    c1, c2 = center
    mu = fns.mu
    mu1 = float(mu[0])
    if not (c1 > 0.0 and c2 > 0.0 and 4.0 * c1 * c2 > mu1):
        raise ValueError("center must satisfy c1, c2 > 0 and 4 c1 c2 > mu_1")
    omega = n * fns.b_n
    shift = n * fns.G(c1, c2).real
    gap_scale = (4.0 * c1 * c2 - mu1) / (4.0 * max(c1, c2))
    scale = min(gap_scale, 0.5 / omega, 0.25) / 4.0
    # truncation radii from the per-axis algebraic decay |y|^(-n/2), |y|^(-m/2)
    y_in = min(cfg.y_max, max(1e3, 10.0 ** (32.0 / n)))
    y_out = min(cfg.y_max, max(1e3, 10.0 ** (32.0 / m)))

    rule2 = LineRule(omega, scale, cfg, y_max=y_in)
    rule1 = LineRule(omega, scale, cfg, y_max=y_out)
    z2 = c2 + 1j * rule2.nodes
    g1 = np.empty(len(rule1.nodes), dtype=complex)
    inner_err = 0.0
    for start in range(0, len(rule1.nodes), 64):
        sl = slice(start, min(start + 64, len(rule1.nodes)))
        z1 = c1 + 1j * rule1.nodes[sl]
        u = 4.0 * z1[:, None] * z2[None, :]
        logsum = np.zeros_like(u)
        for mu_i in mu:
            logsum += np.log(u - mu_i)
        pref = n * fns.b_n * (z1 + c2) - n * fns.alpha_n * np.log(z1) - shift
        # the i*n*B_n*y2 part of nG cancels against the factored inner phase
        g2 = np.exp(pref[:, None] - 0.5 * logsum)
        vals = g2 @ rule2.node_weights
        if start == 0:
            v0, e0 = rule2.integrate(g2[0])
            inner_err = e0 / max(abs(v0), np.finfo(float).tiny)
        g1[sl] = vals
    g1 *= np.exp(-1j * omega * rule1.nodes)
    total, err = rule1.integrate(g1)
    rel = err / abs(total) + inner_err if total != 0 else math.inf
    if not np.isfinite(rel) or rel > cfg.rel_tol * 100:
        raise ToleranceNotMetError(rel, cfg.rel_tol * 100)
    return QnResult(
        log_modulus=shift + math.log(abs(total)),
        phase=math.atan2(total.imag, total.real),
        rel_error=rel,
    )


def qn_at_saddle(fns: SaddleFunctions, cfg: QuadratureConfig = QuadratureConfig()) -> QnResult:
    """Q_n with the contour through the random saddle point."""
    from .saddle import solve_gamma

    cp = solve_gamma(Spectrum(mu=fns.mu), fns.alpha_n, fns.b_n)
    return qn_quadrature(fns, (cp.gamma1, cp.gamma2), cfg)


# -- direct partition function ------------------------------------------------


def _log_sphere_mean_exp(t: np.ndarray, m: int) -> np.ndarray:
    """log E[exp(t u_1)] for u uniform on the unit sphere in R^m (elementwise).

    Equals log 0F1(m/2; t^2/4) = lgamma(m/2) + (1-m/2) log(t/2) + log I_{m/2-1}(t);
    the scaled Bessel ive keeps it stable for large t.
    """
    t = np.asarray(t, dtype=float)
    nu = 0.5 * m - 1.0
    small = t < 1e-6
    ts = np.where(small, 1.0, t)
    big_val = gammaln(0.5 * m) - nu * np.log(0.5 * ts) + np.log(ive(nu, ts)) + ts
    return np.where(small, t * t / (2.0 * m), big_val)


def z_direct_deterministic(j_matrix: np.ndarray, beta: float, tol: float = 1e-11) -> float:
    """log Z for n = 2 by integrating tau out (Bessel) and quadrature over the angle.

    The integrand is smooth and 2 pi periodic in the sigma angle, so the
    trapezoid rule converges spectrally; the grid is doubled until stable.
    """
    n, m = j_matrix.shape
    if n != 2:
        raise ValueError("deterministic path requires n = 2 (the sigma sphere is a circle)")
    scale = beta * math.sqrt(m) / math.sqrt(n + m)

    def log_z_on_grid(k: int) -> float:
        theta = np.arange(k) * (2.0 * math.pi / k)
        sigma = math.sqrt(2.0) * np.stack([np.cos(theta), np.sin(theta)])
        x_norm = np.linalg.norm(j_matrix.T @ sigma, axis=0)
        vals = _log_sphere_mean_exp(scale * x_norm, m)
        peak = vals.max()
        return peak + math.log(np.mean(np.exp(vals - peak)))

    k = 64
    prev = log_z_on_grid(k)
    while k <= 65536:
        k *= 2
        cur = log_z_on_grid(k)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise ToleranceNotMetError(abs(cur - prev), tol)


def z_direct_mc(
    j_matrix: np.ndarray, beta: float, budget: int, stream: np.random.Generator
) -> tuple[float, float]:
    """(log Z, standard error of log Z) by plain Monte Carlo over both spheres."""
    n, m = j_matrix.shape
    chunk = 500_000
    total = 0
    log_vals = []
    while total < budget:
        size = min(chunk, budget - total)
        sig = stream.standard_normal((size, n))
        tau = stream.standard_normal((size, m))
        sig *= math.sqrt(n) / np.linalg.norm(sig, axis=1, keepdims=True)
        tau *= math.sqrt(m) / np.linalg.norm(tau, axis=1, keepdims=True)
        h = np.einsum("si,ij,sj->s", sig, j_matrix, tau) / math.sqrt(n + m)
        log_vals.append(beta * h)
        total += size
    log_v = np.concatenate(log_vals)
    peak = log_v.max()
    w = np.exp(log_v - peak)
    mean = w.mean()
    se = w.std(ddof=1) / math.sqrt(len(w))
    return peak + math.log(mean), se / mean


def spectrum_of_coupling(j_matrix: np.ndarray) -> Spectrum:
    """Eigenvalues of (1/m) J J^T for a dense coupling matrix."""
    n, m = j_matrix.shape
    gram = j_matrix @ j_matrix.T / m
    mu = np.linalg.eigvalsh(gram)
    return Spectrum(mu=mu[::-1].copy())


def contour_identity_check(
    j_matrix: np.ndarray,
    beta: float,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> dict:
    """|log Z_direct - log Z_contour| for an n = 2 coupling matrix.

    The same J feeds both sides: the direct surface integral, and the contour
    formula through the spectrum of (1/m) J J^T with the exact sphere-area
    prefactor.  The relative error is measured on log Z (floored at 1e-2 in
    the denominator so the beta -> 0 limit stays well defined).
    """
    from .free_energy import log_prefactor

    n, m = j_matrix.shape
    if n != 2:
        raise ValueError("the deterministic oracle needs n = 2")
    spectrum = spectrum_of_coupling(j_matrix)
    params = ModelParams.fixed_beta(n, m, beta)
    c = constants_for(params)
    fns = SaddleFunctions.for_spectrum(spectrum, c.alpha_n, c.B_n)
    qn = qn_at_saddle(fns, cfg)
    log_z_contour = log_prefactor(n, m, beta) + qn.log_modulus
    log_z_direct = z_direct_deterministic(j_matrix, beta)
    rel = abs(log_z_direct - log_z_contour) / max(abs(log_z_direct), 1e-2)
    return {
        "log_z_direct": log_z_direct,
        "log_z_contour": log_z_contour,
        "rel_error": rel,
        "qn_imag_over_real": qn.imag_over_real,
    }


# -- the low-temperature line integral K_n ------------------------------------


def kn_quadrature(
    fns: SaddleFunctions,
    params: ModelParams,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> complex:
    """K_n = int exp[n(G(mu_1^(1), mu_1^(2) + 1/n + i y) - G_hat)] dy.

    The integrand decays like |y|^(-n/2) (integrable for n >= 4) and varies on
    the scale of the top spectral gaps near y = 0.  Conjugate symmetry makes
    K_n real; the full two-sided quadrature is computed so cancellation of the
    imaginary part stays observable.
    """
    n = fns.n
    if n < 4:
        raise TailTooFatError("K_n needs n >= 4 for an integrable tail")
    mu = fns.mu
    mu1 = float(mu[0])
    gaps = mu1 - mu[1:]
    if not np.all(gaps > 0.0):
        raise ValueError("K_n needs mu_1 > mu_2")
    m11, _ = gamma_coordinates(mu1, fns.alpha_n, fns.b_n)
    omega = n * fns.b_n

    def g(y: np.ndarray) -> np.ndarray:
        shift = 4.0 * m11 * (1.0 / n + 1j * y)
        logsum = np.log1p(shift[:, None] / gaps[None, :]).sum(axis=1)
        return np.exp(fns.b_n - 0.5 * logsum - 0.5 * np.log(shift))

    scale = min(float(gaps[0]) / (4.0 * m11), 1.0 / (4.0 * n * m11))
    y_max = min(cfg.y_max, max(1e3, 10.0 ** (32.0 / n)))
    # near the edge the eigenvalue count inside radius y grows like
    # (y n^(2/3))^(3/2), so panels must stay narrow through that transition
    ratio = 1.7 if n <= 64 else 1.18
    cfg_kn = QuadratureConfig(
        y_max=cfg.y_max,
        nodes_per_panel=cfg.nodes_per_panel,
        max_panels=max(cfg.max_panels, 600),
        rel_tol=cfg.rel_tol,
    )
    val, err = _integrate_line(g, omega, scale / 4.0, cfg_kn, y_max=y_max, ratio=ratio)
    rel = err / abs(val) if val != 0 else math.inf
    if not np.isfinite(rel) or rel > 1e-4:
        raise ToleranceNotMetError(rel, 1e-4)
    return complex(val)
