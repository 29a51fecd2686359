"""Recurrences on the tridiagonal entries: characteristic roots, the L/X sums
behind the Gaussian statistic, the eigenvector ratio recurrence, minors, and
the independence experiment.

All per-index arrays are stored 1-based (slot 0 is NaN padding) so the code
reads like the formulas: rho[i], alpha[i], ... for i = 1..n, suffix weights
w[i] for i = 2..n+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .edge_stats import edge_rescale
from .model import ModelParams
from .sampler import TridiagonalSample, sample_loe, stream_for, top_eigenvalues


class NegativeDiscriminantError(ArithmeticError):
    def __init__(self, index: int):
        super().__init__(f"characteristic-root discriminant negative at i={index}")
        self.index = index


class RecurrenceBreakdownError(ArithmeticError):
    """1 + F_{j-1} underflowed; the ratio recurrence cannot continue."""


def characteristic_roots(n: int, m: int, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Signed roots rho_i^[+-] = -(q_i -+ sqrt(q_i^2 - 4 c_i))/2 ... for i = 1..n.

    q_i = gamma*m - (m - n + 2i - 1), c_i = (m - n + i - 1)(i - 1); rho^+ is the
    larger-modulus root.  Arrays are 1-based with NaN in slot 0.
    """
    i = np.arange(0, n + 1, dtype=float)
    q = gamma * m - (m - n + 2.0 * i - 1.0)
    c = (m - n + i - 1.0) * (i - 1.0)
    if np.any(q[1:] <= 0.0):
        raise ValueError("gamma * m below the entry centering: outside the recurrence domain")
    disc = q * q - 4.0 * c
    bad = np.nonzero(disc[1:] < 0.0)[0]
    if len(bad):
        raise NegativeDiscriminantError(int(bad[0]) + 1)
    root = np.sqrt(np.maximum(disc, 0.0))
    rho_plus = -0.5 * (q + root)
    # stable small root: rho^- = c / rho^+ avoids the q - root cancellation
    rho_minus = np.where(rho_plus != 0.0, c / np.where(rho_plus != 0.0, rho_plus, 1.0), 0.0)
    rho_plus[0] = rho_minus[0] = math.nan
    return rho_plus, rho_minus


@dataclass(frozen=True)
class RecurrenceState:
    """All per-index arrays of the recurrence at evaluation point gamma."""

    gamma: float
    n: int
    m: int
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    tau: np.ndarray
    delta: np.ndarray
    xi: np.ndarray
    omega: np.ndarray
    L: np.ndarray
    X: np.ndarray
    suffix_weights: np.ndarray  # w[i] = 1 + omega[i] w[i+1], w[n+1] = 1; valid i >= 2

    def sum_l(self) -> float:
        return float(math.fsum(self.L[3:]))

    def weighted_sum_parts(self) -> tuple[float, float]:
        """(sum_{i=3}^n w_{i+1} X_i, sum_{i=3}^n alpha_i - (w_3 - 1) alpha_2).

        The two parts add up to sum L_i exactly; note the (w_3 - 1) factor
        (the plain w_3 version drops an alpha_2).
        """
        wx = float(math.fsum(self.suffix_weights[4 : self.n + 2] * self.X[3 : self.n + 1]))
        rem = float(math.fsum(self.alpha[3:]) - (self.suffix_weights[3] - 1.0) * self.alpha[2])
        return wx, rem


def build_recurrence(sample: TridiagonalSample, sigma_n: float) -> RecurrenceState:
    """Arrays at gamma = d_+ + sigma_n n^(-2/3); L forward, suffix weights backward."""
    n, m = sample.n, sample.m
    lam = n / m
    gamma = (1.0 + math.sqrt(lam)) ** 2 + sigma_n * n ** (-2.0 / 3.0)
    rho_plus, rho_minus = characteristic_roots(n, m, gamma)
    mod = np.abs(rho_plus)
    i = np.arange(0, n + 1, dtype=float)

    a2 = np.full(n + 1, math.nan)
    a2[1:] = sample.a**2
    b2 = np.full(n + 1, math.nan)
    b2[1] = 0.0
    b2[2:] = sample.b**2

    alpha = (a2 - (m - n + i)) / mod
    beta = (b2 - (i - 1.0)) / mod
    tau = (m - n + i) / mod
    delta = (i - 1.0) / mod

    omega = np.full(n + 1, math.nan)
    omega[2:] = tau[1:n] * delta[2:]
    xi = np.full(n + 1, math.nan)
    xi[2:] = alpha[2:] + beta[2:] * (1.0 + tau[1:n]) + alpha[1:n] * delta[2:]
    x_arr = np.full(n + 1, math.nan)
    x_arr[3:] = (1.0 + tau[2:n]) * (delta[3:] * alpha[2:n] + beta[3:])

    ell = np.full(n + 1, math.nan)
    if n >= 3:
        ell[3] = xi[3]
        for k in range(4, n + 1):
            ell[k] = xi[k] + omega[k] * ell[k - 1]

    w = np.full(n + 2, math.nan)
    w[n + 1] = 1.0
    for k in range(n, 1, -1):
        w[k] = 1.0 + omega[k] * w[k + 1]

    return RecurrenceState(
        gamma=gamma,
        n=n,
        m=m,
        rho_plus=rho_plus,
        rho_minus=rho_minus,
        alpha=alpha,
        beta=beta,
        tau=tau,
        delta=delta,
        xi=xi,
        omega=omega,
        L=ell,
        X=x_arr,
        suffix_weights=w,
    )


def truncated_z(state: RecurrenceState, p: int) -> tuple[float, float, float]:
    """(Z, tail, remainder) with Z = sum_{i=3}^{n-p} w_{i+1} X_i.

    tail is the excluded sum over i > n-p and remainder the alpha part, so
    Z + tail + remainder = sum L_i exactly.
    """
    n = state.n
    if not 3 <= n - p <= n:
        raise ValueError(f"cutoff n - p = {n - p} outside [3, n]")
    cut = n - p
    w, x = state.suffix_weights, state.X
    z_val = float(math.fsum(w[4 : cut + 2] * x[3 : cut + 1]))
    tail = float(math.fsum(w[cut + 2 : n + 2] * x[cut + 1 : n + 1]))
    rem = float(math.fsum(state.alpha[3:]) - (w[3] - 1.0) * state.alpha[2])
    return z_val, tail, rem


@dataclass(frozen=True)
class EigvecRecurrence:
    """Ratio recurrence for the top eigenvector, in (sign, log-magnitude) form."""

    F: np.ndarray  # F[j], j = 1..n-1 (slot 0 NaN)
    log_ratio: np.ndarray  # log |v_{j+1}/v_j|, j = 1..n-1
    ratio_sign: np.ndarray  # sign of v_{j+1}/v_j


def eigvec_recurrence(sample: TridiagonalSample, mu1: float) -> EigvecRecurrence:
    """F_j and the cumulative ratio representation of the top eigenvector.

    F_1 = -1 + (mu_1 m - a_1^2)/|rho_1^+|,
    F_j = -1 + (mu_1 m - a_j^2 - b_{j-1}^2)/|rho_j^+|
          - (a_{j-1} b_{j-1})^2/(|rho_j^+||rho_{j-1}^+|) / (1 + F_{j-1}),
    with rho at gamma = d_+, and v_{j+1}/v_j = (1 + F_j) |rho_j^+|/(a_j b_j).
    The minus on the coupling term is forced by the three-term recurrence
    a_j b_j v_{j+1} = (mu_1 m - a_j^2 - b_{j-1}^2) v_j - a_{j-1} b_{j-1} v_{j-1};
    the reconstruction oracle against the eigensolver confirms it.
    """
    n, m = sample.n, sample.m
    rho_plus, _ = characteristic_roots(n, m, (1.0 + math.sqrt(n / m)) ** 2)
    mod = np.abs(rho_plus)
    a, b = sample.a, sample.b
    f = np.full(n, math.nan)
    f[1] = -1.0 + (mu1 * m - a[0] ** 2) / mod[1]
    for j in range(2, n):
        prev = 1.0 + f[j - 1]
        if abs(prev) < 1e-300:
            raise RecurrenceBreakdownError(f"1 + F_{j-1} underflowed at j={j}")
        f[j] = (
            -1.0
            + (mu1 * m - a[j - 1] ** 2 - b[j - 2] ** 2) / mod[j]
            - (a[j - 2] * b[j - 2]) ** 2 / (mod[j] * mod[j - 1]) / prev
        )
    one_plus = 1.0 + f[1:]
    if np.any(one_plus == 0.0):
        raise RecurrenceBreakdownError("1 + F_j vanished")
    ratios_log = np.full(n, math.nan)
    ratios_sign = np.full(n, math.nan)
    ratios_log[1:] = np.log(np.abs(one_plus)) + np.log(mod[1:n]) - np.log(a[: n - 1] * b)
    ratios_sign[1:] = np.sign(one_plus)
    return EigvecRecurrence(F=f, log_ratio=ratios_log, ratio_sign=ratios_sign)


def reconstruct_eigenvector(rec: EigvecRecurrence) -> np.ndarray:
    """Unit top eigenvector from the ratio recurrence (first nonzero positive)."""
    log_mag = np.concatenate(([0.0], np.cumsum(rec.log_ratio[1:])))
    signs = np.concatenate(([1.0], np.cumprod(rec.ratio_sign[1:])))
    log_mag -= log_mag.max()
    v = signs * np.exp(log_mag)
    v /= np.linalg.norm(v)
    nz = np.nonzero(v)[0]
    if len(nz) and v[nz[0]] < 0:
        v = -v
    return v


def minor_top_eigenvalue(sample: TridiagonalSample, p: int) -> tuple[float, float]:
    """(mu_tilde_1, Y_n): top eigenvalue of the bottom-right p x p minor.

    The minor keeps the full-matrix diagonal entries (so the b_{n-p} coupling
    enters the corner), matching the zero-padded comparison matrix; Y_n is the
    edge rescaling of mu_tilde_1 with the full-size n.
    """
    n, m = sample.n, sample.m
    if not 1 <= p <= n:
        raise ValueError(f"need 1 <= p <= n, got p={p}")
    diag, off = sample.matrix_bands()
    d, e = diag[n - p :], off[n - p :]
    w = eigvalsh_tridiagonal(d, e, select="i", select_range=(p - 1, p - 1), lapack_driver="stebz")
    mu_tilde = float(w[0])
    return mu_tilde, edge_rescale(mu_tilde, n, n / m)


def ab_concentration(sample: TridiagonalSample, cutoff: int | None = None) -> dict:
    """Deviation of the off-diagonal products a_j b_j from their centerings.

    Reports max_j |a_j b_j - sqrt(j (m-n+j))| (per-index centering) and the
    normalized form |max_j a_j b_j - sqrt(mn)| against the (e log n)^2 sqrt(n)
    threshold, over j <= cutoff (default: all n-1 products; the asymptotic
    cutoff n - n^(1/3) log^3 n is empty at desk scale).
    """
    n, m = sample.n, sample.m
    ab = sample.a[: n - 1] * sample.b
    if cutoff is None:
        cutoff = n - 1
    cutoff = min(cutoff, n - 1)
    j = np.arange(1, cutoff + 1, dtype=float)
    per_index = float(np.max(np.abs(ab[:cutoff] - np.sqrt(j * (m - n + j)))))
    lemma_dev = float(abs(np.max(ab[:cutoff]) - math.sqrt(m * n)))
    threshold = (math.e * math.log(n)) ** 2 * math.sqrt(n)
    return {
        "max_per_index_dev": per_index,
        "lemma_dev": lemma_dev,
        "lemma_threshold": threshold,
        "lemma_ok": lemma_dev <= threshold,
        "cutoff": cutoff,
    }


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc, yc = x - x.mean(), y - y.mean()
    return float(np.dot(xc, yc) / math.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))


def independence_experiment(
    params: ModelParams,
    p: int,
    n_samples: int,
    sigma_n: float | None = None,
    bootstrap: int = 1000,
) -> dict:
    """Correlation between the truncated Gaussian-part statistic and the minor edge.

    Per sample: Z from entries with index <= n - p (scaled to the T1n
    normalization) and Y from the bottom-right p x p minor; the entry ranges
    are disjoint.  Returns the Pearson correlation with a bootstrap CI, plus
    the full-matrix counterparts (sum L_i and the full edge statistic) for the
    consistency anti-test.
    """
    n = params.n
    if not 1 <= p <= n - 3:
        raise ValueError(f"need 1 <= p <= n - 3 for disjoint ranges, got p={p}")
    if sigma_n is None:
        sigma_n = math.log(math.log(n)) ** 3
    norm = math.sqrt(2.0 / 3.0 * math.log(n))
    z_stat = np.empty(n_samples)
    y_stat = np.empty(n_samples)
    z_full = np.empty(n_samples)
    t2_full = np.empty(n_samples)
    for k in range(n_samples):
        sample = sample_loe(params, stream_for(params.seed, k))
        state = build_recurrence(sample, sigma_n)
        z_val, tail, rem = truncated_z(state, p)
        z_stat[k] = z_val / norm
        z_full[k] = (z_val + tail + rem) / norm
        mu_tilde, y_n = minor_top_eigenvalue(sample, p)
        y_stat[k] = y_n
        t2_full[k] = edge_rescale(float(top_eigenvalues(sample)[0]), n, params.lam())
    corr = pearson(z_stat, y_stat)
    corr_full = pearson(z_full, t2_full)
    boot_stream = stream_for(params.seed ^ 0x9E3779B97F4A7C15, 0)
    idx = boot_stream.integers(0, n_samples, size=(bootstrap, n_samples))
    boot = np.array([pearson(z_stat[r], y_stat[r]) for r in idx])
    lo, hi = np.quantile(boot, [0.025, 0.975])
    return {
        "pearson": corr,
        "ci_low": float(lo),
        "ci_high": float(hi),
        "pearson_full": corr_full,
        "z_stat": z_stat,
        "y_stat": y_stat,
    }
