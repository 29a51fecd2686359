"""Tridiagonal Laguerre Orthogonal Ensemble sampling and its spectrum.

The bidiagonal representation has independent entries a_i, b_i with
a_i^2 ~ chi^2(m-n+i) and b_i^2 ~ chi^2(i); the symmetric tridiagonal matrix
(1/m) B B^T then has diagonal (a_i^2 + b_{i-1}^2)/m (b_0 := 0) and
off-diagonal a_i b_i / m.  Its eigenvalues mu_1 >= ... >= mu_n are the
spectrum every other module consumes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from .model import ModelParams

# LAPACK driver names accepted by scipy's tridiagonal eigensolvers.
# "stebz" is Sturm-sequence bisection (the default here, robust for clustered
# edges); "sterf" is the fast root-free QL sweep used for large Monte Carlo
# batches.  Both agree to ~1e-13 absolute at n = 4000.
DEFAULT_DRIVER = "stebz"
FAST_DRIVER = "sterf"


def stream_for(seed: int, sample_index: int) -> np.random.Generator:
    """Counter-based stream keyed by (root seed, sample index).

    Philox is counter-based, so fan-out over sample indices is reproducible
    independent of scheduling order.
    """
    return np.random.Generator(np.random.Philox(key=(seed << 64) + sample_index))


def sample_chi(dof: float, stream: np.random.Generator) -> float:
    """One chi(dof) draw: square root of a gamma(dof/2, scale 2) variate."""
    if not dof > 0:
        raise ValueError(f"need dof > 0, got {dof}")
    return float(np.sqrt(stream.gamma(dof / 2.0, 2.0)))


def sample_chi_array(dofs: np.ndarray, stream: np.random.Generator) -> np.ndarray:
    """Independent chi draws for an array of degrees of freedom (fixed order)."""
    return np.sqrt(stream.gamma(np.asarray(dofs, dtype=float) / 2.0, 2.0))


@dataclass(frozen=True)
class TridiagonalSample:
    """Bidiagonal entries of one LOE draw; a has length n, b length n-1."""

    a: np.ndarray
    b: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        if len(self.a) != self.n or len(self.b) != self.n - 1:
            raise ValueError("entry arrays inconsistent with n")
        if not (np.all(self.a > 0) and np.all(self.b > 0)):
            raise ValueError("tridiagonal entries must be strictly positive")

    def matrix_bands(self) -> tuple[np.ndarray, np.ndarray]:
        """(diagonal, off-diagonal) of the scaled matrix (1/m) B B^T."""
        b2 = np.concatenate(([0.0], self.b**2))
        diag = (self.a**2 + b2) / self.m
        off = self.a[:-1] * self.b / self.m
        return diag, off


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of (1/m) B B^T, sorted descending."""

    mu: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.mu) > 0):
            raise ValueError("spectrum must be sorted descending")

    @property
    def n(self) -> int:
        return len(self.mu)


def sample_loe(params: ModelParams, stream: np.random.Generator) -> TridiagonalSample:
    """Draw the bidiagonal entries; a is drawn before b, in index order."""
    n, m = params.n, params.m
    a = sample_chi_array(m - n + np.arange(1, n + 1), stream)
    b = sample_chi_array(np.arange(1, n, dtype=float), stream)
    return TridiagonalSample(a=a, b=b, n=n, m=m)


def eigenvalues(sample: TridiagonalSample, driver: str = DEFAULT_DRIVER) -> Spectrum:
    """Full spectrum of (1/m) B B^T, descending."""
    diag, off = sample.matrix_bands()
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off))):
        raise ValueError("non-finite tridiagonal entries")
    mu = eigvalsh_tridiagonal(diag, off, lapack_driver=driver)
    if len(mu) != sample.n:
        raise RuntimeError(f"eigensolver returned {len(mu)} of {sample.n} eigenvalues")
    return Spectrum(mu=mu[::-1].copy())


def top_eigenvalues(sample: TridiagonalSample, k: int = 1) -> np.ndarray:
    """Largest k eigenvalues (descending) by selective Sturm bisection."""
    diag, off = sample.matrix_bands()
    n = sample.n
    w = eigvalsh_tridiagonal(
        diag, off, select="i", select_range=(n - k, n - 1), lapack_driver="stebz"
    )
    return w[::-1].copy()


def count_at_least(sample: TridiagonalSample, threshold: float) -> int:
    """Number of eigenvalues >= threshold, via Sturm counts on the bands."""
    diag, off = sample.matrix_bands()
    w = eigvalsh_tridiagonal(
        diag, off, select="v", select_range=(threshold, np.inf), lapack_driver="stebz"
    )
    return len(w)


def eigenvector_top(
    sample: TridiagonalSample, degenerate_gap: float = 1e-13
) -> tuple[float, np.ndarray]:
    """(mu_1, unit eigenvector) for the top eigenvalue, via inverse iteration.

    Sign convention: first nonzero component positive.  A top gap below
    `degenerate_gap` is flagged as unreliable.
    """
    diag, off = sample.matrix_bands()
    n = sample.n
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(n - 2, n - 1))
    gap = w[1] - w[0]
    if gap < degenerate_gap:
        raise ArithmeticError(f"top pair nearly degenerate: gap={gap:.3e}")
    vec = v[:, 1]
    nz = np.nonzero(vec)[0]
    if len(nz) and vec[nz[0]] < 0:
        vec = -vec
    return float(w[1]), vec


def spectrum_to_csv(spectrum: Spectrum, path) -> None:
    """Dump eigenvalues as CSV with header index,mu (1-based, descending)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "mu"])
        for i, mu in enumerate(spectrum.mu, start=1):
            writer.writerow([i, format(mu, ".17g")])
