"""Numerical laboratory for the bipartite spherical SK model near criticality."""

from .model import (
    ModelParams,
    ModelConstants,
    beta_critical,
    constants_for,
    constants_from_lambda,
    limit_coefficient,
)
from .sampler import TridiagonalSample, Spectrum, sample_loe, eigenvalues, stream_for

__all__ = [
    "ModelParams",
    "ModelConstants",
    "TridiagonalSample",
    "Spectrum",
    "beta_critical",
    "constants_for",
    "constants_from_lambda",
    "limit_coefficient",
    "sample_loe",
    "eigenvalues",
    "stream_for",
]

__version__ = "0.1.0"
