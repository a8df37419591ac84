"""Fréchet Inception Distance between a storyboard and its source video."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NotSymmetric, TooFewSamples

EPS = 1e-6


@dataclass(frozen=True, eq=False)
class GaussianStats:
    mean: np.ndarray = field(repr=False)
    cov: np.ndarray = field(repr=False)
    n_samples: int

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _as_matrix(features) -> np.ndarray:
    rows = [getattr(f, "values", f) for f in features]
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def fit_gaussian(features: Sequence) -> GaussianStats:
    """Sample mean and unbiased (n - 1) covariance of the feature rows."""
    x = _as_matrix(features)
    if x.shape[0] < 2:
        raise TooFewSamples(f"need at least 2 samples to fit a covariance, got {x.shape[0]}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    return GaussianStats(mean, (cov + cov.T) / 2, x.shape[0])


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric square root through eigh, negative eigenvalues clamped to 0."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got {m.shape}")
    if not np.allclose(m, m.T, rtol=0, atol=1e-6):
        raise NotSymmetric("matrix is not symmetric within 1e-6")
    w, v = np.linalg.eigh((m + m.T) / 2)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return (root + root.T) / 2


def fid(a: GaussianStats, b: GaussianStats, eps: float = EPS) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2).

    Both covariances get ``eps * I`` first, always. Small negative results from
    round-off are clamped to 0.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    ridge = eps * np.eye(a.dim)
    sa = a.cov + ridge
    sb = b.cov + ridge
    root_a = matrix_sqrt_psd(sa)
    inner = root_a @ sb @ root_a
    cross = matrix_sqrt_psd((inner + inner.T) / 2)
    diff = a.mean - b.mean
    value = float(diff @ diff + np.trace(sa) + np.trace(sb) - 2.0 * np.trace(cross))
    return max(value, 0.0)


def evaluate_storyboard(all_features: Sequence, key_features: Sequence) -> float:
    return fid(fit_gaussian(all_features), fit_gaussian(key_features))
