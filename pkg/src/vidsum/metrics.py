"""Frame-to-frame dissimilarities and dense distance matrices."""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidLambda, LengthMismatch, MixedDescriptorKinds
from .features import GaussianSummary, LatentVector, ScdaDescriptor


class Metric(enum.Enum):
    L2 = "l2"
    UNIVARIATE_WASSERSTEIN = "uw2"
    BLENDED = "blended"


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Dense symmetric dissimilarities, stored as float32.

    Construction validates the invariants (square, symmetric to 1e-9 after
    rounding, zero diagonal, finite and non-negative) unless Python runs with
    ``-O``.
    """

    values: np.ndarray = field(repr=False)
    metric: Metric
    lam: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype != np.float32:
            v = v.astype(np.float32)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if __debug__:
            check_distance_matrix(v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def tag(self) -> str:
        if self.metric is Metric.BLENDED:
            return f"blended({self.lam:g})"
        return self.metric.value


def check_distance_matrix(v: np.ndarray) -> None:
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
        raise ValueError(f"distance matrix must be square and non-empty, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("distance matrix has non-finite entries")
    if np.any(v < 0):
        raise ValueError("distance matrix has negative entries")
    if np.any(np.diagonal(v) != 0):
        raise ValueError("distance matrix diagonal is not zero")
    if not np.allclose(v, v.T, rtol=0, atol=1e-9):
        raise ValueError("distance matrix is not symmetric")


def l2(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"vector shapes differ: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def wasserstein_1d(g1: GaussianSummary, g2: GaussianSummary) -> float:
    """2-Wasserstein distance between N(mu1, sigma1^2) and N(mu2, sigma2^2)."""
    return math.hypot(g1.mu - g2.mu, g1.sigma - g2.sigma)


def temporal_distance(i: int, j: int, n: int) -> float:
    if n <= 1:
        return 0.0
    return abs(i - j) / (n - 1)


def temporal_matrix(n: int) -> np.ndarray:
    idx = np.arange(n, dtype=np.float64)
    if n <= 1:
        return np.zeros((n, n))
    return np.abs(idx[:, None] - idx[None, :]) / (n - 1)


def pairwise_l2(x: np.ndarray, block: int = 1024) -> np.ndarray:
    """Euclidean distances between the rows of ``x`` in float64.

    Uses the Gram expansion, then recomputes directly the entries where it
    cancels badly (near-duplicate rows), so duplicates come out exactly 0.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    sq = np.einsum("ij,ij->i", x, x)
    d2 = np.empty((n, n))
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2[start:stop] = sq[start:stop, None] + sq[None, :] - 2.0 * (x[start:stop] @ x.T)
    np.maximum(d2, 0.0, out=d2)
    scale = sq[:, None] + sq[None, :]
    rows, cols = np.nonzero(np.triu(d2 <= 1e-8 * scale, k=1))
    for start in range(0, rows.size, 4096):
        r, c = rows[start:start + 4096], cols[start:start + 4096]
        diff = x[r] - x[c]
        d2[r, c] = np.einsum("ij,ij->i", diff, diff)
    d = np.sqrt(d2)
    upper = np.triu(d, k=1)
    return upper + upper.T


def _stack(descriptors: Sequence) -> tuple[type, np.ndarray]:
    kinds = {type(d) for d in descriptors}
    if len(kinds) != 1:
        raise MixedDescriptorKinds(f"descriptors of several kinds: {sorted(k.__name__ for k in kinds)}")
    (kind,) = kinds
    if kind is GaussianSummary:
        return kind, np.array([[d.mu, d.sigma] for d in descriptors], dtype=np.float64)
    if kind in (LatentVector, ScdaDescriptor):
        dims = {d.values.shape for d in descriptors}
        if len(dims) != 1:
            raise LengthMismatch(f"descriptor lengths differ: {sorted(dims)}")
        return kind, np.stack([d.values for d in descriptors]).astype(np.float64)
    # plain arrays are accepted as feature vectors
    arr = np.asarray(descriptors, dtype=np.float64)
    if arr.ndim != 2:
        raise LengthMismatch("raw descriptors must form an n x d array")
    return np.ndarray, arr


def distance_matrix(descriptors: Sequence, metric: Metric | str) -> DistanceMatrix:
    metric = Metric(metric)
    if len(descriptors) < 1:
        raise ValueError("need at least one descriptor")
    kind, x = _stack(list(descriptors))
    if metric is Metric.UNIVARIATE_WASSERSTEIN:
        if kind is not GaussianSummary:
            raise MixedDescriptorKinds("univariate Wasserstein needs GaussianSummary descriptors")
        # the closed form is the Euclidean distance between (mu, sigma) pairs
        values = pairwise_l2(x)
    elif metric is Metric.L2:
        if kind is GaussianSummary:
            raise MixedDescriptorKinds("use the univariate Wasserstein metric for Gaussian summaries")
        values = pairwise_l2(x)
    else:
        raise ValueError("blended matrices come from blended_matrix()")
    return DistanceMatrix(values, metric)


def blended_matrix(feature_d: DistanceMatrix, lam: float) -> DistanceMatrix:
    """Convex blend of max-normalised feature distances and temporal distance."""
    if not 0.0 <= lam <= 1.0 or math.isnan(lam):
        raise InvalidLambda(f"lambda must lie in [0, 1], got {lam}")
    f = feature_d.values.astype(np.float64)
    peak = f.max() if f.size else 0.0  # diagonal is 0 so max is the off-diagonal max
    norm = f / peak if peak > 0 else np.zeros_like(f)
    blended = (1.0 - lam) * norm + lam * temporal_matrix(feature_d.n)
    return DistanceMatrix(blended, Metric.BLENDED, lam)


MAGIC = b"VSDM"
_DTYPE_CODES = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}


def dump_matrix(dm: DistanceMatrix, path) -> None:
    """Write ``magic, n, dtype`` then the row-major lower triangle (diagonal included)."""
    v = dm.values
    rows, cols = np.tril_indices(dm.n)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QB", dm.n, _DTYPE_CODES[v.dtype]))
        fh.write(v[rows, cols].astype(v.dtype.newbyteorder("<")).tobytes())


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path} is not a distance matrix dump")
        n, code = struct.unpack("<QB", fh.read(9))
        dtype = {c: d for d, c in _DTYPE_CODES.items()}[code].newbyteorder("<")
        tri = np.frombuffer(fh.read(), dtype=dtype)
    out = np.zeros((n, n), dtype=dtype.newbyteorder("="))
    rows, cols = np.tril_indices(n)
    out[rows, cols] = tri
    out[cols, rows] = tri
    return out
