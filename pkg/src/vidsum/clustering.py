"""Deterministic k-medoids (PAM) on a precomputed distance matrix."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InstanceTooLarge, KTooLarge
from .metrics import DistanceMatrix

MAX_PASSES = 100
BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True, eq=False)
class Clustering:
    medoids: tuple[int, ...]
    labels: np.ndarray = field(repr=False)
    cost: float
    passes: int = 0

    @property
    def k(self) -> int:
        return len(self.medoids)


def _as_array(D) -> np.ndarray:
    values = D.values if isinstance(D, DistanceMatrix) else D
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"distance matrix must be square, got {values.shape}")
    return values


def _check_k(n: int, k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the number of points n={n}")


def assign(D, medoids) -> Clustering:
    """Label every point with its nearest medoid (lowest cluster id on ties)."""
    d = _as_array(D)
    medoids = tuple(sorted(int(m) for m in medoids))
    to_medoid = d[:, medoids]
    labels = np.argmin(to_medoid, axis=1)
    # a medoid at distance 0 from a lower medoid still owns its own cluster
    labels[list(medoids)] = np.arange(len(medoids))
    cost = float(to_medoid[np.arange(d.shape[0]), labels].sum())
    return Clustering(medoids, labels, cost)


def _build(d: np.ndarray, k: int, block: int = 512) -> list[int]:
    """Greedy seeding: start from the most central point, then repeatedly add the
    point that most reduces the distance of the *other* points to their nearest
    medoid. Leaving out the candidate's own term keeps isolated outliers from
    being picked just because they are far from everything.
    """
    n = d.shape[0]
    first = int(np.argmin(d.sum(axis=1)))
    medoids = [first]
    nearest = d[first].copy()
    for _ in range(k - 1):
        gain = np.empty(n)
        for start in range(0, n, block):
            stop = min(start + block, n)
            gain[start:stop] = np.maximum(nearest - d[start:stop], 0.0).sum(axis=1)
        gain -= nearest  # each candidate's own term, max(nearest_i - 0, 0)
        gain[medoids] = -np.inf
        chosen = int(np.argmax(gain))
        medoids.append(chosen)
        np.minimum(nearest, d[chosen], out=nearest)
    return sorted(medoids)


def _best_swap(d: np.ndarray, medoids: list[int], block: int = 512) -> tuple[float, int, int]:
    """Cost change of the best single swap as (delta, medoid slot, candidate).

    Candidates are ranked by delta, then by medoid position, then candidate
    index, so the choice does not depend on evaluation order.
    """
    n = d.shape[0]
    k = len(medoids)
    to_medoid = d[:, medoids]
    owner = np.argmin(to_medoid, axis=1)
    nearest = to_medoid[np.arange(n), owner]
    if k > 1:
        second = np.partition(to_medoid, 1, axis=1)[:, 1]
    else:
        second = np.full(n, np.inf)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), owner] = 1.0

    delta = np.empty((k, n))
    for start in range(0, n, block):
        dh = d[start:start + block]
        keep_owner = np.minimum(dh, nearest)
        base = (keep_owner - nearest).sum(axis=1)
        # points of the removed cluster fall back to their second medoid
        lost = np.minimum(dh, second) - keep_owner
        delta[:, start:start + block] = (base[:, None] + lost @ onehot).T
    delta[:, medoids] = np.inf
    slot, cand = np.unravel_index(int(np.argmin(delta)), delta.shape)
    return float(delta[slot, cand]), int(slot), int(cand)


def _pam(d: np.ndarray, k: int, max_passes: int) -> tuple[list[int], int]:
    n = d.shape[0]
    if k == n:
        return list(range(n)), 0
    medoids = _build(d, k)
    passes = 0
    while passes < max_passes:
        cost = float(d[:, medoids].min(axis=1).sum())
        delta, slot, cand = _best_swap(d, medoids)
        if not delta < -1e-10 * (1.0 + cost):
            break
        medoids[slot] = cand
        medoids.sort()
        passes += 1
    return medoids, passes


def kmedoids(D, k: int, max_passes: int = MAX_PASSES, seed: int | None = None) -> Clustering:
    """PAM: greedy BUILD, then best-improvement SWAP passes until no swap helps.

    Without ``seed`` the result is fully deterministic, ties going to the lowest
    index. A seed relabels the points at random before running, which only
    changes how ties are broken.
    """
    d = _as_array(D)
    n = d.shape[0]
    _check_k(n, k)
    if seed is None:
        medoids, passes = _pam(d, k, max_passes)
    else:
        perm = np.random.default_rng(seed).permutation(n)
        found, passes = _pam(d[np.ix_(perm, perm)], k, max_passes)
        medoids = [int(perm[m]) for m in found]
    result = assign(d, medoids)
    return Clustering(result.medoids, result.labels, result.cost, passes)


def brute_force_kmedoids(D, k: int) -> Clustering:
    """Exact k-medoids by enumerating every medoid set; first set wins ties."""
    d = _as_array(D)
    n = d.shape[0]
    _check_k(n, k)
    if math.comb(n, k) > BRUTE_FORCE_LIMIT:
        raise InstanceTooLarge(f"C({n}, {k}) = {math.comb(n, k)} medoid sets is too many")
    best_cost, best = np.inf, None
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = np.array(list(itertools.islice(combos, 20000)), dtype=np.intp)
        if chunk.size == 0:
            break
        costs = d[:, chunk].min(axis=2).sum(axis=0)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best_cost, best = costs[i], chunk[i]
    return assign(d, best)
