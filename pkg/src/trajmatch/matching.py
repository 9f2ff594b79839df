"""Minimum-weight perfect matching over pooled point sets.

This is the combinatorial engine behind the two-sample test: the pooled
points of two populations are paired up so that the total intra-pair
distance is minimal. The solver is exact (blossom primal-dual, see
``_blossom``); a factorial-time enumeration is provided as an independent
verification oracle for small instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._blossom import min_weight_perfect_matching_pairs
from .errors import InputError

# (n-1)!! grows too fast beyond this; 12 points = 10395 pairings.
BRUTE_FORCE_MAX_POINTS = 12


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric non-negative distance matrix with a zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise InputError(f"distance matrix must be square, got shape {e.shape}")
        if not np.all(np.isfinite(e)):
            raise InputError("distance matrix contains non-finite entries")
        if np.any(e < 0):
            raise InputError("distance matrix contains negative entries")
        if np.any(np.diagonal(e) != 0):
            raise InputError("distance matrix diagonal must be zero")
        if not np.array_equal(e, e.T):
            raise InputError("distance matrix must be symmetric")
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Matching:
    """A perfect pairing of point indices and its total distance."""

    pairs: tuple[tuple[int, int], ...]
    total_weight: float

    def covers(self, n: int) -> bool:
        """True if every index in 0..n-1 appears in exactly one pair."""
        flat = [i for pair in self.pairs for i in pair]
        return sorted(flat) == list(range(n))


def build_distance_matrix(points) -> DistanceMatrix:
    """Pairwise Euclidean distances of a list/array of same-length vectors."""
    try:
        pts = np.asarray(points, dtype=float)
    except ValueError as exc:  # ragged input
        raise InputError(f"points do not form a uniform array: {exc}") from exc
    if pts.ndim != 2:
        raise InputError(
            f"points must form a 2-d array of shape (n, d), got ndim={pts.ndim}"
        )
    if pts.shape[0] < 2:
        raise InputError(f"need at least 2 points, got {pts.shape[0]}")
    if not np.all(np.isfinite(pts)):
        raise InputError("points contain non-finite coordinates")
    entries = cdist(pts, pts)
    # cdist is exactly symmetric for the euclidean metric, but the diagonal
    # may carry sqrt dust; pin it.
    np.fill_diagonal(entries, 0.0)
    return DistanceMatrix(entries)


def _as_entries(dist) -> np.ndarray:
    if isinstance(dist, DistanceMatrix):
        return dist.entries
    return DistanceMatrix(np.asarray(dist, dtype=float)).entries


def _matching_from_pairs(pairs, entries: np.ndarray) -> Matching:
    ordered = tuple(sorted((min(i, j), max(i, j)) for i, j in pairs))
    weight = float(sum(entries[i, j] for i, j in ordered))
    return Matching(pairs=ordered, total_weight=weight)


def min_weight_perfect_matching(dist) -> Matching:
    """Exact minimum-weight perfect matching of an even-size point set.

    Accepts a ``DistanceMatrix`` or a raw symmetric array. The optimum is
    global; among tied optima the result is a deterministic function of the
    entry order. Raises on odd sizes: the pipeline always compares two
    equal-size populations, so an odd pooled count indicates a data bug.
    """
    entries = _as_entries(dist)
    n = entries.shape[0]
    if n < 2:
        raise InputError(f"need at least 2 points, got {n}")
    if n % 2 != 0:
        raise InputError(f"perfect matching needs an even point count, got {n}")
    pairs = min_weight_perfect_matching_pairs(entries)
    return _matching_from_pairs(pairs, entries)


def brute_force_matching(dist) -> Matching:
    """Minimum-weight perfect matching by exhaustive enumeration.

    Walks all (n-1)!! pairings (with branch-and-bound pruning that cannot
    change the optimum) and keeps the first minimum in enumeration order.
    Refuses instances with more than ``BRUTE_FORCE_MAX_POINTS`` points.
    """
    entries = _as_entries(dist)
    n = entries.shape[0]
    if n < 2:
        raise InputError(f"need at least 2 points, got {n}")
    if n % 2 != 0:
        raise InputError(f"perfect matching needs an even point count, got {n}")
    if n > BRUTE_FORCE_MAX_POINTS:
        raise InputError(
            f"brute force enumeration refuses n={n} > {BRUTE_FORCE_MAX_POINTS}"
        )

    best_weight = np.inf
    best_pairs: list[tuple[int, int]] | None = None
    pairs: list[tuple[int, int]] = []

    def recurse(available: tuple[int, ...], acc: float) -> None:
        nonlocal best_weight, best_pairs
        if acc >= best_weight:
            return
        if not available:
            best_weight = acc
            best_pairs = list(pairs)
            return
        i = available[0]
        rest = available[1:]
        for k, j in enumerate(rest):
            pairs.append((i, j))
            recurse(rest[:k] + rest[k + 1 :], acc + entries[i, j])
            pairs.pop()

    recurse(tuple(range(n)), 0.0)
    assert best_pairs is not None
    return _matching_from_pairs(best_pairs, entries)
