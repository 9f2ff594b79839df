"""Agglomerative Ward clustering of algorithms from similarity scores.

Similarity converts to dissimilarity as ``1 - s`` (bounded, zero for
identical behavior). Clustering then merges, at every step, the pair of
clusters with the smallest current distance and updates distances to the
merged cluster with the Ward variance-minimization rule applied directly
to the precomputed dissimilarity:

    d(ij,k)^2 = [(n_i+n_k) d(i,k)^2 + (n_j+n_k) d(j,k)^2 - n_k d(i,j)^2]
                / (n_i + n_j + n_k)

Ties are broken by the lexicographically smallest node-id pair. Leaves
are numbered 0..A-1 in input order; merged nodes continue from A.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .analysis import SimilarityMatrix
from .errors import InputError

EXPORT_FORMATS = ("newick", "json", "svg")

_LINKAGES = ("ward", "complete", "average")


@dataclass(frozen=True)
class Dissimilarity:
    """Symmetric algorithm-by-algorithm distances with zero diagonal."""

    algorithms: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        k = len(self.algorithms)
        if values.shape != (k, k):
            raise InputError(f"shape {values.shape} does not fit {k} algorithms")
        if not np.array_equal(values, values.T):
            raise InputError("dissimilarity must be symmetric")
        if np.any(np.diagonal(values) != 0.0):
            raise InputError("dissimilarity diagonal must be zero")
        if np.any(values < 0) or np.any(values > 1):
            raise InputError("dissimilarity entries must lie in [0, 1]")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class Merge:
    node_a: int
    node_b: int
    height: float
    new_node_id: int


@dataclass(frozen=True)
class Dendrogram:
    """Binary merge tree; leaf node i carries algorithm id leaves[i]."""

    leaves: tuple[str, ...]
    merges: tuple[Merge, ...]

    def __post_init__(self):
        if len(self.merges) != len(self.leaves) - 1:
            raise InputError(
                f"{len(self.leaves)} leaves need {len(self.leaves) - 1} merges, "
                f"got {len(self.merges)}"
            )
        object.__setattr__(self, "leaves", tuple(self.leaves))
        object.__setattr__(self, "merges", tuple(self.merges))

    def members(self, node_id: int) -> frozenset[str]:
        """Algorithm ids contained in the subtree rooted at node_id."""
        n = len(self.leaves)
        if node_id < n:
            return frozenset({self.leaves[node_id]})
        merge = self.merges[node_id - n]
        return self.members(merge.node_a) | self.members(merge.node_b)

    def join_step(self, a: str, b: str) -> int:
        """Index of the merge that first puts algorithms a and b together."""
        for step, merge in enumerate(self.merges):
            left = self.members(merge.node_a)
            right = self.members(merge.node_b)
            if (a in left and b in right) or (a in right and b in left):
                return step
        raise InputError(f"algorithms {a!r} and {b!r} never join")


def to_dissimilarity(matrix: SimilarityMatrix) -> Dissimilarity:
    """Distance = 1 - similarity, entrywise."""
    values = 1.0 - matrix.values
    np.fill_diagonal(values, 0.0)
    return Dissimilarity(algorithms=matrix.algorithms, values=values)


def _lance_williams_ward(d2, sizes, i, j, k):
    n_i, n_j, n_k = sizes[i], sizes[j], sizes[k]
    total = n_i + n_j + n_k
    return (
        (n_i + n_k) * d2[i, k] + (n_j + n_k) * d2[j, k] - n_k * d2[i, j]
    ) / total


def ward_cluster(dis: Dissimilarity, linkage: str = "ward") -> Dendrogram:
    """Agglomerate all algorithms into a dendrogram.

    The default Ward linkage is the supported analysis path; "complete"
    and "average" are experimental alternatives for exploration only.
    """
    if linkage not in _LINKAGES:
        raise InputError(f"unknown linkage {linkage!r}, expected one of {_LINKAGES}")
    n = len(dis.algorithms)
    if n < 2:
        raise InputError(f"need at least 2 algorithms to cluster, got {n}")

    # Work on squared distances for the Ward update; plain distances for
    # the experimental linkages.
    squared = linkage == "ward"
    size = 2 * n - 1
    d = np.full((size, size), np.inf)
    block = dis.values**2 if squared else dis.values.copy()
    d[:n, :n] = block
    sizes = np.zeros(size, dtype=int)
    sizes[:n] = 1
    active = list(range(n))
    merges = []
    next_id = n
    for _ in range(n - 1):
        best = None
        best_pair = None
        for ai in range(len(active)):
            for aj in range(ai + 1, len(active)):
                i, j = active[ai], active[aj]
                val = d[i, j]
                if best is None or val < best or (val == best and (i, j) < best_pair):
                    best = val
                    best_pair = (i, j)
        i, j = best_pair
        height = math.sqrt(max(best, 0.0)) if squared else best
        new = next_id
        next_id += 1
        for k in active:
            if k == i or k == j:
                continue
            if linkage == "ward":
                updated = _lance_williams_ward(d, sizes, i, j, k)
            elif linkage == "complete":
                updated = max(d[i, k], d[j, k])
            else:
                updated = (sizes[i] * d[i, k] + sizes[j] * d[j, k]) / (
                    sizes[i] + sizes[j]
                )
            d[new, k] = d[k, new] = updated
        sizes[new] = sizes[i] + sizes[j]
        active = [k for k in active if k not in (i, j)] + [new]
        merges.append(Merge(node_a=i, node_b=j, height=height, new_node_id=new))

    heights = [m.height for m in merges]
    if any(b < a - 1e-12 for a, b in zip(heights, heights[1:])):
        raise RuntimeError(
            f"non-monotone merge heights {heights}; this cannot happen with "
            f"Ward linkage on a valid dissimilarity"
        )
    return Dendrogram(leaves=dis.algorithms, merges=tuple(merges))


# ---------------------------------------------------------------------------
# export


def export_dendrogram(dendrogram: Dendrogram, format: str) -> str:
    """Render a dendrogram as newick, json, or a standalone svg document."""
    if format == "newick":
        return _to_newick(dendrogram)
    if format == "json":
        return _to_json(dendrogram)
    if format == "svg":
        return _to_svg(dendrogram)
    raise InputError(f"unknown format {format!r}, expected one of {EXPORT_FORMATS}")


def _node_heights(dendrogram: Dendrogram) -> dict[int, float]:
    heights = {i: 0.0 for i in range(len(dendrogram.leaves))}
    for merge in dendrogram.merges:
        heights[merge.new_node_id] = merge.height
    return heights


def _to_newick(dendrogram: Dendrogram) -> str:
    heights = _node_heights(dendrogram)
    n = len(dendrogram.leaves)

    def render(node_id: int, parent_height: float) -> str:
        length = parent_height - heights[node_id]
        if node_id < n:
            return f"{dendrogram.leaves[node_id]}:{length:g}"
        merge = dendrogram.merges[node_id - n]
        left = render(merge.node_a, merge.height)
        right = render(merge.node_b, merge.height)
        return f"({left},{right}):{length:g}"

    root = dendrogram.merges[-1]
    left = render(root.node_a, root.height)
    right = render(root.node_b, root.height)
    return f"({left},{right});"


def _to_json(dendrogram: Dendrogram) -> str:
    payload = {
        "leaves": list(dendrogram.leaves),
        "merges": [
            [m.node_a, m.node_b, m.height, m.new_node_id] for m in dendrogram.merges
        ],
    }
    return json.dumps(payload, indent=1) + "\n"


def dendrogram_from_json(text: str) -> Dendrogram:
    try:
        payload = json.loads(text)
        leaves = tuple(str(x) for x in payload["leaves"])
        merges = tuple(
            Merge(
                node_a=int(a), node_b=int(b), height=float(h), new_node_id=int(new)
            )
            for a, b, h, new in payload["merges"]
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"invalid dendrogram JSON: {exc}") from exc
    return Dendrogram(leaves=leaves, merges=merges)


def _to_svg(dendrogram: Dendrogram, width: int = 640, row_height: int = 22) -> str:
    """Static left-to-right dendrogram; one text label per leaf."""
    n = len(dendrogram.leaves)
    heights = _node_heights(dendrogram)
    max_height = max(heights.values()) or 1.0
    margin = 8
    label_width = 10 + 7 * max(len(name) for name in dendrogram.leaves)
    plot_width = width - label_width - 2 * margin

    # Leaf order follows the tree so branches never cross.
    order: list[int] = []

    def collect(node_id: int) -> None:
        if node_id < n:
            order.append(node_id)
            return
        merge = dendrogram.merges[node_id - n]
        collect(merge.node_a)
        collect(merge.node_b)

    collect(dendrogram.merges[-1].new_node_id)
    y_pos = {
        node: margin + row_height // 2 + row * row_height
        for row, node in enumerate(order)
    }
    total_height = 2 * margin + row_height * n

    def x_of(height: float) -> float:
        return margin + plot_width * (1.0 - height / max_height)

    lines = []
    for merge in dendrogram.merges:
        xa = x_of(heights[merge.node_a])
        xb = x_of(heights[merge.node_b])
        xm = x_of(merge.height)
        ya, yb = y_pos[merge.node_a], y_pos[merge.node_b]
        lines.append(
            f'<path d="M {xa:.2f} {ya:.2f} H {xm:.2f} V {yb:.2f} H {xb:.2f}" '
            f'fill="none" stroke="#333" stroke-width="1.2"/>'
        )
        y_pos[merge.new_node_id] = (ya + yb) / 2.0

    labels = [
        f'<text x="{margin + plot_width + 6:.2f}" y="{y_pos[i] + 4:.2f}" '
        f'font-family="monospace" font-size="12">{dendrogram.leaves[i]}</text>'
        for i in order
    ]
    body = "\n".join(lines + labels)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{total_height}" viewBox="0 0 {width} {total_height}">\n'
        f"{body}\n</svg>\n"
    )
