"""Markdown report with rendered figures for a finished comparison.

Consumes the delimited outputs of the compare step (similarity matrix and
per-iteration series) and writes a self-contained report directory:
``report.md`` plus PNG figures (similarity heatmap, per-pair statistic
series for the top pairs, dendrogram). Output ordering is deterministic
with ties broken by algorithm ids.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from statistics import median, quantiles

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import SimilarityMatrix
from .cluster import to_dissimilarity, ward_cluster
from .errors import InputError


@dataclass(frozen=True)
class PairSummary:
    algorithm_a: str
    algorithm_b: str
    overall: float
    by_dimension: dict[int, float]
    run_similarities: list[float]


def _pair_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def summarize_pairs(
    matrix: SimilarityMatrix, series_rows: list[dict]
) -> list[PairSummary]:
    """Fold series rows into per-pair scores, ordered best-first.

    The per-run similarity is the fraction of non-rejected iterations of
    that (pair, problem, dim, run); per-dimension scores are their means.
    The overall column comes from the similarity matrix itself.
    """
    grouped: dict[tuple, dict[tuple, list[bool]]] = {}
    for row in series_rows:
        pair = _pair_key(row["algorithm_a"], row["algorithm_b"])
        run_key = (row["problem"], row["dim"], row["run"])
        grouped.setdefault(pair, {}).setdefault(run_key, []).append(row["rejected"])

    summaries = []
    for a, b in sorted(grouped):
        runs = grouped[(a, b)]
        run_sims: list[float] = []
        dim_bins: dict[int, list[float]] = {}
        for (problem, dim, run), rejections in sorted(runs.items()):
            sim = sum(1 for r in rejections if not r) / len(rejections)
            run_sims.append(sim)
            dim_bins.setdefault(dim, []).append(sim)
        by_dim = {d: sum(v) / len(v) for d, v in sorted(dim_bins.items())}
        summaries.append(
            PairSummary(
                algorithm_a=a,
                algorithm_b=b,
                overall=matrix.entry(a, b),
                by_dimension=by_dim,
                run_similarities=run_sims,
            )
        )
    summaries.sort(key=lambda s: (-s.overall, s.algorithm_a, s.algorithm_b))
    return summaries


def _plot_heatmap(matrix: SimilarityMatrix, path: Path) -> None:
    k = len(matrix.algorithms)
    fig, ax = plt.subplots(figsize=(1.0 + 0.6 * k, 0.8 + 0.6 * k))
    image = ax.imshow(matrix.values, vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(k), matrix.algorithms, rotation=45, ha="right")
    ax.set_yticks(range(k), matrix.algorithms)
    for i in range(k):
        for j in range(k):
            ax.text(
                j,
                i,
                f"{matrix.values[i, j]:.2f}",
                ha="center",
                va="center",
                fontsize=7,
                color="white" if matrix.values[i, j] < 0.6 else "black",
            )
    fig.colorbar(image, ax=ax, label="similarity")
    ax.set_title("Overall similarity")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_pair_series(pair: PairSummary, series_rows: list[dict], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 3.2))
    key = {pair.algorithm_a, pair.algorithm_b}
    dims = sorted({row["dim"] for row in series_rows})
    for dim in dims:
        per_iteration: dict[int, list[int]] = {}
        for row in series_rows:
            if {row["algorithm_a"], row["algorithm_b"]} == key and row["dim"] == dim:
                per_iteration.setdefault(row["iteration"], []).append(row["a1"])
        if not per_iteration:
            continue
        iterations = sorted(per_iteration)
        means = [np.mean(per_iteration[i]) for i in iterations]
        ax.plot(iterations, means, marker="o", markersize=2.5, label=f"d={dim}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean crossmatch count")
    ax.set_title(f"{pair.algorithm_a} vs {pair.algorithm_b}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_dendrogram(matrix: SimilarityMatrix, path: Path) -> None:
    dendrogram = ward_cluster(to_dissimilarity(matrix))
    n = len(dendrogram.leaves)
    heights = {i: 0.0 for i in range(n)}
    for merge in dendrogram.merges:
        heights[merge.new_node_id] = merge.height

    order: list[int] = []

    def collect(node_id: int) -> None:
        if node_id < n:
            order.append(node_id)
            return
        merge = dendrogram.merges[node_id - n]
        collect(merge.node_a)
        collect(merge.node_b)

    collect(dendrogram.merges[-1].new_node_id)
    y_pos = {node: float(row) for row, node in enumerate(order)}

    fig, ax = plt.subplots(figsize=(5.6, 0.6 + 0.4 * n))
    for merge in dendrogram.merges:
        xa, xb = heights[merge.node_a], heights[merge.node_b]
        ya, yb = y_pos[merge.node_a], y_pos[merge.node_b]
        xm = merge.height
        ax.plot([xa, xm, xm, xb], [ya, ya, yb, yb], color="#333366", lw=1.4)
        y_pos[merge.new_node_id] = (ya + yb) / 2.0
    ax.set_yticks([float(row) for row in range(n)])
    ax.set_yticklabels([dendrogram.leaves[node] for node in order])
    ax.set_xlabel("merge distance (1 - similarity)")
    ax.set_title("Ward clustering")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _quantile_row(values: list[float]) -> tuple[float, float, float]:
    if len(values) == 1:
        v = values[0]
        return v, v, v
    q = quantiles(values, n=4, method="inclusive")
    return q[0], median(values), q[2]


def render_report(
    matrix: SimilarityMatrix,
    series_rows: list[dict],
    out_dir,
    top_k: int = 10,
) -> list[Path]:
    """Write report.md and figures; returns every path written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    figures = out / "figures"
    figures.mkdir(exist_ok=True)
    if top_k < 1:
        raise InputError(f"top-k must be >= 1, got {top_k}")

    summaries = summarize_pairs(matrix, series_rows)
    top = summaries[:top_k]
    written = []

    heatmap = figures / "similarity_heatmap.png"
    _plot_heatmap(matrix, heatmap)
    written.append(heatmap)

    if len(matrix.algorithms) >= 2:
        dendro = figures / "dendrogram.png"
        _plot_dendrogram(matrix, dendro)
        written.append(dendro)

    series_paths = {}
    for pair in top:
        name = f"series_{pair.algorithm_a}__{pair.algorithm_b}.png"
        path = figures / name
        _plot_pair_series(pair, series_rows, path)
        series_paths[(pair.algorithm_a, pair.algorithm_b)] = path
        written.append(path)

    dims = sorted({row["dim"] for row in series_rows})
    lines = [
        "# Trajectory similarity report",
        "",
        f"Algorithms: {', '.join(matrix.algorithms)}",
        f"Dimensions: {', '.join(str(d) for d in dims)}",
        "",
        "![Overall similarity](figures/similarity_heatmap.png)",
        "",
        "![Ward clustering](figures/dendrogram.png)",
        "",
        f"## Top {len(top)} most similar pairs",
        "",
    ]
    dim_headers = "".join(f" d={d} |" for d in dims)
    lines.append(f"| rank | pair |{dim_headers} overall | series |")
    lines.append("|---|---|" + "---|" * (len(dims) + 2))
    for rank, pair in enumerate(top, start=1):
        dim_cells = "".join(
            f" {pair.by_dimension.get(d, float('nan')):.4f} |" for d in dims
        )
        rel = series_paths[(pair.algorithm_a, pair.algorithm_b)].relative_to(out)
        lines.append(
            f"| {rank} | {pair.algorithm_a} / {pair.algorithm_b} |{dim_cells}"
            f" {pair.overall:.4f} | [{rel.name}]({rel}) |"
        )

    lines += [
        "",
        "## Run-level spread (supplementary)",
        "",
        "Quartiles of per-run similarities. The aggregation protocol uses",
        "the mean only; this table is supplementary diagnostics.",
        "",
        "| pair | q25 | median | q75 | runs |",
        "|---|---|---|---|---|",
    ]
    for pair in summaries:
        q25, med, q75 = _quantile_row(pair.run_similarities)
        lines.append(
            f"| {pair.algorithm_a} / {pair.algorithm_b} | {q25:.4f} | {med:.4f} "
            f"| {q75:.4f} | {len(pair.run_similarities)} |"
        )
    lines.append("")

    report = out / "report.md"
    report.write_text("\n".join(lines), encoding="utf-8")
    written.insert(0, report)
    return written
