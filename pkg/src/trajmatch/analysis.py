"""Pairwise trajectory comparison and similarity aggregation.

For two algorithms on the same problem instance, run, and iteration, the
two populations are compared with the crossmatch test on their scaled
feature vectors. Within one run of I iterations the significance level is
Bonferroni-corrected to alpha / I. The similarity of a pair on one run is
the fraction of iterations where the test does not reject; similarities
are averaged over problems and runs per dimension, and the overall score
averages the per-dimension means.

The (pair, problem, run) comparison grid is embarrassingly parallel; a
thread pool can work through it in any order because results are reduced
in a fixed deterministic order afterwards.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable

import numpy as np

from .crossmatch import LabeledSample, crossmatch_statistic, crossmatch_test
from .errors import InputError
from .trajectory import (
    Trajectory,
    TrajectoryStore,
    apply_scaling,
    compute_scaling,
    feature_vectors,
)

SERIES_COLUMNS = (
    "algorithm_a",
    "algorithm_b",
    "problem",
    "dim",
    "run",
    "iteration",
    "a1",
    "p_value",
    "rejected",
)


@dataclass(frozen=True)
class IterationOutcome:
    iteration: int
    a1: int
    p_value: float
    rejected: bool


@dataclass(frozen=True)
class RunComparison:
    """Per-iteration test outcomes of one algorithm pair on one run."""

    algorithm_a: str
    algorithm_b: str
    problem_id: str
    dimension: int
    run: int
    per_iteration: tuple[IterationOutcome, ...]

    @property
    def similarity(self) -> float:
        kept = sum(1 for o in self.per_iteration if not o.rejected)
        return kept / len(self.per_iteration)


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric algorithm-by-algorithm similarity with unit diagonal."""

    algorithms: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        k = len(self.algorithms)
        if values.shape != (k, k):
            raise InputError(
                f"matrix shape {values.shape} does not fit {k} algorithms"
            )
        if not np.allclose(values, values.T, atol=0, rtol=0, equal_nan=False):
            raise InputError("similarity matrix must be symmetric")
        if np.any(values < 0) or np.any(values > 1):
            raise InputError("similarity entries must lie in [0, 1]")
        if np.any(np.diagonal(values) != 1.0):
            raise InputError("similarity diagonal must be exactly 1")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "values", values)

    def entry(self, a: str, b: str) -> float:
        try:
            i = self.algorithms.index(a)
            j = self.algorithms.index(b)
        except ValueError as exc:
            raise InputError(f"unknown algorithm id: {exc}") from None
        return float(self.values[i, j])


def _check_comparable(ta: Trajectory, tb: Trajectory) -> None:
    if (ta.problem_id, ta.dimension, ta.run) != (tb.problem_id, tb.dimension, tb.run):
        raise InputError(
            f"trajectories are not aligned: {ta.key} vs {tb.key} "
            f"(problem, dimension and run must match)"
        )
    if ta.n_pop != tb.n_pop:
        raise InputError(
            f"population sizes differ: {ta.n_pop} vs {tb.n_pop} for {ta.key}/{tb.key}"
        )
    if ta.n_iterations != tb.n_iterations:
        raise InputError(
            f"iteration counts differ: {ta.n_iterations} vs {tb.n_iterations} "
            f"for {ta.key}/{tb.key}; the protocol fixes budget and population, "
            f"so this indicates inconsistent data"
        )


def compare_run(
    ta: Trajectory,
    tb: Trajectory,
    alpha: float = 0.05,
    tie_mode: str = "neutral",
    include_fitness: bool = False,
) -> RunComparison:
    """Crossmatch-test two aligned (already scaled) trajectories per iteration.

    An iteration counts as rejected when its p-value falls below
    alpha / I, where I is the iteration count of the run.
    """
    _check_comparable(ta, tb)
    if not 0 < alpha <= 1:
        raise InputError(f"alpha must lie in (0, 1], got {alpha}")
    iterations = ta.n_iterations
    threshold = alpha / iterations
    outcomes = []
    for pa, pb in zip(ta.populations, tb.populations):
        sample = LabeledSample(
            feature_vectors(pa, include_fitness),
            feature_vectors(pb, include_fitness),
        )
        result = crossmatch_test(sample, tie_mode=tie_mode)
        outcomes.append(
            IterationOutcome(
                iteration=pa.iteration,
                a1=result.a1,
                p_value=result.p_value,
                rejected=result.p_value < threshold,
            )
        )
    return RunComparison(
        algorithm_a=ta.algorithm_id,
        algorithm_b=tb.algorithm_id,
        problem_id=ta.problem_id,
        dimension=ta.dimension,
        run=ta.run,
        per_iteration=tuple(outcomes),
    )


def statistic_series(
    ta: Trajectory,
    tb: Trajectory,
    tie_mode: str = "neutral",
    include_fitness: bool = False,
) -> list[tuple[int, int]]:
    """Per-iteration crossmatch counts of one pair, for plotting/export."""
    _check_comparable(ta, tb)
    series = []
    for pa, pb in zip(ta.populations, tb.populations):
        sample = LabeledSample(
            feature_vectors(pa, include_fitness),
            feature_vectors(pb, include_fitness),
        )
        a1, _, _, _ = crossmatch_statistic(sample, tie_mode=tie_mode)
        series.append((pa.iteration, a1))
    return series


def scale_store(store: TrajectoryStore) -> dict[tuple[str, str, int, int], Trajectory]:
    """Scale every trajectory with its problem instance's pooled extrema."""
    params = {
        (problem, dim): compute_scaling(store, problem, dim)
        for problem in store.problems
        for dim in store.dimensions
        if any(t.problem_id == problem and t.dimension == dim for t in store)
    }
    return {
        traj.key: apply_scaling(traj, params[(traj.problem_id, traj.dimension)])
        for traj in store
    }


def pairwise_similarity(
    store: TrajectoryStore,
    alpha: float = 0.05,
    tie_mode: str = "neutral",
    include_fitness: bool = False,
    threads: int = 1,
) -> tuple[dict[int, SimilarityMatrix], SimilarityMatrix, list[RunComparison]]:
    """Similarity matrices per dimension plus their overall mean.

    Returns ``(per_dimension, overall, comparisons)``; the comparison list
    carries every per-iteration outcome for series export. Output does not
    depend on the thread count.
    """
    algorithms = store.algorithms
    if len(algorithms) < 2:
        raise InputError("need at least 2 algorithms to compare")
    scaled = scale_store(store)

    tasks = []
    for dim in store.dimensions:
        for problem in store.problems:
            runs = store.runs(problem, dim)
            for run in runs:
                for a, b in combinations(algorithms, 2):
                    key_a = (a, problem, dim, run)
                    key_b = (b, problem, dim, run)
                    if key_a in store and key_b in store:
                        tasks.append((dim, problem, run, a, b))

    def work(task):
        dim, problem, run, a, b = task
        return compare_run(
            scaled[(a, problem, dim, run)],
            scaled[(b, problem, dim, run)],
            alpha=alpha,
            tie_mode=tie_mode,
            include_fitness=include_fitness,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(tasks, pool.map(work, tasks)))
    else:
        results = {task: work(task) for task in tasks}

    comparisons = [results[task] for task in tasks]

    index = {a: i for i, a in enumerate(algorithms)}
    per_dimension: dict[int, SimilarityMatrix] = {}
    for dim in store.dimensions:
        sums = np.zeros((len(algorithms), len(algorithms)))
        counts = np.zeros((len(algorithms), len(algorithms)))
        for (d, _problem, _run, a, b), comparison in results.items():
            if d != dim:
                continue
            i, j = index[a], index[b]
            sums[i, j] += comparison.similarity
            counts[i, j] += 1
        upper = np.triu_indices(len(algorithms), k=1)
        if np.any(counts[upper] == 0):
            raise InputError(
                f"dimension {dim}: some algorithm pairs have no common "
                f"(problem, run) trajectories"
            )
        with np.errstate(invalid="ignore"):
            means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
        values = means + means.T
        np.fill_diagonal(values, 1.0)
        per_dimension[dim] = SimilarityMatrix(algorithms=algorithms, values=values)

    overall_values = np.mean(
        [per_dimension[d].values for d in store.dimensions], axis=0
    )
    np.fill_diagonal(overall_values, 1.0)
    overall = SimilarityMatrix(algorithms=algorithms, values=overall_values)
    return per_dimension, overall, comparisons


# ---------------------------------------------------------------------------
# delimited output


def write_similarity_csv(matrix: SimilarityMatrix, path) -> None:
    """Full symmetric matrix with a header row/column of algorithm ids."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["algorithm", *matrix.algorithms])
        for i, algorithm in enumerate(matrix.algorithms):
            writer.writerow(
                [algorithm, *(repr(float(v)) for v in matrix.values[i])]
            )


def read_similarity_csv(path) -> SimilarityMatrix:
    p = Path(path)
    if not p.exists():
        raise InputError(f"matrix file not found: {p}")
    with open(p, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0][:1] != ["algorithm"]:
        raise InputError(f"{p}: expected a similarity matrix header")
    algorithms = tuple(rows[0][1:])
    if len(rows) != len(algorithms) + 1:
        raise InputError(
            f"{p}: expected {len(algorithms)} data rows, got {len(rows) - 1}"
        )
    values = np.empty((len(algorithms), len(algorithms)))
    for i, row in enumerate(rows[1:]):
        if row[0] != algorithms[i]:
            raise InputError(
                f"{p}: row label {row[0]!r} does not match column {algorithms[i]!r}"
            )
        try:
            values[i] = [float(cell) for cell in row[1:]]
        except ValueError as exc:
            raise InputError(f"{p}: row {i + 2}: {exc}") from None
    return SimilarityMatrix(algorithms=algorithms, values=values)


def write_series_csv(comparisons: Iterable[RunComparison], path) -> None:
    """Per-iteration outcomes of every comparison, one row per test."""
    ordered = sorted(
        comparisons,
        key=lambda c: (c.algorithm_a, c.algorithm_b, c.problem_id, c.dimension, c.run),
    )
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SERIES_COLUMNS)
        for comparison in ordered:
            for outcome in comparison.per_iteration:
                writer.writerow(
                    [
                        comparison.algorithm_a,
                        comparison.algorithm_b,
                        comparison.problem_id,
                        comparison.dimension,
                        comparison.run,
                        outcome.iteration,
                        outcome.a1,
                        repr(float(outcome.p_value)),
                        int(outcome.rejected),
                    ]
                )


def read_series_csv(path) -> list[dict]:
    """Series rows as dicts with typed fields (inverse of the writer)."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"series file not found: {p}")
    with open(p, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != SERIES_COLUMNS:
            raise InputError(
                f"{p}: expected series header {','.join(SERIES_COLUMNS)}"
            )
        rows = []
        for row in reader:
            rows.append(
                {
                    "algorithm_a": row["algorithm_a"],
                    "algorithm_b": row["algorithm_b"],
                    "problem": row["problem"],
                    "dim": int(row["dim"]),
                    "run": int(row["run"]),
                    "iteration": int(row["iteration"]),
                    "a1": int(row["a1"]),
                    "p_value": float(row["p_value"]),
                    "rejected": bool(int(row["rejected"])),
                }
            )
    return rows
