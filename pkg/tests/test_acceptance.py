"""Acceptance gate: every criterion at its stated tolerance.

Each test prints (and records for the terminal summary) one pass/fail
line. The full-scale pipeline fixture is shared by the criteria that need
real trajectories; the JIT warmup in conftest keeps one-time compilation
out of the timed sections.
"""

import time
from dataclasses import dataclass

import numpy as np
import pytest

from trajmatch.analysis import compare_run, pairwise_similarity
from trajmatch.cli import main as cli_main
from trajmatch.cluster import to_dissimilarity, ward_cluster
from trajmatch.crossmatch import (
    LabeledSample,
    _null_pmf_cached,
    crossmatch_test,
    null_pmf,
)
from trajmatch.matching import (
    DistanceMatrix,
    brute_force_matching,
    build_distance_matrix,
    min_weight_perfect_matching,
)
from trajmatch.portfolio import PROBLEM_IDS, RunConfig, default_portfolio, run_suite
from trajmatch.trajectory import Population, Trajectory


@dataclass
class PipelineResult:
    store: object
    per_dim: dict
    overall: object
    comparisons: list
    dendrogram: object
    elapsed: float


@pytest.fixture(scope="session")
def pipeline() -> PipelineResult:
    # Reference configuration: 6 problems x dims {2, 5} x 5 runs, population
    # 50, budget 500 * dimension, neutral tie handling, alpha 0.05.
    start = time.perf_counter()
    config = RunConfig(budget_factor=500, runs=5, dimensions=(2, 5), base_seed=0)
    store = run_suite(default_portfolio(n_pop=50), list(PROBLEM_IDS), config)
    per_dim, overall, comparisons = pairwise_similarity(
        store, alpha=0.05, tie_mode="neutral", include_fitness=False, threads=4
    )
    dendrogram = ward_cluster(to_dissimilarity(overall))
    elapsed = time.perf_counter() - start
    return PipelineResult(store, per_dim, overall, comparisons, dendrogram, elapsed)


def test_criterion_1_null_distribution_correctness(acceptance):
    _null_pmf_cached.cache_clear()
    start = time.perf_counter()
    worst_sum = 0.0
    worst_exp = 0.0
    for m in range(2, 61):
        dist = null_pmf(m, m)
        worst_sum = max(worst_sum, abs(sum(dist.pmf.values()) - 1.0))
        worst_exp = max(
            worst_exp, abs(dist.expectation() - m * m / (2 * m - 1))
        )
    elapsed = time.perf_counter() - start
    acceptance.check(
        1,
        "null pmf sums to 1 and matches m*n/(N-1) expectation for m=n in 2..60",
        worst_sum < 1e-9 and worst_exp < 1e-9 and elapsed < 1.0,
        f"max |sum-1|={worst_sum:.2e}, max |E-mn/(N-1)|={worst_exp:.2e}, "
        f"{elapsed:.2f}s",
    )


def test_criterion_2_enumerated_baseline(acceptance):
    dist = null_pmf(2, 2)
    err = max(abs(dist.pmf[0] - 1 / 3), abs(dist.pmf[2] - 2 / 3))
    acceptance.check(
        2,
        "null_pmf(2,2) equals the enumerated {0: 1/3, 2: 2/3}",
        dist.support() == (0, 2) and err < 1e-12,
        f"max error {err:.2e}",
    )


def test_criterion_3_matching_oracle_equivalence(acceptance):
    rng = np.random.default_rng(20240817)
    start = time.perf_counter()
    checked = 0
    exact = True
    for n in (4, 6, 8, 10):
        for rep in range(100):
            kind = ("euclidean", "uniform", "ties")[rep % 3]
            if kind == "euclidean":
                pts = rng.uniform(-5, 5, (n, 2))
                dist = build_distance_matrix(pts)
            elif kind == "uniform":
                a = np.triu(rng.uniform(0, 1, (n, n)), 1)
                dist = DistanceMatrix(a + a.T)
            else:
                a = np.triu(rng.choice([0.0, 1.0, 2.0], (n, n)), 1)
                dist = DistanceMatrix(a + a.T)
            fast = min_weight_perfect_matching(dist)
            slow = brute_force_matching(dist)
            exact = exact and fast.total_weight == slow.total_weight
            checked += 1
    elapsed = time.perf_counter() - start
    acceptance.check(
        3,
        "solver weight equals brute-force weight exactly on 100 instances "
        "per n in {4,6,8,10}",
        exact and checked == 400 and elapsed < 10.0,
        f"{checked} instances, {elapsed:.1f}s",
    )


def test_criterion_4_type_one_calibration(acceptance):
    rng = np.random.default_rng(555)
    start = time.perf_counter()
    rejections = 0
    trials = 500
    for _ in range(trials):
        sample = LabeledSample(
            rng.uniform(0, 1, (50, 2)), rng.uniform(0, 1, (50, 2))
        )
        if crossmatch_test(sample).p_value < 0.05:
            rejections += 1
    rate = rejections / trials
    elapsed = time.perf_counter() - start
    acceptance.check(
        4,
        "type-I rejection rate at alpha=0.05 stays <= 0.08 for identical "
        "2-d uniforms (m=n=50, 500 trials)",
        rate <= 0.08 and elapsed < 120.0,
        f"rate {rate:.3f}, {elapsed:.1f}s",
    )


def test_criterion_5_power_under_mean_shift(acceptance):
    rng = np.random.default_rng(777)
    rejections = 0
    trials = 200
    for _ in range(trials):
        sample = LabeledSample(
            rng.normal(0.0, 1.0, (50, 2)), rng.normal(2.0, 1.0, (50, 2))
        )
        if crossmatch_test(sample).p_value < 0.05:
            rejections += 1
    rate = rejections / trials
    acceptance.check(
        5,
        "rejection rate >= 0.9 for 2-d normals shifted by 2.0 per "
        "coordinate (m=n=50, 200 trials)",
        rate >= 0.9,
        f"rate {rate:.3f}",
    )


def test_criterion_6_statistic_bound(acceptance, pipeline):
    max_a1 = max(
        outcome.a1
        for comparison in pipeline.comparisons
        for outcome in comparison.per_iteration
    )
    count = sum(len(c.per_iteration) for c in pipeline.comparisons)
    acceptance.check(
        6,
        "every crossmatch count in the full pipeline stays <= 50 at "
        "population 50",
        max_a1 <= 50,
        f"max a1 {max_a1} over {count} tests",
    )


def test_criterion_7_identity_similarity(acceptance, pipeline):
    worst = 1.0
    checked = 0
    for traj in pipeline.store:
        if traj.algorithm_id != "de_rand_1_bin":
            continue
        comparison = compare_run(traj, traj, alpha=0.05, tie_mode="prefer_cross")
        worst = min(worst, comparison.similarity)
        checked += 1
    acceptance.check(
        7,
        "self-comparison under prefer_cross yields similarity 1.0 on every "
        "(problem, dimension, run)",
        worst == 1.0 and checked == len(PROBLEM_IDS) * 2 * 5,
        f"{checked} self-comparisons, min similarity {worst}",
    )


def test_criterion_8_qualitative_reproduction(acceptance, pipeline):
    de_sade = pipeline.overall.entry("de_rand_1_bin", "sade")
    de_ga = pipeline.overall.entry("de_rand_1_bin", "ga")
    join_de_sade = pipeline.dendrogram.join_step("de_rand_1_bin", "sade")
    join_de_ga = pipeline.dendrogram.join_step("de_rand_1_bin", "ga")
    join_sade_ga = pipeline.dendrogram.join_step("sade", "ga")
    ordering = de_sade > de_ga
    tree = join_de_sade < join_de_ga and join_de_sade < join_sade_ga
    acceptance.check(
        8,
        "full suite: similarity(DE, SADE) > similarity(DE, GA) and the "
        "dendrogram joins DE with SADE before either joins GA",
        ordering and tree and pipeline.elapsed < 900.0,
        f"sim(DE,SADE)={de_sade:.3f}, sim(DE,GA)={de_ga:.3f}, "
        f"joins=({join_de_sade},{join_de_ga},{join_sade_ga}), "
        f"pipeline {pipeline.elapsed:.0f}s",
    )


def _clustered_pair(n_pop: int, iterations: int):
    rng = np.random.default_rng(31337)
    pops_a, pops_b = [], []
    for i in range(iterations):
        xa = np.array([-3.0, 0.0]) + rng.normal(0, 0.01, (n_pop, 2))
        xb = np.array([3.0, 0.0]) + rng.normal(0, 0.01, (n_pop, 2))
        pops_a.append(Population(iteration=i, solutions=xa, fitness=np.zeros(n_pop)))
        pops_b.append(Population(iteration=i, solutions=xb, fitness=np.zeros(n_pop)))
    return (
        Trajectory("a", "p", 2, 0, tuple(pops_a)),
        Trajectory("b", "p", 2, 0, tuple(pops_b)),
    )


def test_criterion_9_bonferroni_arithmetic(acceptance):
    # Separated clusters force a1 = 0. At n_pop = 8 the exact p-value
    # 7/1287 ~ 0.00544 sits between 0.05/20 = 0.0025 and 0.05, so all 20
    # iterations must survive the corrected threshold; at n_pop = 10 the
    # p-value 63/46189 ~ 0.00136 falls below it and all must reject.
    threshold_ok = abs(0.05 / 20 - 0.0025) < 1e-15
    p_above = null_pmf(8, 8).lower_tail(0)
    p_below = null_pmf(10, 10).lower_tail(0)
    straddle = 0.0025 < p_above < 0.05 and p_below < 0.0025

    ta, tb = _clustered_pair(8, 20)
    kept = compare_run(ta, tb, alpha=0.05)
    ta, tb = _clustered_pair(10, 20)
    rejected = compare_run(ta, tb, alpha=0.05)
    behavior = (
        not any(o.rejected for o in kept.per_iteration)
        and kept.similarity == 1.0
        and all(o.rejected for o in rejected.per_iteration)
        and rejected.similarity == 0.0
    )
    acceptance.check(
        9,
        "alpha=0.05 with I=20 applies the 0.0025 per-iteration threshold "
        "(fixture p-values straddle it)",
        threshold_ok and straddle and behavior,
        f"p_above={p_above:.5f} kept, p_below={p_below:.5f} rejected",
    )


def test_criterion_10_pipeline_determinism(acceptance, tmp_path):
    def chain(label: str, threads: str):
        base = tmp_path / label
        base.mkdir()
        source = base / "t.csv"
        matrix = base / "matrix.csv"
        series = base / "series.csv"
        tree = base / "tree.nwk"
        assert cli_main([
            "generate",
            "--algorithms", "de_rand_1_bin,sade,ga",
            "--problems", "sphere,rastrigin",
            "--dims", "2,5",
            "--runs", "2",
            "--pop", "20",
            "--budget-factor", "100",
            "--seed", "42",
            "--out", str(source),
        ]) == 0
        assert cli_main([
            "compare",
            "--in", str(source),
            "--threads", threads,
            "--out-matrix", str(matrix),
            "--out-series", str(series),
        ]) == 0
        assert cli_main([
            "cluster", "--in", str(matrix), "--out", str(tree),
        ]) == 0
        return matrix.read_bytes(), series.read_bytes(), tree.read_bytes()

    first = chain("run1", "1")
    second = chain("run2", "1")
    threaded = chain("run8", "8")
    acceptance.check(
        10,
        "generate/compare/cluster artifacts are byte-identical across "
        "reruns and across --threads 1 vs 8",
        first == second == threaded,
        "matrix, series and dendrogram files compared",
    )
