"""Built-in problem suite and a small portfolio of population optimizers.

Six box-constrained test functions on [-5, 5]^d stand in for a full
benchmark suite at desk scale, and five classical population-based
algorithms (random search, DE, self-adaptive DE, GA, PSO) generate
trajectories on them. All randomness flows through named, hash-derived
streams: the initial population stream is keyed by (problem, dimension,
seed) only, so every algorithm starts a run from the identical sample,
while each algorithm's internal stream is keyed by the algorithm id as
well.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import InputError
from .trajectory import Population, Trajectory, TrajectoryStore

LOWER = -5.0
UPPER = 5.0

PROBLEM_IDS = (
    "sphere",
    "ellipsoid",
    "rosenbrock",
    "rastrigin",
    "schwefel12",
    "gallagher",
)

ALGORITHM_IDS = ("random_search", "de_rand_1_bin", "sade", "ga", "pso")

DEFAULT_HYPERPARAMETERS: dict[str, dict[str, float]] = {
    "random_search": {},
    "de_rand_1_bin": {"f_weight": 0.8, "cr": 0.9},
    "sade": {"f_mean": 0.5, "f_sigma": 0.3, "cr_sigma": 0.1, "memory": 5.0},
    "ga": {"tournament": 2.0, "crossover_rate": 0.9, "mutation_sigma": 1.0},
    "pso": {"inertia": 0.729, "cognitive": 1.49445, "social": 1.49445},
}


def stable_rng(*parts) -> np.random.Generator:
    """Deterministic generator derived from a named stream key."""
    key = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    words = np.frombuffer(digest, dtype=np.uint32)
    return np.random.default_rng(np.random.SeedSequence(words.tolist()))


@dataclass(frozen=True)
class Problem:
    """Box-constrained minimization problem with a batch objective."""

    problem_id: str
    dimension: int
    objective: Callable[[np.ndarray], np.ndarray]
    lower: float = LOWER
    upper: float = UPPER

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        values = self.objective(np.atleast_2d(np.asarray(points, dtype=float)))
        return np.asarray(values, dtype=float)


@dataclass(frozen=True)
class AlgorithmSpec:
    """Algorithm choice plus hyperparameters and population size."""

    algorithm_id: str
    n_pop: int = 50
    hyperparameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm_id not in ALGORITHM_IDS:
            raise InputError(
                f"unknown algorithm {self.algorithm_id!r}, expected one of "
                f"{ALGORITHM_IDS}"
            )
        if self.n_pop < 4:
            raise InputError(
                f"population size must be >= 4 (DE variation operators need "
                f"4 members), got {self.n_pop}"
            )
        merged = dict(DEFAULT_HYPERPARAMETERS[self.algorithm_id])
        merged.update(self.hyperparameters)
        object.__setattr__(self, "hyperparameters", merged)


@dataclass(frozen=True)
class RunConfig:
    """Execution budget and repetition layout shared by all algorithms."""

    budget_factor: int = 500
    runs: int = 5
    dimensions: tuple[int, ...] = (2, 5)
    base_seed: int = 0

    def __post_init__(self):
        if self.budget_factor < 1:
            raise InputError(f"budget factor must be >= 1, got {self.budget_factor}")
        if self.runs < 1:
            raise InputError(f"runs must be >= 1, got {self.runs}")
        if not self.dimensions:
            raise InputError("at least one dimension is required")
        object.__setattr__(self, "dimensions", tuple(int(d) for d in self.dimensions))

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(self.base_seed + r for r in range(self.runs))

    def budget(self, dimension: int) -> int:
        return self.budget_factor * dimension


# ---------------------------------------------------------------------------
# problems


def _sphere(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=1)


def _rotation_matrix(dimension: int, problem_id: str) -> np.ndarray:
    rng = stable_rng("problem", problem_id, dimension)
    q, r = np.linalg.qr(rng.normal(0.0, 1.0, (dimension, dimension)))
    return q * np.sign(np.diagonal(r))


def _make_ellipsoid(dimension: int) -> Callable[[np.ndarray], np.ndarray]:
    rotation = _rotation_matrix(dimension, "ellipsoid")
    if dimension > 1:
        conditioning = 10.0 ** (6.0 * np.arange(dimension) / (dimension - 1))
    else:
        conditioning = np.ones(1)

    def objective(x: np.ndarray) -> np.ndarray:
        z = x @ rotation.T
        return np.sum(conditioning * z * z, axis=1)

    return objective


def _rosenbrock(x: np.ndarray) -> np.ndarray:
    a = x[:, :-1]
    b = x[:, 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2, axis=1)


def _rastrigin(x: np.ndarray) -> np.ndarray:
    return 10.0 * x.shape[1] + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x), axis=1)


def _schwefel12(x: np.ndarray) -> np.ndarray:
    partial = np.cumsum(x, axis=1)
    return np.sum(partial * partial, axis=1)


def _make_gallagher(dimension: int) -> Callable[[np.ndarray], np.ndarray]:
    # Multi-peak landscape: one dominant smooth peak plus ten seeded
    # distractors of varying width; global minimum 0 at the dominant center.
    rng = stable_rng("problem", "gallagher", dimension)
    n_peaks = 11
    centers = rng.uniform(LOWER * 0.98, UPPER * 0.98, (n_peaks, dimension))
    centers[0] = rng.uniform(LOWER * 0.8, UPPER * 0.8, dimension)
    heights = np.empty(n_peaks)
    heights[0] = 10.0
    heights[1:] = np.linspace(1.1, 9.1, n_peaks - 1)
    widths = rng.uniform(1.0, 10.0, n_peaks)

    def objective(x: np.ndarray) -> np.ndarray:
        sq = np.sum(
            (x[:, None, :] - centers[None, :, :]) ** 2, axis=2
        )  # (batch, peaks)
        peaked = heights[None, :] * np.exp(-sq / (2.0 * dimension * widths[None, :]))
        return (10.0 - np.max(peaked, axis=1)) ** 2

    return objective


def make_problem(problem_id: str, dimension: int) -> Problem:
    """Instantiate one built-in problem for the requested dimension."""
    if dimension < 1:
        raise InputError(f"dimension must be >= 1, got {dimension}")
    builders: dict[str, Callable[[], Callable[[np.ndarray], np.ndarray]]] = {
        "sphere": lambda: _sphere,
        "ellipsoid": lambda: _make_ellipsoid(dimension),
        "rosenbrock": lambda: _rosenbrock,
        "rastrigin": lambda: _rastrigin,
        "schwefel12": lambda: _schwefel12,
        "gallagher": lambda: _make_gallagher(dimension),
    }
    if problem_id not in builders:
        raise InputError(
            f"unknown problem {problem_id!r}, expected one of {PROBLEM_IDS}"
        )
    return Problem(
        problem_id=problem_id, dimension=dimension, objective=builders[problem_id]()
    )


def builtin_suite(dimension: int) -> list[Problem]:
    """All built-in problems instantiated on [-5, 5]^dimension."""
    return [make_problem(problem_id, dimension) for problem_id in PROBLEM_IDS]


def default_portfolio(n_pop: int = 50) -> list[AlgorithmSpec]:
    """One spec per built-in algorithm with standard-literature defaults."""
    return [AlgorithmSpec(algorithm_id=a, n_pop=n_pop) for a in ALGORITHM_IDS]


# ---------------------------------------------------------------------------
# execution


class _BudgetedObjective:
    """Counts objective evaluations and refuses to exceed the budget."""

    def __init__(self, problem: Problem, budget: int):
        self._problem = problem
        self.budget = budget
        self.calls = 0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        self.calls += points.shape[0]
        if self.calls > self.budget:
            raise RuntimeError(
                f"objective evaluation budget exceeded: {self.calls} > {self.budget}"
            )
        return self._problem.evaluate(points)


def _initial_points(
    problem_id: str, dimension: int, seed: int, n_pop: int
) -> np.ndarray:
    # Keyed by problem and seed only, never by algorithm: every algorithm
    # must start a run from the same sample.
    rng = stable_rng("init", problem_id, dimension, seed)
    return rng.uniform(LOWER, UPPER, (n_pop, dimension))


def initial_population(problem: Problem, seed: int, n_pop: int) -> Population:
    """Shared uniform initial population for one (problem, seed)."""
    points = _initial_points(problem.problem_id, problem.dimension, seed, n_pop)
    return Population(
        iteration=0, solutions=points, fitness=problem.evaluate(points)
    )


def _clamp(points: np.ndarray) -> np.ndarray:
    return np.clip(points, LOWER, UPPER)


def _run_random_search(evaluate, x0, f0, iters, rng, hp, dimension):
    history = [(x0, f0)]
    n_pop = x0.shape[0]
    for _ in range(1, iters):
        x = rng.uniform(LOWER, UPPER, (n_pop, dimension))
        history.append((x, evaluate(x)))
    return history


def _de_trial(x, i, mutant, cr, rng):
    d = x.shape[1]
    j_rand = rng.integers(d)
    mask = rng.random(d) < cr
    mask[j_rand] = True
    return np.where(mask, mutant, x[i])


def _run_de(evaluate, x0, f0, iters, rng, hp, dimension):
    f_weight = hp["f_weight"]
    cr = hp["cr"]
    x, f = x0.copy(), f0.copy()
    history = [(x0, f0)]
    n_pop = x.shape[0]
    for _ in range(1, iters):
        trials = np.empty_like(x)
        for i in range(n_pop):
            others = np.delete(np.arange(n_pop), i)
            r1, r2, r3 = others[rng.choice(n_pop - 1, size=3, replace=False)]
            mutant = _clamp(x[r1] + f_weight * (x[r2] - x[r3]))
            trials[i] = _de_trial(x, i, mutant, cr, rng)
        f_trials = evaluate(trials)
        improved = f_trials <= f
        x = np.where(improved[:, None], trials, x)
        f = np.where(improved, f_trials, f)
        history.append((x.copy(), f.copy()))
    return history


def _run_sade(evaluate, x0, f0, iters, rng, hp, dimension):
    # Self-adaptive DE: mutation scale jitters per member and generation,
    # crossover rate follows a short memory of recently successful rates.
    f_mean = hp["f_mean"]
    f_sigma = hp["f_sigma"]
    cr_sigma = hp["cr_sigma"]
    memory_len = int(hp["memory"])
    x, f = x0.copy(), f0.copy()
    history = [(x0, f0)]
    n_pop = x.shape[0]
    success_memory: deque[float] = deque(maxlen=memory_len)
    for _ in range(1, iters):
        cr_mean = (
            sum(success_memory) / len(success_memory) if success_memory else 0.5
        )
        f_factors = np.clip(rng.normal(f_mean, f_sigma, n_pop), 0.05, 1.0)
        cr_rates = np.clip(rng.normal(cr_mean, cr_sigma, n_pop), 0.0, 1.0)
        trials = np.empty_like(x)
        for i in range(n_pop):
            others = np.delete(np.arange(n_pop), i)
            r1, r2, r3 = others[rng.choice(n_pop - 1, size=3, replace=False)]
            mutant = _clamp(x[r1] + f_factors[i] * (x[r2] - x[r3]))
            trials[i] = _de_trial(x, i, mutant, cr_rates[i], rng)
        f_trials = evaluate(trials)
        improved = f_trials <= f
        for i in np.flatnonzero(improved):
            success_memory.append(float(cr_rates[i]))
        x = np.where(improved[:, None], trials, x)
        f = np.where(improved, f_trials, f)
        history.append((x.copy(), f.copy()))
    return history


def _tournament_pick(f, rng, size):
    contenders = rng.integers(f.shape[0], size=size)
    return contenders[np.argmin(f[contenders])]


def _run_ga(evaluate, x0, f0, iters, rng, hp, dimension):
    tournament = int(hp["tournament"])
    crossover_rate = hp["crossover_rate"]
    sigma = hp["mutation_sigma"]
    mutation_rate = 1.0 / dimension
    x, f = x0.copy(), f0.copy()
    history = [(x0, f0)]
    n_pop = x.shape[0]
    for _ in range(1, iters):
        children = []
        while len(children) < n_pop:
            p1 = x[_tournament_pick(f, rng, tournament)]
            p2 = x[_tournament_pick(f, rng, tournament)]
            if rng.random() < crossover_rate:
                mask = rng.random(dimension) < 0.5
                c1 = np.where(mask, p1, p2)
                c2 = np.where(mask, p2, p1)
            else:
                c1, c2 = p1.copy(), p2.copy()
            children.append(c1)
            children.append(c2)
        offspring = np.array(children[:n_pop])
        mutate = rng.random(offspring.shape) < mutation_rate
        noise = rng.normal(0.0, sigma, offspring.shape)
        offspring = _clamp(offspring + mutate * noise)
        f_offspring = evaluate(offspring)
        # Elitism: never lose the best individual found so far.
        best_parent = int(np.argmin(f))
        if f_offspring.min() > f[best_parent]:
            worst_child = int(np.argmax(f_offspring))
            offspring[worst_child] = x[best_parent]
            f_offspring[worst_child] = f[best_parent]
        x, f = offspring, f_offspring
        history.append((x.copy(), f.copy()))
    return history


def _run_pso(evaluate, x0, f0, iters, rng, hp, dimension):
    inertia = hp["inertia"]
    cognitive = hp["cognitive"]
    social = hp["social"]
    x, f = x0.copy(), f0.copy()
    history = [(x0, f0)]
    n_pop = x.shape[0]
    velocity = np.zeros_like(x)
    pbest_x, pbest_f = x.copy(), f.copy()
    gbest = int(np.argmin(pbest_f))
    for _ in range(1, iters):
        r1 = rng.random((n_pop, dimension))
        r2 = rng.random((n_pop, dimension))
        velocity = (
            inertia * velocity
            + cognitive * r1 * (pbest_x - x)
            + social * r2 * (pbest_x[gbest] - x)
        )
        x = _clamp(x + velocity)
        f = evaluate(x)
        improved = f < pbest_f
        pbest_x = np.where(improved[:, None], x, pbest_x)
        pbest_f = np.where(improved, f, pbest_f)
        gbest = int(np.argmin(pbest_f))
        history.append((x.copy(), f.copy()))
    return history


_RUNNERS = {
    "random_search": _run_random_search,
    "de_rand_1_bin": _run_de,
    "sade": _run_sade,
    "ga": _run_ga,
    "pso": _run_pso,
}


def run_algorithm(
    spec: AlgorithmSpec, problem: Problem, config: RunConfig, run: int
) -> Trajectory:
    """Execute one algorithm run; one iteration is one full generation.

    Iteration 0 is the shared seeded initial population; the trajectory has
    exactly floor(budget / n_pop) iterations and consumes at most
    budget_factor * dimension objective evaluations (counted, not
    estimated).
    """
    if spec.algorithm_id not in _RUNNERS:
        raise InputError(f"unknown algorithm {spec.algorithm_id!r}")
    if run < 0 or run >= config.runs:
        raise InputError(f"run index {run} outside 0..{config.runs - 1}")
    seed = config.seeds[run]
    budget = config.budget(problem.dimension)
    iters = budget // spec.n_pop
    if iters < 2:
        raise InputError(
            f"budget {budget} allows only {iters} iterations of population "
            f"{spec.n_pop}; need at least 2"
        )
    evaluate = _BudgetedObjective(problem, budget)
    x0 = _initial_points(problem.problem_id, problem.dimension, seed, spec.n_pop)
    f0 = evaluate(x0)
    rng = stable_rng(
        "alg", spec.algorithm_id, problem.problem_id, problem.dimension, seed
    )
    history = _RUNNERS[spec.algorithm_id](
        evaluate, x0, f0, iters, rng, spec.hyperparameters, problem.dimension
    )
    populations = tuple(
        Population(iteration=i, solutions=x, fitness=f)
        for i, (x, f) in enumerate(history)
    )
    return Trajectory(
        algorithm_id=spec.algorithm_id,
        problem_id=problem.problem_id,
        dimension=problem.dimension,
        run=run,
        populations=populations,
    )


def run_suite(
    specs: list[AlgorithmSpec], problem_ids: list[str], config: RunConfig
) -> TrajectoryStore:
    """Run every (algorithm, problem, dimension, run) combination."""
    if not specs:
        raise InputError("at least one algorithm spec is required")
    if not problem_ids:
        raise InputError("at least one problem is required")
    if len({s.algorithm_id for s in specs}) != len(specs):
        raise InputError("algorithm ids must be unique")
    trajectories = []
    for dimension in config.dimensions:
        for problem_id in problem_ids:
            problem = make_problem(problem_id, dimension)
            for spec in specs:
                for run in range(config.runs):
                    trajectories.append(run_algorithm(spec, problem, config, run))
    return TrajectoryStore(trajectories)
