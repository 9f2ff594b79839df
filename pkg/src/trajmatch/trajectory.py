"""Search-trajectory data model, ingestion, and per-problem scaling.

A trajectory is the ordered sequence of populations one algorithm produced
on one problem instance in one run. Before populations of different
algorithms are compared, all trajectories of a problem instance are pooled
and min-max scaled together, so that every candidate solution and fitness
value lands in the same unit box.

File formats (chosen by extension):

* ``.csv`` - one row per population member per iteration, header
  ``algorithm,problem,dim,run,iteration,member,fitness,x0,x1,...``.
  ``dim`` decides how many x-columns a row fills; trailing x-columns stay
  empty when files mix dimensions.
* ``.json`` - array of trajectory objects mirroring the in-memory types.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import InputError

CSV_FIXED_COLUMNS = (
    "algorithm",
    "problem",
    "dim",
    "run",
    "iteration",
    "member",
    "fitness",
)

StoreKey = tuple[str, str, int, int]


@dataclass(frozen=True)
class Population:
    """One iteration's snapshot: candidate solutions plus their fitness."""

    iteration: int
    solutions: np.ndarray
    fitness: np.ndarray

    def __post_init__(self):
        sols = np.asarray(self.solutions, dtype=float)
        fit = np.asarray(self.fitness, dtype=float)
        if self.iteration < 0:
            raise InputError(f"iteration must be >= 0, got {self.iteration}")
        if sols.ndim != 2:
            raise InputError(f"solutions must be 2-d, got shape {sols.shape}")
        if fit.ndim != 1 or fit.shape[0] != sols.shape[0]:
            raise InputError(
                f"fitness length {fit.shape} does not match {sols.shape[0]} members"
            )
        if sols.shape[0] < 2:
            raise InputError(f"population needs >= 2 members, got {sols.shape[0]}")
        if not (np.all(np.isfinite(sols)) and np.all(np.isfinite(fit))):
            raise InputError("population contains non-finite values")
        object.__setattr__(self, "solutions", sols)
        object.__setattr__(self, "fitness", fit)

    @property
    def n_pop(self) -> int:
        return self.solutions.shape[0]

    @property
    def dimension(self) -> int:
        return self.solutions.shape[1]


@dataclass(frozen=True)
class Trajectory:
    """Populations of one (algorithm, problem, dimension, run) execution."""

    algorithm_id: str
    problem_id: str
    dimension: int
    run: int
    populations: tuple[Population, ...]

    def __post_init__(self):
        pops = tuple(self.populations)
        if not pops:
            raise InputError("trajectory has no populations")
        for expected, pop in enumerate(pops):
            if pop.iteration != expected:
                raise InputError(
                    f"iterations must be consecutive from 0; found {pop.iteration} "
                    f"at position {expected} "
                    f"({self.algorithm_id}/{self.problem_id}/d{self.dimension}/run{self.run})"
                )
            if pop.dimension != self.dimension:
                raise InputError(
                    f"population dimension {pop.dimension} != trajectory "
                    f"dimension {self.dimension}"
                )
            if pop.n_pop != pops[0].n_pop:
                raise InputError(
                    f"population sizes differ within a trajectory: "
                    f"{pop.n_pop} != {pops[0].n_pop}"
                )
        object.__setattr__(self, "populations", pops)

    @property
    def key(self) -> StoreKey:
        return (self.algorithm_id, self.problem_id, self.dimension, self.run)

    @property
    def n_pop(self) -> int:
        return self.populations[0].n_pop

    @property
    def n_iterations(self) -> int:
        return len(self.populations)


@dataclass(frozen=True)
class ScalingParams:
    """Min-max extrema of one problem instance, pooled over all trajectories."""

    problem_id: str
    dimension: int
    x_min: np.ndarray
    x_max: np.ndarray
    f_min: float
    f_max: float

    def __post_init__(self):
        x_min = np.asarray(self.x_min, dtype=float)
        x_max = np.asarray(self.x_max, dtype=float)
        if x_min.shape != (self.dimension,) or x_max.shape != (self.dimension,):
            raise InputError("scaling extrema must have one entry per dimension")
        if np.any(x_min > x_max) or self.f_min > self.f_max:
            raise InputError("scaling minima exceed maxima")
        object.__setattr__(self, "x_min", x_min)
        object.__setattr__(self, "x_max", x_max)


class TrajectoryStore:
    """Immutable collection of trajectories keyed by (algorithm, problem, dim, run).

    Construction validates that all trajectories of one (problem, dim, run)
    share the iteration count and population size, which iteration-aligned
    pairwise testing relies on.
    """

    def __init__(self, trajectories: Iterable[Trajectory]):
        self._by_key: dict[StoreKey, Trajectory] = {}
        for traj in trajectories:
            if traj.key in self._by_key:
                raise InputError(f"duplicate trajectory key {traj.key}")
            self._by_key[traj.key] = traj
        if not self._by_key:
            raise InputError("no trajectories: the store may not be empty")
        shapes: dict[tuple[str, int, int], tuple[int, int, StoreKey]] = {}
        for traj in self._by_key.values():
            group = (traj.problem_id, traj.dimension, traj.run)
            shape = (traj.n_iterations, traj.n_pop)
            if group in shapes and shapes[group][:2] != shape:
                first = shapes[group]
                raise InputError(
                    f"inconsistent trajectories for problem={group[0]} "
                    f"dim={group[1]} run={group[2]}: {first[2]} has "
                    f"{first[0]} iterations x {first[1]} members, "
                    f"{traj.key} has {shape[0]} x {shape[1]}"
                )
            shapes.setdefault(group, (*shape, traj.key))

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self) -> Iterator[Trajectory]:
        return iter(sorted(self._by_key.values(), key=lambda t: t.key))

    def __contains__(self, key: StoreKey) -> bool:
        return key in self._by_key

    def get(self, algorithm_id: str, problem_id: str, dimension: int, run: int) -> Trajectory:
        key = (algorithm_id, problem_id, dimension, run)
        try:
            return self._by_key[key]
        except KeyError:
            raise InputError(f"no trajectory for key {key}") from None

    @property
    def algorithms(self) -> tuple[str, ...]:
        return tuple(sorted({k[0] for k in self._by_key}))

    @property
    def problems(self) -> tuple[str, ...]:
        return tuple(sorted({k[1] for k in self._by_key}))

    @property
    def dimensions(self) -> tuple[int, ...]:
        return tuple(sorted({k[2] for k in self._by_key}))

    def runs(self, problem_id: str, dimension: int) -> tuple[int, ...]:
        return tuple(
            sorted({k[3] for k in self._by_key if k[1] == problem_id and k[2] == dimension})
        )


def compute_scaling(
    store: TrajectoryStore, problem_id: str, dimension: int
) -> ScalingParams:
    """Exact extrema over every solution coordinate and fitness value of one
    problem instance, pooled across all algorithms, runs, and iterations."""
    x_min = np.full(dimension, np.inf)
    x_max = np.full(dimension, -np.inf)
    f_min, f_max = np.inf, -np.inf
    found = False
    for traj in store:
        if traj.problem_id != problem_id or traj.dimension != dimension:
            continue
        found = True
        for pop in traj.populations:
            x_min = np.minimum(x_min, pop.solutions.min(axis=0))
            x_max = np.maximum(x_max, pop.solutions.max(axis=0))
            f_min = min(f_min, float(pop.fitness.min()))
            f_max = max(f_max, float(pop.fitness.max()))
    if not found:
        raise InputError(
            f"store has no trajectories for problem={problem_id} dim={dimension}"
        )
    return ScalingParams(
        problem_id=problem_id,
        dimension=dimension,
        x_min=x_min,
        x_max=x_max,
        f_min=f_min,
        f_max=f_max,
    )


def _scale(values: np.ndarray, lo, hi) -> np.ndarray:
    span = hi - lo
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = (values - lo) / span
    # Constant dimensions map to 0.0 by convention; a shared constant
    # coordinate does not affect distances between population members.
    return np.where(span > 0, scaled, 0.0)


def apply_scaling(traj: Trajectory, params: ScalingParams) -> Trajectory:
    """Min-max scale one trajectory into the unit box of its problem instance."""
    if traj.problem_id != params.problem_id or traj.dimension != params.dimension:
        raise InputError(
            f"scaling params for ({params.problem_id}, d={params.dimension}) do not "
            f"match trajectory ({traj.problem_id}, d={traj.dimension})"
        )
    pops = tuple(
        Population(
            iteration=pop.iteration,
            solutions=_scale(pop.solutions, params.x_min, params.x_max),
            fitness=_scale(pop.fitness, params.f_min, params.f_max),
        )
        for pop in traj.populations
    )
    return replace(traj, populations=pops)


def feature_vectors(pop: Population, include_fitness: bool = False) -> np.ndarray:
    """Per-member feature rows fed to the two-sample test.

    Each row holds the member's (scaled) solution coordinates, with the
    (scaled) fitness appended as one extra coordinate when requested.
    """
    if include_fitness:
        return np.hstack([pop.solutions, pop.fitness[:, None]])
    return pop.solutions.copy()


# ---------------------------------------------------------------------------
# file input/output


def load_trajectories(path) -> TrajectoryStore:
    """Load a trajectory file (.csv or .json) into a validated store."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"trajectory file not found: {p}")
    suffix = p.suffix.lower()
    if suffix == ".csv":
        return _load_csv(p)
    if suffix == ".json":
        return _load_json(p)
    raise InputError(f"unsupported trajectory format {suffix!r} (use .csv or .json)")


def save_trajectories(store: TrajectoryStore, path) -> None:
    """Write a store to .csv or .json; output is deterministic."""
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix == ".csv":
        _save_csv(store, p)
    elif suffix == ".json":
        _save_json(store, p)
    else:
        raise InputError(f"unsupported trajectory format {suffix!r} (use .csv or .json)")


def _parse_float(text: str, line_no: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"line {line_no}: column {column!r} is not a number: {text!r}")
    if not np.isfinite(value):
        raise InputError(f"line {line_no}: column {column!r} is not finite: {text!r}")
    return value


def _parse_int(text: str, line_no: int, column: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise InputError(
            f"line {line_no}: column {column!r} is not an integer: {text!r}"
        ) from None


def _load_csv(path: Path) -> TrajectoryStore:
    rows: dict[StoreKey, dict[int, dict[int, tuple[float, tuple[float, ...]]]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if tuple(header[: len(CSV_FIXED_COLUMNS)]) != CSV_FIXED_COLUMNS:
            raise InputError(
                f"{path}: header must start with {','.join(CSV_FIXED_COLUMNS)}"
            )
        x_columns = header[len(CSV_FIXED_COLUMNS) :]
        expected_x = [f"x{i}" for i in range(len(x_columns))]
        if x_columns != expected_x:
            raise InputError(
                f"{path}: coordinate columns must be x0..x{len(x_columns) - 1}, "
                f"got {x_columns}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"line {line_no}: expected {len(header)} fields, got {len(row)}"
                )
            algorithm, problem = row[0], row[1]
            dim = _parse_int(row[2], line_no, "dim")
            run = _parse_int(row[3], line_no, "run")
            iteration = _parse_int(row[4], line_no, "iteration")
            member = _parse_int(row[5], line_no, "member")
            fitness = _parse_float(row[6], line_no, "fitness")
            if dim < 1 or dim > len(x_columns):
                raise InputError(
                    f"line {line_no}: dim={dim} does not fit the {len(x_columns)} "
                    f"coordinate columns"
                )
            coords = tuple(
                _parse_float(row[len(CSV_FIXED_COLUMNS) + i], line_no, f"x{i}")
                for i in range(dim)
            )
            for i in range(dim, len(x_columns)):
                if row[len(CSV_FIXED_COLUMNS) + i].strip():
                    raise InputError(
                        f"line {line_no}: column x{i} must be empty for dim={dim}"
                    )
            key = (algorithm, problem, dim, run)
            members = rows.setdefault(key, {}).setdefault(iteration, {})
            if member in members:
                raise InputError(
                    f"line {line_no}: duplicate member {member} for "
                    f"{algorithm}/{problem}/d{dim}/run{run} iteration {iteration}"
                )
            members[member] = (fitness, coords)
    if not rows:
        raise InputError(f"{path}: no data rows")
    return TrajectoryStore(
        _assemble_trajectory(key, iterations) for key, iterations in rows.items()
    )


def _assemble_trajectory(key: StoreKey, iterations) -> Trajectory:
    algorithm, problem, dim, run = key
    pops = []
    for index, iteration in enumerate(sorted(iterations)):
        if iteration != index:
            raise InputError(
                f"{algorithm}/{problem}/d{dim}/run{run}: iterations are not "
                f"consecutive from 0 (found {iteration} at position {index})"
            )
        members = iterations[iteration]
        order = sorted(members)
        if order != list(range(len(order))):
            raise InputError(
                f"{algorithm}/{problem}/d{dim}/run{run} iteration {iteration}: "
                f"member indices are not consecutive from 0"
            )
        fitness = np.array([members[i][0] for i in order])
        solutions = np.array([members[i][1] for i in order])
        pops.append(Population(iteration=iteration, solutions=solutions, fitness=fitness))
    return Trajectory(
        algorithm_id=algorithm,
        problem_id=problem,
        dimension=dim,
        run=run,
        populations=tuple(pops),
    )


def _save_csv(store: TrajectoryStore, path: Path) -> None:
    d_max = max(store.dimensions)
    header = list(CSV_FIXED_COLUMNS) + [f"x{i}" for i in range(d_max)]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for traj in store:
            for pop in traj.populations:
                for member in range(pop.n_pop):
                    coords = [repr(float(v)) for v in pop.solutions[member]]
                    coords += [""] * (d_max - traj.dimension)
                    writer.writerow(
                        [
                            traj.algorithm_id,
                            traj.problem_id,
                            traj.dimension,
                            traj.run,
                            pop.iteration,
                            member,
                            repr(float(pop.fitness[member])),
                            *coords,
                        ]
                    )


def _load_json(path: Path) -> TrajectoryStore:
    with open(path, encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, list):
        raise InputError(f"{path}: expected a top-level array of trajectories")
    trajectories = []
    for index, entry in enumerate(payload):
        try:
            pops = tuple(
                Population(
                    iteration=int(pop["iteration"]),
                    solutions=np.asarray(pop["solutions"], dtype=float),
                    fitness=np.asarray(pop["fitness"], dtype=float),
                )
                for pop in entry["populations"]
            )
            trajectories.append(
                Trajectory(
                    algorithm_id=str(entry["algorithm"]),
                    problem_id=str(entry["problem"]),
                    dimension=int(entry["dim"]),
                    run=int(entry["run"]),
                    populations=pops,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: trajectory entry {index}: {exc}") from exc
    return TrajectoryStore(trajectories)


def _save_json(store: TrajectoryStore, path: Path) -> None:
    payload = [
        {
            "algorithm": traj.algorithm_id,
            "problem": traj.problem_id,
            "dim": traj.dimension,
            "run": traj.run,
            "populations": [
                {
                    "iteration": pop.iteration,
                    "solutions": pop.solutions.tolist(),
                    "fitness": pop.fitness.tolist(),
                }
                for pop in traj.populations
            ],
        }
        for traj in store
    ]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=1)
        handle.write("\n")
