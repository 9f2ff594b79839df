"""Command line front end: generate, compare, cluster, report, crossmatch.

Every command writes a manifest JSON next to its primary output naming the
tool version, the full configuration, and SHA-256 digests of all input and
output files, which is enough to reproduce any artifact byte for byte.

Exit codes: 0 success, 1 internal error, 2 input/config error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    pairwise_similarity,
    read_series_csv,
    read_similarity_csv,
    write_series_csv,
    write_similarity_csv,
)
from .cluster import (
    EXPORT_FORMATS,
    export_dendrogram,
    to_dissimilarity,
    ward_cluster,
)
from .crossmatch import LabeledSample, crossmatch_test
from .errors import InputError
from .portfolio import (
    ALGORITHM_IDS,
    PROBLEM_IDS,
    AlgorithmSpec,
    RunConfig,
    run_suite,
)
from .report import render_report
from .trajectory import load_trajectories, save_trajectories


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    command: str, args: argparse.Namespace, inputs: list[Path], outputs: list[Path]
) -> Path:
    primary = outputs[0]
    manifest_path = Path(f"{primary}.manifest.json")
    config = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in ("func",)
    }
    payload = {
        "tool": "trajmatch",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    manifest_path.write_text(
        json.dumps(payload, indent=1, sort_keys=True, default=str) + "\n",
        encoding="utf-8",
    )
    return manifest_path


def _parse_id_list(raw: str, known: tuple[str, ...], what: str) -> list[str]:
    items = [item.strip() for item in raw.split(",") if item.strip()]
    if not items:
        raise InputError(f"no {what} selected")
    unknown = [item for item in items if item not in known]
    if unknown:
        raise InputError(f"unknown {what} {unknown}; available: {', '.join(known)}")
    return items


def _parse_dims(raw: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise InputError(f"dimensions must be integers, got {raw!r}") from None
    if not dims:
        raise InputError("no dimensions selected")
    if any(d < 1 for d in dims):
        raise InputError(f"dimensions must be >= 1, got {dims}")
    return dims


def _tie_mode(raw: str) -> str:
    return raw.replace("-", "_")


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("TRAJMATCH_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"TRAJMATCH_THREADS is not an integer: {env!r}") from None
    return 1


def cmd_generate(args: argparse.Namespace) -> int:
    algorithms = _parse_id_list(args.algorithms, ALGORITHM_IDS, "algorithms")
    problems = _parse_id_list(args.problems, PROBLEM_IDS, "problems")
    config = RunConfig(
        budget_factor=args.budget_factor,
        runs=args.runs,
        dimensions=_parse_dims(args.dims),
        base_seed=args.seed,
    )
    specs = [AlgorithmSpec(algorithm_id=a, n_pop=args.pop) for a in algorithms]
    store = run_suite(specs, problems, config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_trajectories(store, out)
    manifest = _write_manifest("generate", args, [], [out])
    print(f"wrote {len(store)} trajectories to {out} (manifest: {manifest})")
    return 0


def _per_dim_matrix_path(base: Path, dim: int) -> Path:
    return base.with_name(f"{base.stem}_d{dim}{base.suffix}")


def cmd_compare(args: argparse.Namespace) -> int:
    source = Path(args.infile)
    store = load_trajectories(source)
    per_dim, overall, comparisons = pairwise_similarity(
        store,
        alpha=args.alpha,
        tie_mode=_tie_mode(args.tie_mode),
        include_fitness=args.include_fitness,
        threads=_threads(args),
    )
    out_matrix = Path(args.out_matrix)
    out_matrix.parent.mkdir(parents=True, exist_ok=True)
    out_series = Path(args.out_series)
    out_series.parent.mkdir(parents=True, exist_ok=True)
    write_similarity_csv(overall, out_matrix)
    outputs = [out_matrix]
    for dim, matrix in sorted(per_dim.items()):
        path = _per_dim_matrix_path(out_matrix, dim)
        write_similarity_csv(matrix, path)
        outputs.append(path)
    write_series_csv(comparisons, out_series)
    outputs.append(out_series)
    manifest = _write_manifest("compare", args, [source], outputs)
    print(
        f"compared {len(store.algorithms)} algorithms over "
        f"{len(comparisons)} run comparisons; matrix: {out_matrix}, "
        f"series: {out_series} (manifest: {manifest})"
    )
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    source = Path(args.infile)
    matrix = read_similarity_csv(source)
    dendrogram = ward_cluster(to_dissimilarity(matrix), linkage=args.linkage)
    text = export_dendrogram(dendrogram, args.format)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    manifest = _write_manifest("cluster", args, [source], [out])
    print(f"wrote {args.format} dendrogram to {out} (manifest: {manifest})")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    matrix_path = Path(args.matrix)
    series_path = Path(args.series)
    matrix = read_similarity_csv(matrix_path)
    series_rows = read_series_csv(series_path)
    written = render_report(matrix, series_rows, args.out_dir, top_k=args.top_k)
    manifest = _write_manifest(
        "report", args, [matrix_path, series_path], written
    )
    print(f"wrote report to {written[0]} (manifest: {manifest})")
    return 0


def _read_points_csv(path: Path) -> np.ndarray:
    """One point per row, comma-separated floats; a header line is tolerated."""
    if not path.exists():
        raise InputError(f"points file not found: {path}")
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                if line_no == 1:
                    continue
                raise InputError(f"{path} line {line_no}: {exc}") from None
    if not rows:
        raise InputError(f"{path}: no points")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InputError(
            f"{path}: rows have inconsistent column counts {sorted(widths)}"
        )
    return np.asarray(rows, dtype=float)


def cmd_crossmatch(args: argparse.Namespace) -> int:
    x = _read_points_csv(Path(args.x))
    y = _read_points_csv(Path(args.y))
    result = crossmatch_test(
        LabeledSample(x, y), tie_mode=_tie_mode(args.tie_mode)
    )
    payload = {
        "m": result.m,
        "n": result.n,
        "a1": result.a1,
        "a0": result.a0,
        "a2": result.a2,
        "expected_a1": result.expected_a1,
        "p_value": result.p_value,
    }
    if args.json:
        print(json.dumps(payload, indent=1))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajmatch",
        description=(
            "Quantify behavioral similarity of population-based optimizers by "
            "crossmatch-testing their per-iteration populations."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser(
        "generate", help="run the built-in portfolio and write a trajectory CSV"
    )
    p_gen.add_argument("--algorithms", default=",".join(ALGORITHM_IDS))
    p_gen.add_argument("--problems", default=",".join(PROBLEM_IDS))
    p_gen.add_argument("--dims", default="2,5", help="comma list, e.g. 2,5")
    p_gen.add_argument("--runs", type=int, default=5)
    p_gen.add_argument("--pop", type=int, default=50, help="population size")
    p_gen.add_argument("--budget-factor", type=int, default=500,
                       help="evaluations per run = factor * dimension")
    p_gen.add_argument("--seed", type=int, default=0, help="base seed")
    p_gen.add_argument("--out", required=True, help="trajectory file (.csv/.json)")
    p_gen.set_defaults(func=cmd_generate)

    p_cmp = sub.add_parser(
        "compare", help="pairwise per-iteration testing and similarity matrices"
    )
    p_cmp.add_argument("--in", dest="infile", required=True,
                       help="trajectory file from generate")
    p_cmp.add_argument("--alpha", type=float, default=0.05)
    p_cmp.add_argument("--tie-mode", choices=("neutral", "prefer-cross"),
                       default="neutral")
    p_cmp.add_argument("--include-fitness", action="store_true",
                       help="append the scaled fitness as an extra coordinate")
    p_cmp.add_argument("--out-matrix", required=True,
                       help="overall similarity CSV; per-dimension matrices go "
                            "to <stem>_d<dim>.csv")
    p_cmp.add_argument("--out-series", required=True,
                       help="per-iteration statistic series CSV")
    p_cmp.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: TRAJMATCH_THREADS or 1)")
    p_cmp.set_defaults(func=cmd_compare)

    p_clu = sub.add_parser("cluster", help="Ward-cluster a similarity matrix")
    p_clu.add_argument("--in", dest="infile", required=True,
                       help="similarity matrix CSV")
    p_clu.add_argument("--format", choices=EXPORT_FORMATS, default="newick")
    p_clu.add_argument("--linkage", choices=("ward", "complete", "average"),
                       default="ward",
                       help="'complete'/'average' are experimental extras")
    p_clu.add_argument("--out", required=True)
    p_clu.set_defaults(func=cmd_cluster)

    p_rep = sub.add_parser(
        "report", help="render a markdown report with figures"
    )
    p_rep.add_argument("--matrix", required=True, help="overall similarity CSV")
    p_rep.add_argument("--series", required=True, help="series CSV from compare")
    p_rep.add_argument("--out-dir", required=True)
    p_rep.add_argument("--top-k", type=int, default=10)
    p_rep.set_defaults(func=cmd_report)

    p_xm = sub.add_parser(
        "crossmatch", help="ad-hoc two-sample test on two CSV point files"
    )
    p_xm.add_argument("--x", required=True, help="CSV of sample X points")
    p_xm.add_argument("--y", required=True, help="CSV of sample Y points")
    p_xm.add_argument("--tie-mode", choices=("neutral", "prefer-cross"),
                      default="neutral")
    p_xm.add_argument("--json", action="store_true", help="emit JSON")
    p_xm.set_defaults(func=cmd_crossmatch)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"trajmatch: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1
    except Exception as exc:  # internal failure
        print(f"trajmatch: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
