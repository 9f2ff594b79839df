import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from trajmatch.analysis import read_series_csv, read_similarity_csv
from trajmatch.cli import main
from trajmatch.cluster import dendrogram_from_json
from trajmatch.trajectory import load_trajectories


def run_cli(*argv):
    return main([str(a) for a in argv])


def generate_small(tmp_path, name="t.csv", seed=0, dims="2", algorithms="de_rand_1_bin,ga"):
    out = tmp_path / name
    code = run_cli(
        "generate",
        "--algorithms", algorithms,
        "--problems", "sphere,rastrigin",
        "--dims", dims,
        "--runs", "2",
        "--pop", "8",
        "--budget-factor", "40",
        "--seed", seed,
        "--out", out,
    )
    assert code == 0
    return out


class TestGenerate:
    def test_writes_trajectories_and_manifest(self, tmp_path):
        out = generate_small(tmp_path)
        store = load_trajectories(out)
        # 2 algorithms x 2 problems x 1 dim x 2 runs
        assert len(store) == 8
        manifest = json.loads((tmp_path / "t.csv.manifest.json").read_text())
        assert manifest["command"] == "generate"
        assert manifest["version"]
        assert str(out) in manifest["outputs"]

    def test_same_seed_identical_bytes(self, tmp_path):
        a = generate_small(tmp_path, "a.csv", seed=3)
        b = generate_small(tmp_path, "b.csv", seed=3)
        assert a.read_bytes() == b.read_bytes()

    def test_dims_flag_halves_output(self, tmp_path):
        one = generate_small(tmp_path, "one.csv", dims="2")
        both = generate_small(tmp_path, "both.csv", dims="2,5")
        assert len(load_trajectories(both)) == 2 * len(load_trajectories(one))

    def test_unknown_algorithm_exits_2(self, tmp_path, capsys):
        code = run_cli(
            "generate", "--algorithms", "simulated_annealing",
            "--out", tmp_path / "x.csv",
        )
        assert code == 2
        assert "unknown algorithms" in capsys.readouterr().err


class TestCompare:
    def compare(self, tmp_path, source, alpha="0.05", extra=()):
        matrix = tmp_path / f"m_{alpha}.csv"
        series = tmp_path / f"s_{alpha}.csv"
        code = run_cli(
            "compare", "--in", source, "--alpha", alpha,
            "--out-matrix", matrix, "--out-series", series, *extra,
        )
        assert code == 0
        return matrix, series

    def test_matrix_properties(self, tmp_path):
        source = generate_small(tmp_path)
        matrix_path, series_path = self.compare(tmp_path, source)
        matrix = read_similarity_csv(matrix_path)
        assert matrix.algorithms == ("de_rand_1_bin", "ga")
        assert np.all(np.diagonal(matrix.values) == 1.0)
        assert np.array_equal(matrix.values, matrix.values.T)
        per_dim = tmp_path / "m_0.05_d2.csv"
        assert per_dim.exists()
        rows = read_series_csv(series_path)
        # 1 pair x 2 problems x 2 runs x 10 iterations
        assert len(rows) == 40
        manifest = json.loads(Path(f"{matrix_path}.manifest.json").read_text())
        assert str(series_path) in manifest["outputs"]

    def test_alpha_monotonicity(self, tmp_path):
        source = generate_small(tmp_path)
        strict, _ = self.compare(tmp_path, source, alpha="0.05")
        loose, _ = self.compare(tmp_path, source, alpha="0.01")
        m_strict = read_similarity_csv(strict)
        m_loose = read_similarity_csv(loose)
        assert np.all(m_loose.values >= m_strict.values)

    def test_malformed_csv_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("algorithm,problem\nnope,broken\n")
        code = run_cli(
            "compare", "--in", bad,
            "--out-matrix", tmp_path / "m.csv",
            "--out-series", tmp_path / "s.csv",
        )
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_threads_env_fallback(self, tmp_path, monkeypatch):
        source = generate_small(tmp_path)
        m1, s1 = self.compare(tmp_path, source)
        monkeypatch.setenv("TRAJMATCH_THREADS", "4")
        matrix = tmp_path / "m_env.csv"
        series = tmp_path / "s_env.csv"
        assert run_cli(
            "compare", "--in", source,
            "--out-matrix", matrix, "--out-series", series,
        ) == 0
        assert matrix.read_bytes() == m1.read_bytes()
        assert series.read_bytes() == s1.read_bytes()


class TestCluster:
    def make_matrix(self, tmp_path):
        source = generate_small(
            tmp_path, algorithms="de_rand_1_bin,sade,ga"
        )
        matrix = tmp_path / "m.csv"
        series = tmp_path / "s.csv"
        assert run_cli(
            "compare", "--in", source, "--tie-mode", "prefer-cross",
            "--out-matrix", matrix, "--out-series", series,
        ) == 0
        return matrix

    def test_newick_output(self, tmp_path):
        matrix = self.make_matrix(tmp_path)
        out = tmp_path / "tree.nwk"
        assert run_cli("cluster", "--in", matrix, "--out", out) == 0
        text = out.read_text().strip()
        assert text.endswith(";")
        assert text.count("(") == text.count(")")
        for name in ("de_rand_1_bin", "sade", "ga"):
            assert name in text

    def test_svg_output(self, tmp_path):
        matrix = self.make_matrix(tmp_path)
        out = tmp_path / "tree.svg"
        assert run_cli("cluster", "--in", matrix, "--format", "svg", "--out", out) == 0
        svg = out.read_text()
        assert svg.startswith("<svg")
        assert svg.count("<text") == 3

    def test_json_round_trip(self, tmp_path):
        matrix = self.make_matrix(tmp_path)
        out = tmp_path / "tree.json"
        assert run_cli("cluster", "--in", matrix, "--format", "json", "--out", out) == 0
        dg = dendrogram_from_json(out.read_text())
        assert set(dg.leaves) == {"de_rand_1_bin", "sade", "ga"}

    def test_missing_input_exits_2(self, tmp_path, capsys):
        code = run_cli(
            "cluster", "--in", tmp_path / "nope.csv", "--out", tmp_path / "t.nwk"
        )
        assert code == 2
        assert "not found" in capsys.readouterr().err


class TestReport:
    def test_report_contents(self, tmp_path):
        source = generate_small(tmp_path, algorithms="de_rand_1_bin,sade,ga")
        matrix = tmp_path / "m.csv"
        series = tmp_path / "s.csv"
        assert run_cli(
            "compare", "--in", source, "--tie-mode", "prefer-cross",
            "--out-matrix", matrix, "--out-series", series,
        ) == 0
        out_dir = tmp_path / "report"
        assert run_cli(
            "report", "--matrix", matrix, "--series", series,
            "--out-dir", out_dir, "--top-k", "2",
        ) == 0
        text = (out_dir / "report.md").read_text()
        assert "## Top 2 most similar pairs" in text
        assert "supplementary" in text.lower()
        assert (out_dir / "figures" / "similarity_heatmap.png").exists()
        assert (out_dir / "figures" / "dendrogram.png").exists()
        series_figs = list((out_dir / "figures").glob("series_*.png"))
        assert len(series_figs) == 2
        for fig in series_figs:
            assert f"figures/{fig.name}" in text

    def test_report_deterministic(self, tmp_path):
        source = generate_small(tmp_path)
        matrix = tmp_path / "m.csv"
        series = tmp_path / "s.csv"
        assert run_cli(
            "compare", "--in", source,
            "--out-matrix", matrix, "--out-series", series,
        ) == 0
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        for d in (d1, d2):
            assert run_cli(
                "report", "--matrix", matrix, "--series", series, "--out-dir", d
            ) == 0
        assert (d1 / "report.md").read_bytes() == (d2 / "report.md").read_bytes()


class TestCrossmatchCommand:
    def write_points(self, path, points):
        path.write_text("\n".join(",".join(map(str, p)) for p in points) + "\n")

    def test_separated_samples(self, tmp_path, capsys):
        x = tmp_path / "x.csv"
        y = tmp_path / "y.csv"
        rng = np.random.default_rng(0)
        self.write_points(x, rng.normal(0, 0.1, (10, 2)))
        self.write_points(y, rng.normal(9, 0.1, (10, 2)))
        assert run_cli("crossmatch", "--x", x, "--y", y, "--json") == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["m"] == 10
        assert payload["a1"] == 0
        assert payload["p_value"] < 0.01

    def test_header_tolerated(self, tmp_path, capsys):
        x = tmp_path / "x.csv"
        y = tmp_path / "y.csv"
        x.write_text("x0,x1\n0,0\n1,1\n")
        y.write_text("x0,x1\n0.5,0\n1,0.5\n")
        assert run_cli("crossmatch", "--x", x, "--y", y) == 0
        assert "p_value" in capsys.readouterr().out

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code = run_cli("crossmatch", "--x", tmp_path / "a.csv", "--y", tmp_path / "b.csv")
        assert code == 2
        capsys.readouterr()


class TestPipelineDeterminism:
    def test_end_to_end_reruns_and_threads(self, tmp_path):
        artifacts = {}
        for label, threads in (("one", "1"), ("two", "1"), ("par", "4")):
            base = tmp_path / label
            base.mkdir()
            source = generate_small(base, "t.csv", seed=11)
            matrix = base / "m.csv"
            series = base / "s.csv"
            assert run_cli(
                "compare", "--in", source, "--threads", threads,
                "--out-matrix", matrix, "--out-series", series,
            ) == 0
            tree = base / "tree.nwk"
            assert run_cli("cluster", "--in", matrix, "--out", tree) == 0
            artifacts[label] = (
                source.read_bytes(),
                matrix.read_bytes(),
                series.read_bytes(),
                tree.read_bytes(),
            )
        assert artifacts["one"] == artifacts["two"]
        assert artifacts["one"] == artifacts["par"]


def test_console_entry_point():
    result = subprocess.run(
        [sys.executable, "-m", "trajmatch.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert result.stdout.strip()
