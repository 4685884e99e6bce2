import json
import subprocess
import sys

import numpy as np
import pytest

from starmap.cli import main
from starmap.datasets import load_csv, load_embedding_csv
from starmap.metrics import CSV_FIELDS


@pytest.fixture(scope="module")
def synth_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "h.csv"
    assert main(["synth", "--seed", "1", "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def small_file(tmp_path_factory):
    g = np.random.default_rng(0)
    X = np.repeat(g.normal(scale=6, size=(4, 3)), 30, axis=0) + g.normal(size=(120, 3))
    path = tmp_path_factory.mktemp("cli") / "small.csv"
    with open(path, "w") as fh:
        fh.write("a,b,c,label\n")
        for row, lab in zip(X.tolist(), np.repeat(np.arange(4), 30)):
            fh.write(",".join(repr(v) for v in row) + f",{lab}\n")
    return path


def line_count(path):
    with open(path) as fh:
        return sum(1 for _ in fh)


class TestSynth:
    def test_row_count(self, synth_file):
        assert line_count(synth_file) == 7501
        assert open(synth_file).readline().strip() == "x0,x1,level0,level1,level2"

    def test_same_seed_byte_identical(self, synth_file, tmp_path):
        again = tmp_path / "again.csv"
        main(["synth", "--seed", "1", "--out", str(again)])
        assert again.read_bytes() == synth_file.read_bytes()

    def test_other_seed_changes_coordinates_only(self, synth_file, tmp_path):
        other = tmp_path / "other.csv"
        main(["synth", "--seed", "2", "--out", str(other)])
        a, b = load_csv(synth_file), load_csv(other)
        assert not np.array_equal(a.X, b.X)
        for c in a.labels:
            np.testing.assert_array_equal(a.labels[c], b.labels[c])


class TestEmbed:
    def test_starmap_files(self, synth_file, tmp_path):
        y, s = tmp_path / "y.csv", tmp_path / "s.csv"
        code = main(["embed", "--input", str(synth_file), "--method", "starmap",
                     "--anchors", "75", "--lambda", "0.1", "--k", "20", "--seed", "7",
                     "--epochs", "20", "--deterministic", "--out", str(y),
                     "--stars-out", str(s)])
        assert code == 0
        assert line_count(y) == 7501
        assert line_count(s) == 76

    def test_auto_anchors(self, synth_file, tmp_path):
        y = tmp_path / "y.csv"
        main(["embed", "--input", str(synth_file), "--anchors", "auto", "--epochs", "5",
              "--deterministic", "--out", str(y)])
        assert line_count(f"{y}.stars.csv") == 1 + 15

    def test_umap_has_no_stars(self, small_file, tmp_path):
        y = tmp_path / "y.csv"
        assert main(["embed", "--input", str(small_file), "--method", "umap", "--k", "10",
                     "--epochs", "10", "--out", str(y)]) == 0
        assert not (tmp_path / "y.csv.stars.csv").exists()
        _, extra = load_embedding_csv(y)
        assert list(extra) == ["label"]

    def test_deterministic_outputs_identical(self, small_file, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            p = tmp_path / name
            main(["embed", "--input", str(small_file), "--anchors", "4", "--k", "10",
                  "--epochs", "15", "--seed", "3", "--deterministic", "--out", str(p)])
            outs.append((p.read_bytes(), open(f"{p}.stars.csv", "rb").read()))
        assert outs[0] == outs[1]

    def test_stage_failure_exit_1(self, small_file, tmp_path, capsys):
        code = main(["embed", "--input", str(small_file), "--anchors", "500",
                     "--out", str(tmp_path / "y.csv")])
        assert code == 1
        assert "stage anchors" in capsys.readouterr().err

    @pytest.mark.parametrize("flags", [["--anchors", "zero"], ["--lambda", "2"],
                                       ["--k", "0"], ["--method", "tsne"]])
    def test_bad_flags_exit_2(self, small_file, tmp_path, flags):
        with pytest.raises(SystemExit) as info:
            main(["embed", "--input", str(small_file), "--out", str(tmp_path / "y.csv")] + flags)
        assert info.value.code == 2


class TestEval:
    def identity_embedding(self, tmp_path):
        p = tmp_path / "id.csv"
        with open(p, "w") as fh:
            fh.write("y0,y1\n")
            for i in range(30):
                fh.write(f"{i % 7}.5,{i // 7}.25\n")
        orig = tmp_path / "orig.csv"
        with open(orig, "w") as fh:
            fh.write("x0,x1,label\n")
            for i in range(30):
                fh.write(f"{i % 7}.5,{i // 7}.25,{int(i % 7 > 3)}\n")
        return orig, p

    def test_identity_json(self, tmp_path, capsys):
        orig, emb = self.identity_embedding(tmp_path)
        assert main(["eval", "--original", str(orig), "--embedding", str(emb),
                     "--labels", "label", "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report) == {"knn_accuracy", "distance_correlation", "n_pairs_sampled",
                               "elapsed_seconds"}
        assert report["distance_correlation"] == pytest.approx(1.0, abs=1e-12)

    def test_csv_output(self, tmp_path, capsys):
        orig, emb = self.identity_embedding(tmp_path)
        main(["eval", "--original", str(orig), "--embedding", str(emb), "--csv"])
        header, row = capsys.readouterr().out.strip().splitlines()
        assert header.split(",") == list(CSV_FIELDS)
        assert row.startswith("id,orig,0,nan,")

    def test_repeats_add_sd(self, tmp_path, capsys):
        orig, emb = self.identity_embedding(tmp_path)
        main(["eval", "--original", str(orig), "--embedding", str(emb), "--repeats", "3"])
        report = json.loads(capsys.readouterr().out)
        assert report["distance_correlation_sd"] == 0.0

    def test_perfect_clusters(self, small_file, tmp_path, capsys):
        data = load_csv(small_file)
        emb = tmp_path / "perfect.csv"
        with open(emb, "w") as fh:
            fh.write("y0,y1\n")
            for i, lab in enumerate(data.labels["label"]):
                fh.write(f"{100.0 * lab + (i % 5) * 0.01},0.0\n")
        main(["eval", "--original", str(small_file), "--embedding", str(emb),
              "--labels", "label"])
        assert json.loads(capsys.readouterr().out)["knn_accuracy"] >= 0.99

    def test_row_mismatch_exit_1(self, small_file, tmp_path, capsys):
        emb = tmp_path / "short.csv"
        emb.write_text("y0,y1\n0,1\n2,3\n4,5\n")
        assert main(["eval", "--original", str(small_file), "--embedding", str(emb)]) == 1
        assert "mismatch" in capsys.readouterr().err


class TestPlot:
    def test_counts(self, small_file, tmp_path):
        y = tmp_path / "y.csv"
        main(["embed", "--input", str(small_file), "--anchors", "4", "--k", "10",
              "--epochs", "10", "--out", str(y)])
        svg = tmp_path / "y.svg"
        assert main(["plot", "--embedding", str(y), "--stars", f"{y}.stars.csv",
                     "--color-by", "label", "--out", str(svg)]) == 0
        text = svg.read_text()
        assert text.count("<circle") == 120
        assert text.count("<polygon") == 4

    def test_single_point(self, tmp_path):
        y = tmp_path / "one.csv"
        y.write_text("y0,y1\n0.5,-1.25\n")
        svg = tmp_path / "one.svg"
        main(["plot", "--embedding", str(y), "--out", str(svg), "--width", "300",
              "--height", "200"])
        assert 'cx="150.00" cy="100.00"' in svg.read_text()

    def test_three_columns_exit_1(self, tmp_path, capsys):
        y = tmp_path / "three.csv"
        y.write_text("y0,y1,y2\n0,1,2\n3,4,5\n")
        assert main(["plot", "--embedding", str(y), "--out", str(tmp_path / "x.svg")]) == 1
        assert "2-D" in capsys.readouterr().err

    def test_unknown_color_column_exit_1(self, tmp_path):
        y = tmp_path / "y.csv"
        y.write_text("y0,y1\n0,1\n2,3\n")
        assert main(["plot", "--embedding", str(y), "--color-by", "nope",
                     "--out", str(tmp_path / "x.svg")]) == 1


class TestCompare:
    def test_json_table(self, small_file, capsys):
        assert main(["compare", "--input", str(small_file), "--repeats", "2", "--anchors", "4",
                     "--k", "10", "--epochs", "10", "--deterministic"]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert [r["method"] for r in rows] == ["umap", "starmap"]
        assert all(r["runs"] == 2 and r["errors"] == [] for r in rows)


def test_module_entry_point_usage_error():
    proc = subprocess.run([sys.executable, "-m", "starmap", "embed"], capture_output=True,
                          text=True)
    assert proc.returncode == 2
    assert "required" in proc.stderr


def test_missing_input_exit_1(tmp_path, capsys):
    assert main(["embed", "--input", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "y.csv")]) == 1
