import numpy as np
import pytest

from starmap.datasets import LabeledDataset, synth_hierarchy
from starmap.optimizer import Hyperparams
from starmap.pipeline import RunConfig, StageError, compare, run


@pytest.fixture(scope="module")
def small():
    g = np.random.default_rng(0)
    centers = g.normal(scale=8, size=(6, 4))
    X = np.repeat(centers, 40, axis=0) + g.normal(size=(240, 4))
    return LabeledDataset(X, {"label": np.repeat(np.arange(6), 40)})


FAST = Hyperparams(k=10, n_epochs=40)


class TestRunConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(method="tsne")
        with pytest.raises(ValueError):
            RunConfig(method="starmap", anchors=0)
        assert RunConfig(anchors="auto").resolve_anchors(7500) == 15
        assert RunConfig(anchors=40).resolve_anchors(7500) == 40

    def test_with_seed(self):
        cfg = RunConfig(seed=1).with_seed(9)
        assert cfg.seed == 9 and cfg.hyperparams.seed == 9


class TestRun:
    def test_starmap_outputs(self, small):
        res = run(small, RunConfig("starmap", FAST, anchors=6))
        assert res.Y.shape == (240, 2)
        assert res.stars.shape == (6, 2)
        assert res.assignment.shape == (240,)
        assert res.stars.tobytes() == res.initial_stars.tobytes()
        assert res.report.knn_accuracy >= 0.95
        assert set(res.timings) == {"knn_graph", "anchors", "init", "optimize", "metrics"}

    def test_umap_outputs(self, small):
        res = run(small, RunConfig("umap", FAST))
        assert res.stars is None and res.assignment is None
        assert "anchors" not in res.timings
        assert res.report.knn_accuracy >= 0.95

    def test_referentially_transparent(self, small):
        cfg = RunConfig("starmap", FAST, anchors=6, seed=3)
        a, b = run(small, cfg), run(small, cfg)
        assert a.Y.tobytes() == b.Y.tobytes()
        assert a.stars.tobytes() == b.stars.tobytes()

    def test_plain_matrix_input(self, small):
        res = run(small.X, RunConfig("umap", FAST), evaluate_metrics=False)
        assert np.isnan(res.report.knn_accuracy)

    def test_stage_errors_are_tagged(self, small):
        with pytest.raises(StageError) as info:
            run(small.X[:5], RunConfig("umap", FAST))
        assert info.value.stage == "knn_graph"
        with pytest.raises(StageError) as info:
            run(small, RunConfig("starmap", FAST, anchors=500))
        assert info.value.stage == "anchors"

    def test_callback_sees_every_epoch(self, small):
        epochs = []
        run(small, RunConfig("umap", FAST), evaluate_metrics=False,
            callback=lambda e, Y: epochs.append(e))
        assert epochs == list(range(1, 41))


class TestCompare:
    def test_single_repeat_matches_run(self, small):
        cfg = RunConfig("umap", FAST, seed=2)
        (row,) = compare(small, [cfg])
        ref = run(small, cfg).report
        assert row.runs[0].knn_accuracy == ref.knn_accuracy
        assert row.runs[0].distance_correlation == ref.distance_correlation

    def test_same_seed_zero_sd(self, small):
        cfg = RunConfig("starmap", FAST, anchors=6, seed=5)
        (row,) = compare(small, [cfg], repeats=3, vary_seed=False)
        assert row.std("knn_accuracy") == 0.0
        assert row.std("distance_correlation") == 0.0

    def test_failures_recorded(self, small):
        bad = RunConfig("starmap", FAST, anchors=1000)
        good = RunConfig("umap", FAST)
        rows = compare(small, [bad, good], repeats=2)
        assert len(rows[0].errors) == 2 and rows[0].runs == []
        assert np.isnan(rows[0].mean("knn_accuracy"))
        assert len(rows[1].runs) == 2

    def test_rejects_zero_repeats(self, small):
        with pytest.raises(ValueError):
            compare(small, [RunConfig()], repeats=0)
