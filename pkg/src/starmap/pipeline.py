"""End-to-end runs: kNN graph, anchors, PCA initialization, optimization, metrics."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .core import as_data_matrix
from .datasets import LabeledDataset
from .kmeans import PREREDUCE_THRESHOLD, fit_anchors, heuristic_C
from .knn_graph import build_fuzzy_graph
from .metrics import MetricReport, evaluate, population_sd
from .optimizer import EmbeddingState, Hyperparams, optimize
from .pca import fit_pca, joint_embed, rescale_init, transform

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    method: str = "starmap"
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    anchors: Union[int, str] = "auto"
    prereduce_threshold: int = PREREDUCE_THRESHOLD
    deterministic: bool = True
    seed: int = 0
    label_column: Optional[str] = None

    def __post_init__(self):
        if self.method not in ("umap", "starmap"):
            raise ValueError(f"method must be 'umap' or 'starmap', got {self.method!r}")
        if self.method == "starmap":
            if not (self.anchors == "auto" or (isinstance(self.anchors, int) and self.anchors >= 1)):
                raise ValueError(f"anchors must be a positive integer or 'auto', got {self.anchors!r}")

    def resolve_anchors(self, n):
        return heuristic_C(n) if self.anchors == "auto" else int(self.anchors)

    def with_seed(self, seed):
        return replace(self, seed=seed, hyperparams=replace(self.hyperparams, seed=seed))


@dataclass
class RunResult:
    Y: np.ndarray
    stars: Optional[np.ndarray]
    assignment: Optional[np.ndarray]
    report: MetricReport
    initial_stars: Optional[np.ndarray] = None
    timings: dict = field(default_factory=dict)


class _Stage:
    def __init__(self, name, timings):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.name] = time.perf_counter() - self.start
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def run(data, cfg, evaluate_metrics=True, callback=None):
    """Embed ``data`` (LabeledDataset or matrix) according to ``cfg``.

    Stages run in order: knn_graph, anchors (starmap), init, optimize,
    metrics.  Failures are re-raised as StageError tagged with the stage.
    """
    if not isinstance(data, LabeledDataset):
        data = LabeledDataset(as_data_matrix(data))
    X = as_data_matrix(data.X)
    n = X.shape[0]
    params = cfg.hyperparams
    if params.seed != cfg.seed:
        params = replace(params, seed=cfg.seed)
    timings = {}
    started = time.perf_counter()

    with _Stage("knn_graph", timings):
        if n < params.k + 1:
            raise ValueError(f"need more than k={params.k} points, got {n}")
        graph, _ = build_fuzzy_graph(X, params.k)

    S = assignment = None
    if cfg.method == "starmap":
        with _Stage("anchors", timings):
            C = cfg.resolve_anchors(n)
            if C > n:
                raise ValueError(f"{C} anchors requested for {n} points")
            anchors = fit_anchors(X, C, seed=cfg.seed, threshold_D=cfg.prereduce_threshold)
            assignment = anchors.assignment
        with _Stage("init", timings):
            Y0, S0 = joint_embed(X, anchors.centers, params.q, seed=cfg.seed)
            Y0, S = rescale_init(Y0, S0)
            S = np.ascontiguousarray(S)
            initial_stars = S.copy()
    else:
        initial_stars = None
        with _Stage("init", timings):
            Y0 = transform(fit_pca(X, params.q, seed=cfg.seed), X)
            Y0, _ = rescale_init(Y0)

    with _Stage("optimize", timings):
        state = EmbeddingState(Y0, S, assignment)
        state = optimize(state, graph, params, cfg.method,
                         deterministic=cfg.deterministic, callback=callback)
    elapsed = time.perf_counter() - started

    with _Stage("metrics", timings):
        if evaluate_metrics:
            labels = data.label(cfg.label_column) if data.labels else None
            report = evaluate(X, state.Y, labels, seed=cfg.seed)
            report.elapsed_seconds = elapsed
        else:
            report = MetricReport(float("nan"), float("nan"), 0, elapsed)
    log.info("%s run finished in %.2fs (%s)", cfg.method, elapsed,
             ", ".join(f"{k}={v:.2f}s" for k, v in timings.items()))
    return RunResult(state.Y, S, assignment, report, initial_stars, timings)


@dataclass
class CompareRow:
    method: str
    anchors: Union[int, str, None]
    runs: list
    errors: list

    def _values(self, name):
        return np.array([getattr(r, name) for r in self.runs], dtype=np.float64)

    def mean(self, name):
        v = self._values(name)
        return float(v.mean()) if v.size else float("nan")

    def std(self, name):
        return population_sd(self._values(name))


def compare(data, configs, repeats=1, vary_seed=True):
    """Run every config ``repeats`` times with seeds ``cfg.seed + r``.

    With ``vary_seed=False`` every repeat reuses ``cfg.seed``, which in
    deterministic mode reproduces the same run.  A failing run is
    recorded in the row's ``errors`` and the comparison continues.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    rows = []
    for cfg in configs:
        runs, errors = [], []
        for r in range(repeats):
            seed = cfg.seed + r if vary_seed else cfg.seed
            try:
                runs.append(run(data, cfg.with_seed(seed)).report)
            except StageError as exc:
                errors.append((seed, str(exc)))
        anchors = cfg.anchors if cfg.method == "starmap" else None
        rows.append(CompareRow(cfg.method, anchors, runs, errors))
    return rows
