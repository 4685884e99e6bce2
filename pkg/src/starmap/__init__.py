"""StarMAP: neighbor embedding with PCA-anchored star attraction.

Typical use::

    from starmap import RunConfig, run, synth_hierarchy

    data = synth_hierarchy(seed=0)
    result = run(data, RunConfig(method="starmap", anchors=75))
    result.Y, result.stars, result.report
"""
from ._backend import BACKEND
from .core import Rng, euclidean_distance, squared_distance
from .datasets import LabeledDataset, load_csv, save_embedding_csv, synth_hierarchy
from .kmeans import Anchors, fit_anchors, heuristic_C, kmeans_fit
from .knn_graph import FuzzyGraph, KnnIndex, build_fuzzy_graph, build_knn
from .metrics import MetricReport, distance_correlation, knn_accuracy
from .optimizer import EmbeddingState, Hyperparams, optimize
from .pca import PcaModel, fit_pca, joint_embed, rescale_init, transform
from .pipeline import RunConfig, RunResult, compare, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Rng", "euclidean_distance", "squared_distance",
    "LabeledDataset", "load_csv", "save_embedding_csv", "synth_hierarchy",
    "Anchors", "fit_anchors", "heuristic_C", "kmeans_fit",
    "FuzzyGraph", "KnnIndex", "build_fuzzy_graph", "build_knn",
    "MetricReport", "distance_correlation", "knn_accuracy",
    "EmbeddingState", "Hyperparams", "optimize",
    "PcaModel", "fit_pca", "joint_embed", "rescale_init", "transform",
    "RunConfig", "RunResult", "compare", "run",
]
