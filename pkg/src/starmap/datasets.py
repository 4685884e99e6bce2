"""Synthetic hierarchical clusters and CSV input/output.

CSV conventions: UTF-8, ``\\n`` line endings, a header row, floats written
with ``repr`` (shortest string that round-trips, at most 17 significant
digits).  When a file is read without explicit label columns, header
names starting with ``label`` or ``level`` are treated as labels and every
other column as a feature.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Rng, as_data_matrix

LARGE, INTERMEDIATE, SMALL, POINTS_PER_CLUSTER = 5, 5, 3, 100
LABEL_PREFIXES = ("label", "level")


class CsvFormatError(ValueError):
    pass


@dataclass
class LabeledDataset:
    X: np.ndarray
    labels: dict = field(default_factory=dict)
    names: dict = field(default_factory=dict)
    feature_names: Optional[list] = None

    @property
    def n(self):
        return self.X.shape[0]

    def label(self, column=None):
        """One label column; defaults to the last (finest) one."""
        if not self.labels:
            return None
        if column is None:
            column = list(self.labels)[-1]
        if isinstance(column, int) and column not in self.labels:
            column = list(self.labels)[column]
        try:
            return self.labels[column]
        except KeyError:
            raise KeyError(f"no label column {column!r}; have {list(self.labels)}") from None


def _ring(center, radius, count, phase):
    angles = phase + 2.0 * math.pi * np.arange(count) / count
    return center + radius * np.column_stack([np.cos(angles), np.sin(angles)])


def synth_hierarchy(seed=0, spread=(10.0, 2.0, 0.4), noise_sd=0.08):
    """Three-level nested Gaussian clusters in 2-D.

    Five large centers sit on a circle of radius ``spread[0]``; each has
    five intermediate centers on a circle of radius ``spread[1]`` and each
    of those three small centers on a circle of radius ``spread[2]``.  Each
    small center gets 100 isotropic Gaussian points.  Only the noise
    depends on ``seed``; centers and labels are fixed.

    Returns a LabeledDataset with 7500 rows and label columns
    ``level0`` (5 classes), ``level1`` (25) and ``level2`` (75).
    """
    s0, s1, s2 = (float(s) for s in spread)
    if not s0 > s1 > s2 > 0:
        raise ValueError(f"spread must be strictly decreasing and positive, got {spread}")
    centers = []
    tags = []
    for c0, big in enumerate(_ring(np.zeros(2), s0, LARGE, 0.0)):
        for c1, mid in enumerate(_ring(big, s1, INTERMEDIATE, 2.0 * math.pi * c0 / (LARGE * 3))):
            for c2, small in enumerate(_ring(mid, s2, SMALL, 2.0 * math.pi * c1 / (INTERMEDIATE * 4))):
                centers.append(small)
                tags.append((c0, c1, c2))
    centers = np.asarray(centers)
    tags = np.asarray(tags)
    n_small = centers.shape[0]
    noise = Rng(seed).normal(n_small * POINTS_PER_CLUSTER * 2, scale=noise_sd)
    X = np.repeat(centers, POINTS_PER_CLUSTER, axis=0) + noise.reshape(-1, 2)
    t = np.repeat(tags, POINTS_PER_CLUSTER, axis=0)
    level0 = t[:, 0]
    level1 = level0 * INTERMEDIATE + t[:, 1]
    level2 = level1 * SMALL + t[:, 2]
    labels = {"level0": level0, "level1": level1, "level2": level2}
    return LabeledDataset(X, labels, {}, ["x0", "x1"])


def _is_label_name(name):
    return name.strip().lower().startswith(LABEL_PREFIXES)


def _factorize(values):
    names = []
    lookup = {}
    codes = np.empty(len(values), dtype=np.int64)
    try:
        keyed = sorted(set(values), key=float)
    except ValueError:
        keyed = sorted(set(values))
    for v in keyed:
        lookup[v] = len(names)
        names.append(v)
    for i, v in enumerate(values):
        codes[i] = lookup[v]
    return codes, names


def load_csv(path, has_header=True, label_cols=None):
    """Read a rectangular CSV into a LabeledDataset.

    Parameters
    ----------
    path : str or Path
    has_header : bool
        Whether the first row holds column names.
    label_cols : list of str or int, optional
        Columns holding class labels.  ``None`` selects header names that
        start with ``label``/``level`` (no labels when there is no header).
        Labels are factorized to dense integers in sorted order; the
        original values are kept in ``names``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise CsvFormatError(f"{path}: empty file")
    if has_header:
        header = [h.strip() for h in rows[0]]
        body = rows[1:]
        first_line = 2
    else:
        header = [f"c{j}" for j in range(len(rows[0]))]
        body = rows
        first_line = 1
    width = len(header)
    if not body:
        raise CsvFormatError(f"{path}: no data rows")
    for r, row in enumerate(body):
        if len(row) != width:
            raise CsvFormatError(
                f"{path}: line {r + first_line} has {len(row)} fields, expected {width}")

    if label_cols is None:
        label_idx = [j for j, h in enumerate(header) if has_header and _is_label_name(h)]
    else:
        label_idx = []
        for col in label_cols:
            if isinstance(col, int):
                if not 0 <= col < width:
                    raise CsvFormatError(f"{path}: label column index {col} out of range")
                label_idx.append(col)
            elif col in header:
                label_idx.append(header.index(col))
            else:
                raise CsvFormatError(f"{path}: missing label column {col!r}")
    feature_idx = [j for j in range(width) if j not in label_idx]
    if not feature_idx:
        raise CsvFormatError(f"{path}: no feature columns")

    X = np.empty((len(body), len(feature_idx)))
    for r, row in enumerate(body):
        for c, j in enumerate(feature_idx):
            try:
                X[r, c] = float(row[j])
            except ValueError:
                raise CsvFormatError(
                    f"{path}: line {r + first_line}, column {header[j]!r}: "
                    f"cannot parse {row[j]!r} as a number") from None
    labels, names = {}, {}
    for j in label_idx:
        codes, table = _factorize([row[j].strip() for row in body])
        labels[header[j]] = codes
        names[header[j]] = table
    X = as_data_matrix(X)
    return LabeledDataset(X, labels, names, [header[j] for j in feature_idx])


def _fmt(x):
    return repr(float(x))


def save_csv(path, dataset):
    """Write features followed by label columns."""
    X = dataset.X
    fnames = dataset.feature_names or [f"x{j}" for j in range(X.shape[1])]
    lnames = list(dataset.labels)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(fnames + lnames) + "\n")
        cols = [dataset.labels[name] for name in lnames]
        for i, row in enumerate(X.tolist()):
            fields = [_fmt(x) for x in row] + [str(int(c[i])) for c in cols]
            fh.write(",".join(fields) + "\n")


def stars_path_for(path):
    return f"{path}.stars.csv"


def save_embedding_csv(path, Y, labels=None, stars=None, assignment=None, stars_path=None):
    """Write an embedding, and optionally its stars, as CSV.

    The embedding header is ``y0,y1,...`` followed by ``label`` when
    ``labels`` is an array, or by each key when it is a dict of named
    columns, and by ``anchor`` when ``assignment`` is given.  Stars go to
    ``stars_path`` (default ``<path>.stars.csv``) with header
    ``s0,s1,...,anchor_id``.
    """
    Y = np.asarray(Y, dtype=np.float64)
    n, q = Y.shape
    if labels is None:
        label_cols = {}
    elif isinstance(labels, dict):
        label_cols = dict(labels)
    else:
        label_cols = {"label": labels}
    if assignment is not None:
        label_cols["anchor"] = assignment
    for name, col in label_cols.items():
        if len(col) != n:
            raise ValueError(f"column {name!r} has {len(col)} entries, expected {n}")
    header = [f"y{d}" for d in range(q)] + list(label_cols)
    cols = [np.asarray(c) for c in label_cols.values()]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i, row in enumerate(Y.tolist()):
            fields = [_fmt(x) for x in row] + [str(c[i]) for c in cols]
            fh.write(",".join(fields) + "\n")
    if stars is not None:
        stars = np.asarray(stars, dtype=np.float64)
        target = stars_path or stars_path_for(path)
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join([f"s{d}" for d in range(stars.shape[1])] + ["anchor_id"]) + "\n")
            for c, row in enumerate(stars.tolist()):
                fh.write(",".join([_fmt(x) for x in row] + [str(c)]) + "\n")
        return target
    return None


def load_embedding_csv(path):
    """Read an embedding written by ``save_embedding_csv``.

    Returns ``(Y, columns)`` where ``columns`` maps every non-coordinate
    header name to its raw string values.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise CsvFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    coord = [j for j, h in enumerate(header) if h[:1] in ("y", "s") and h[1:].isdigit()]
    if not coord:
        raise CsvFormatError(f"{path}: no coordinate columns (y0, y1, ...)")
    body = rows[1:]
    Y = np.empty((len(body), len(coord)))
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise CsvFormatError(f"{path}: line {r + 2} has {len(row)} fields, expected {len(header)}")
        for c, j in enumerate(coord):
            try:
                Y[r, c] = float(row[j])
            except ValueError:
                raise CsvFormatError(f"{path}: line {r + 2}: cannot parse {row[j]!r}") from None
    extra = {header[j]: [row[j] for row in body] for j in range(len(header)) if j not in coord}
    return Y, extra
