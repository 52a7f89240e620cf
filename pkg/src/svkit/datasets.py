"""Tabular data: CSV ingestion, seeded splits and the built-in datasets."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class TableError(ValueError):
    pass


@dataclass
class Table:
    X: np.ndarray
    y: np.ndarray
    feature_names: list = field(default_factory=list)
    label_name: str = "label"
    n_classes: int | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise TableError("features must be a 2-d array")
        self.y = np.asarray(self.y, dtype=int)
        if len(self.y) != len(self.X):
            raise TableError(f"{len(self.X)} feature rows but {len(self.y)} labels")
        if not self.feature_names:
            self.feature_names = [f"x{i}" for i in range(self.X.shape[1])]
        if self.n_classes is None:
            self.n_classes = int(self.y.max()) + 1 if len(self.y) else 0
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= self.n_classes):
            raise TableError(f"labels must lie in 0..{self.n_classes - 1}")

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def rows(self):
        return list(zip(self.X, self.y))

    def __len__(self):
        return self.n_rows

    def subset(self, idx) -> "Table":
        idx = np.asarray(idx, dtype=int)
        return Table(self.X[idx], self.y[idx], list(self.feature_names), self.label_name, self.n_classes)

    def concat(self, other: "Table") -> "Table":
        return Table(np.vstack([self.X, other.X]), np.concatenate([self.y, other.y]),
                     list(self.feature_names), self.label_name, max(self.n_classes, other.n_classes))


@dataclass
class SplitTable:
    train: Table
    test: Table
    ratio: float = 0.8
    train_idx: np.ndarray | None = None
    test_idx: np.ndarray | None = None


def _parse_float(cell: str):
    try:
        return float(cell)
    except ValueError:
        return None


def load_table(path, label: str = "label") -> Table:
    """Read a comma-separated file with a header row.

    Non-numeric columns are integer-encoded by order of first appearance.
    The label column is encoded the same way when non-numeric; numeric labels
    are mapped to 0..C-1 in sorted order.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        records = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if header is not None and len(row) != len(header):
                raise TableError(f"{path} line {line_no}: expected {len(header)} fields, got {len(row)}")
            records.append((line_no, [c.strip() for c in row]))
    if header is None or not records:
        raise TableError(f"{path}: no rows")
    header = [h.strip() for h in header]
    if label not in header:
        raise TableError(f"{path}: label column {label!r} not in header {header}")

    columns = []
    for j, name in enumerate(header):
        cells = [(ln, r[j]) for ln, r in records]
        for ln, c in cells:
            if c == "":
                raise TableError(f"{path} line {ln}: empty value in column {name!r}")
        parsed = [_parse_float(c) for _, c in cells]
        if all(v is not None for v in parsed):
            columns.append(np.array(parsed))
        else:
            codes: dict[str, int] = {}
            columns.append(np.array([codes.setdefault(c, len(codes)) for _, c in cells], dtype=float))

    li = header.index(label)
    raw_label = columns[li]
    label_cells = [r[li] for _, r in records]
    if all(_parse_float(c) is not None for c in label_cells):
        classes = np.unique(raw_label)
        y = np.searchsorted(classes, raw_label)
    else:
        y = raw_label.astype(int)
    feats = [c for j, c in enumerate(columns) if j != li]
    names = [h for j, h in enumerate(header) if j != li]
    X = np.column_stack(feats) if feats else np.zeros((len(records), 0))
    return Table(X, y, names, label)


def split(t: Table, ratio: float = 0.8, seed: int = 0) -> SplitTable:
    if not 0 < ratio < 1:
        raise TableError(f"split ratio must lie in (0, 1), got {ratio}")
    if t.n_rows < 2:
        raise TableError("need at least two rows to split")
    order = np.random.default_rng(seed).permutation(t.n_rows)
    k = min(max(int(math.floor(ratio * t.n_rows)), 1), t.n_rows - 1)
    tr, te = order[:k], order[k:]
    return SplitTable(t.subset(tr), t.subset(te), ratio, tr, te)


def blobs(n_rows: int, n_classes: int, n_features: int = 2, seed: int = 0, spread: float = 1.5) -> Table:
    from sklearn.datasets import make_blobs
    X, y = make_blobs(n_samples=n_rows, centers=n_classes, n_features=n_features,
                      cluster_std=spread, random_state=seed)
    return Table(X, y, [f"x{i}" for i in range(n_features)])


def _sklearn(name: str) -> Table:
    from sklearn import datasets as skd
    loader = {"iris": skd.load_iris, "wine": skd.load_wine, "digits": skd.load_digits}[name]
    b = loader()
    names = list(getattr(b, "feature_names", [])) or [f"x{i}" for i in range(b.data.shape[1])]
    return Table(b.data, b.target, [str(n) for n in names], "label")


BUILTIN = ("blobs2", "blobs4", "iris", "wine", "digits")


def load_dataset(name: str, seed: int = 0, n_rows: int | None = None, label: str = "label") -> Table:
    """Built-in dataset by name, or a CSV path.  ``n_rows`` subsamples (seeded)."""
    if name == "blobs2":
        t = blobs(n_rows or 300, 2, 2, seed, spread=2.5)
    elif name == "blobs4":
        t = blobs(n_rows or 600, 4, 4, seed, spread=2.5)
    elif name in ("iris", "wine", "digits"):
        t = _sklearn(name)
    else:
        p = Path(name)
        if not p.exists():
            raise TableError(f"unknown dataset {name!r}: not one of {BUILTIN} and no such file")
        t = load_table(p, label)
    if n_rows is not None and n_rows < t.n_rows:
        idx = np.sort(np.random.default_rng(seed).choice(t.n_rows, n_rows, replace=False))
        t = t.subset(idx)
    return t


def minmax_scale(t: Table) -> Table:
    lo, hi = t.X.min(axis=0), t.X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return Table((t.X - lo) / span, t.y.copy(), list(t.feature_names), t.label_name, t.n_classes)
