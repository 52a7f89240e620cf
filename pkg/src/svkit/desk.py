"""Reduced-scale presets of the four game families used by the CLI and the
acceptance suite."""
from __future__ import annotations

import numpy as np

from .builtin_games import make_game, shard_indices
from .datasets import SplitTable, Table, load_dataset, minmax_scale, split
from .game import GameSpec

DEFAULT_DATASET = {"RI": "iris", "DV": "blobs2", "DSV": "blobs4", "FL": "blobs4"}
DEFAULT_N = {"RI": None, "DV": 12, "DSV": 10, "FL": 10}


def flip_labels(t: Table, rows, seed: int) -> Table:
    """Replace the labels of ``rows`` by a different class (seeded)."""
    y = t.y.copy()
    rng = np.random.default_rng(seed)
    for r in rows:
        y[r] = (y[r] + 1 + rng.integers(t.n_classes - 1)) % t.n_classes
    return Table(t.X.copy(), y, list(t.feature_names), t.label_name, t.n_classes)


def dv_split(n: int, seed: int, dataset: str = "blobs2", flipped: float = 0.25,
             background: int = 0, test_rows: int = 100):
    """Split whose first ``n`` training rows are the valued tuples, a ``flipped``
    share of them with corrupted labels, followed by ``background`` rows every
    coalition trains on.  Returns (split, flipped row indices)."""
    t = load_dataset(dataset, seed, n_rows=max(n + background + test_rows, 60))
    order = np.random.default_rng(seed).permutation(t.n_rows)
    tr, te = order[:n + background], order[n + background:]
    s = SplitTable(t.subset(tr), t.subset(te), len(tr) / t.n_rows, tr, te)
    k = int(round(flipped * n))
    rows = np.sort(np.random.default_rng(seed + 1).choice(n, k, replace=False)) if k else np.zeros(0, int)
    return SplitTable(flip_labels(s.train, rows, seed), s.test, s.ratio, s.train_idx, s.test_idx), rows


def desk_game(task: str, n: int | None = None, seed: int = 0, dataset: str | None = None,
              **kw) -> GameSpec:
    task = task.upper()
    dataset = dataset or DEFAULT_DATASET[task]
    n = n if n is not None else DEFAULT_N[task]
    if task == "RI":
        t = load_dataset(dataset, seed)
        if kw.pop("scale", False):
            t = minmax_scale(t)
        return make_game("RI", split(t, 0.8, seed), n, seed, **kw)
    if task == "DV":
        background = kw.pop("background", 0)
        s, rows = dv_split(n, seed, dataset, kw.pop("flipped", 0.25), background, kw.pop("test_rows", 100))
        g = make_game("DV", s, n, seed, **kw)
        g.meta["flipped_rows"] = rows
        return g
    if task in ("DSV", "FL"):
        t = load_dataset(dataset, seed)
        s = split(t, 0.8, seed)
        if task == "DSV":
            # shards get increasing label noise so their values differ
            groups = shard_indices(s.train.n_rows, n, seed)
            noisy = []
            rng = np.random.default_rng(seed + 2)
            for j, g in enumerate(groups):
                rate = 0.6 * j / max(n - 1, 1)
                noisy.extend(g[rng.random(len(g)) < rate])
            s = SplitTable(flip_labels(s.train, noisy, seed), s.test, s.ratio, s.train_idx, s.test_idx)
            kw.setdefault("shards", groups)
        return make_game(task, s, n, seed, **kw)
    raise ValueError(f"unknown task {task!r}")
