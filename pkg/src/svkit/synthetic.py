"""Small closed-form and tabulated games.

These are the reference games for estimator tests: their utility tables are
materialised over all 2^n coalitions so exact Shapley values are cheap.
"""
from __future__ import annotations

import numpy as np

from .game import GameSpec, PlayerSet, TableUtility, members_of


def _popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    counts = np.zeros(1 << n, dtype=int)
    for i in range(n):
        counts += (masks >> i) & 1
    return counts


def _membership(n: int) -> np.ndarray:
    """(2^n, n) boolean matrix, row ``mask`` is the indicator of that coalition."""
    masks = np.arange(1 << n)
    return ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)


def table_game(table, label: str = "table", seed: int = 0) -> GameSpec:
    table = np.asarray(table, dtype=float)
    n = int(round(np.log2(len(table))))
    return GameSpec(PlayerSet(n), TableUtility(table, label), seed, label)


def game_from_dict(values: dict, n: int, label: str = "table") -> GameSpec:
    """Build a table game from ``{frozenset_of_players: utility}``; missing coalitions are 0."""
    table = np.zeros(1 << n)
    for members, v in values.items():
        m = 0
        for p in members:
            m |= 1 << p
        table[m] = v
    return table_game(table, label)


def additive_game(values) -> GameSpec:
    v = np.asarray(values, dtype=float)
    table = _membership(len(v)) @ v
    return table_game(table, "additive")


def symmetric_game(n: int, scale: float = 1.0) -> GameSpec:
    """U(S) = scale * |S|."""
    return table_game(scale * _popcounts(n).astype(float), "symmetric")


def dominant_game(n: int, value: float = 10.0, player: int = 0) -> GameSpec:
    """U(S) = value if ``player`` is in S else 0."""
    masks = np.arange(1 << n)
    return table_game(np.where((masks >> player) & 1, value, 0.0), "dominant")


def three_player_game() -> GameSpec:
    """Worked example with exact SV (5/3, 8/3, 11/3)."""
    return game_from_dict({
        (0,): 1, (1,): 2, (2,): 3,
        (0, 1): 4, (0, 2): 5, (1, 2): 6,
        (0, 1, 2): 8,
    }, 3, "three-player")


def random_table_game(n: int, seed: int = 0, noise: float = 0.05) -> GameSpec:
    """Saturating random game: U(S) = 1 - exp(-sum_{i in S} w_i / s) + eta_S.

    Player weights ``w`` are drawn uniformly from [0.2, 1.0]; ``s`` is half the
    total weight so the grand coalition sits near 0.86.  Each nonempty
    coalition gets an independent perturbation ``eta_S ~ U(-noise, noise)``.
    The shape mimics accuracy curves of model-training utilities.
    """
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.2, 1.0, n)
    s = w.sum() / 2
    table = 1.0 - np.exp(-(_membership(n) @ w) / s)
    table += rng.uniform(-noise, noise, 1 << n)
    table[0] = 0.0
    g = table_game(table, f"random-table(n={n}, seed={seed})", seed)
    g.meta["weights"] = w
    return g


def uniform_random_game(n: int, seed: int = 0) -> GameSpec:
    """Every nonempty coalition's utility drawn independently from U(0, 1)."""
    rng = np.random.default_rng(seed)
    table = rng.uniform(0.0, 1.0, 1 << n)
    table[0] = 0.0
    return table_game(table, f"uniform-random(n={n}, seed={seed})", seed)


def symmetrize(game_table: np.ndarray, i: int, j: int) -> np.ndarray:
    """Table of the game in which players ``i`` and ``j`` are interchangeable."""
    t = np.asarray(game_table, dtype=float)
    masks = np.arange(len(t))
    bi = (masks >> i) & 1
    bj = (masks >> j) & 1
    swapped = masks & ~((1 << i) | (1 << j)) | (bi << j) | (bj << i)
    return 0.5 * (t + t[swapped])


def add_dummy(game_table: np.ndarray) -> np.ndarray:
    """Extend an n-player table with a dummy player n (U(S + dummy) = U(S))."""
    t = np.asarray(game_table, dtype=float)
    return np.concatenate([t, t])


def describe(mask: int) -> tuple[int, ...]:
    return tuple(members_of(mask))
