"""Evaluation quantities: approximation error, share agreement, ranking
variance, cost accounting and removal/addition probes."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .game import GameSpec, UtilityCache, eval_mask


def epsilon(phi_hat, phi) -> float:
    """One minus the cosine similarity."""
    a = np.asarray(phi_hat, dtype=float)
    b = np.asarray(phi, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine error undefined for a zero vector")
    return float(1.0 - a @ b / (na * nb))


def _shares(phi_hat, phi):
    a = np.asarray(phi_hat, dtype=float)
    b = np.asarray(phi, dtype=float)
    if a.sum() == 0 or b.sum() == 0:
        raise ValueError("normalized shares undefined for a zero-sum vector")
    return a / a.sum(), b / b.sum()


def effectiveness_score(phi_hat, phi) -> float:
    """Signed sum of share differences.  Both share vectors sum to one, so this is 0 up to rounding."""
    a, b = _shares(phi_hat, phi)
    return float(np.sum(a - b))


def effectiveness_score_abs(phi_hat, phi) -> float:
    """Sum of absolute share differences."""
    a, b = _shares(phi_hat, phi)
    return float(np.sum(np.abs(a - b)))


def rank_positions(values, suppressed=None) -> np.ndarray:
    """Position of each player when sorted by descending value, ties by id,
    suppressed players last."""
    v = np.asarray(values, dtype=float)
    sup = np.zeros(len(v), dtype=bool) if suppressed is None else np.asarray(suppressed, dtype=bool)
    order = np.lexsort((np.arange(len(v)), -v, sup))
    pos = np.empty(len(v), dtype=int)
    pos[order] = np.arange(len(v))
    return pos


def ranking_variance(before, after, suppressed_before=None, suppressed_after=None) -> float:
    """Mean squared change in rank position."""
    if len(before) != len(after):
        raise ValueError("length mismatch")
    d = rank_positions(before, suppressed_before) - rank_positions(after, suppressed_after)
    return float(np.mean(d.astype(float) ** 2))


def utility_delta(game: GameSpec, p: int, mode: str = "remove", cache: UtilityCache | None = None) -> float:
    """remove: U(N - p) - U(N); add: U({p}) - U(empty)."""
    if p not in game.player_set:
        raise ValueError(f"player {p} not in game")
    full = (1 << game.n) - 1
    if mode == "remove":
        return eval_mask(game, full & ~(1 << p), cache, None) - eval_mask(game, full, cache, None)
    if mode == "add":
        return eval_mask(game, 1 << p, cache, None)
    raise ValueError(f"mode must be 'remove' or 'add', got {mode!r}")


def mc_variance_profile(stats) -> np.ndarray:
    """Per-player unbiased variance of recorded marginal contributions."""
    return stats.variance()


def spearman(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return float("nan")
    return float(spearmanr(a, b).statistic)


def probe_table(game: GameSpec, values, cache: UtilityCache | None = None) -> list[dict]:
    """Per player: normalized value and both utility deltas."""
    v = np.asarray(values, dtype=float)
    total = v.sum()
    norm = v / total if total != 0 else np.zeros_like(v)
    rows = []
    for p in range(game.n):
        rows.append({
            "player": p,
            "normalized_sv": float(norm[p]),
            "delta_remove": utility_delta(game, p, "remove", cache),
            "delta_add": utility_delta(game, p, "add", cache),
        })
    return rows


@dataclass
class RunMetrics:
    n_uc: int
    t_uc_mean: float
    total_time: float
    queries: int = 0
    epsilon: float | None = None
    effectiveness_score: float | None = None
    effectiveness_score_abs: float | None = None
    ranking_variance: float | None = None
    probe: list = field(default_factory=list)
    probe_spearman: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)
