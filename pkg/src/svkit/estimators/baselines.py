"""Cheap non-sampling baselines: leave-one-out, uniform division and the
closed form for linear models."""
from __future__ import annotations

import time

import numpy as np

from ..game import Counters, GameSpec, UtilityCache, eval_mask
from .core import ShapleyResult


def linear_closed_form(model, explicand, train_means, target: int | None = None) -> np.ndarray:
    """w_i (x_i - mean_i) per feature for a linear output.

    ``model`` is either a weight vector or a :class:`LinearModel` (then the raw
    feature weights of output ``target`` are used).
    """
    if hasattr(model, "effective_weights"):
        W, _ = model.effective_weights()
        w = W[model.n_classes - 1 if target is None else target]
    else:
        w = np.asarray(model, dtype=float)
    x = np.asarray(explicand, dtype=float)
    mu = np.asarray(train_means, dtype=float)
    if not (w.shape == x.shape == mu.shape):
        raise ValueError(f"dimension mismatch: weights {w.shape}, explicand {x.shape}, means {mu.shape}")
    return w * (x - mu)


def _run(game, cache, body, algo):
    t0 = time.perf_counter()
    counters = Counters()
    cache = cache if cache is not None else UtilityCache()
    values = body(lambda m: eval_mask(game, m, cache, counters))
    return ShapleyResult(values=np.asarray(values, dtype=float), n_uc=counters.n_uc,
                         wall_time=time.perf_counter() - t0, converged=True, algo=algo,
                         queries=counters.n_uc, t_uc_mean=counters.t_uc_mean, stop_reason="exhaustive")


def loo_result(game: GameSpec, cache: UtilityCache | None = None) -> ShapleyResult:
    full = (1 << game.n) - 1

    def body(u):
        g = u(full)
        return [g - u(full & ~(1 << i)) for i in range(game.n)]
    return _run(game, cache, body, "LOO")


def uniform_result(game: GameSpec, cache: UtilityCache | None = None) -> ShapleyResult:
    full = (1 << game.n) - 1
    return _run(game, cache, lambda u: np.full(game.n, u(full) / game.n), "UNIF")


def loo_values(game: GameSpec, cache: UtilityCache | None = None) -> np.ndarray:
    """U(N) - U(N minus i) for every player."""
    return loo_result(game, cache).values


def uniform_division(game: GameSpec, cache: UtilityCache | None = None) -> np.ndarray:
    """U(N)/n for every player."""
    return uniform_result(game, cache).values
