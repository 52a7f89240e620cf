"""Exact Shapley values by enumerating every coalition."""
from __future__ import annotations

import math
import time

import numpy as np

from ..game import Counters, GameError, GameSpec, UtilityCache, all_utilities
from .core import ShapleyResult

MAX_EXACT_N = 25


def shapley_weights(n: int) -> np.ndarray:
    """w[s] = s!(n-s-1)!/n!, the weight of a coalition of size s not containing the player."""
    return np.array([math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n) for s in range(n)])


def popcount(masks: np.ndarray) -> np.ndarray:
    c = np.zeros_like(masks)
    m = masks.copy()
    while np.any(m):
        c += m & 1
        m >>= 1
    return c


def shapley_from_table(table: np.ndarray, with_variance: bool = False):
    """Exact Shapley values of the game whose utilities are ``table[mask]``.

    With ``with_variance`` also returns, per player, the variance of the
    marginal contribution over a uniformly random permutation.
    """
    table = np.asarray(table, dtype=float)
    n = int(round(math.log2(len(table))))
    masks = np.arange(1 << n, dtype=np.int64)
    sizes = popcount(masks)
    w = shapley_weights(n)
    phi = np.zeros(n)
    var = np.zeros(n)
    for i in range(n):
        without = masks[(masks >> i) & 1 == 0]
        marg = table[without | (1 << i)] - table[without]
        wi = w[sizes[without]]
        phi[i] = wi @ marg
        if with_variance:
            var[i] = wi @ (marg - phi[i]) ** 2
    return (phi, var) if with_variance else phi


def exact_shapley(game: GameSpec, force: bool = False, cache: UtilityCache | None = None) -> ShapleyResult:
    n = game.n
    if n > MAX_EXACT_N and not force:
        raise GameError(f"exact enumeration needs 2^{n} utilities; refusing for n > {MAX_EXACT_N} without force")
    t0 = time.perf_counter()
    counters = Counters()
    table = all_utilities(game, cache if cache is not None else UtilityCache(), counters, max_n=n)
    phi, var = shapley_from_table(table, with_variance=True)
    counters.queries = (1 << n) - 1
    return ShapleyResult(values=phi, n_uc=counters.n_uc, wall_time=time.perf_counter() - t0,
                         converged=True, trace=[], algo="exact", queries=counters.queries,
                         t_uc_mean=counters.t_uc_mean, stop_reason="exhaustive",
                         mc_variance=var, u_grand=float(table[-1]))
