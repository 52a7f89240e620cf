"""Shared machinery for estimator runs: result record, marginal statistics
and the evaluation session (cache, counters, truncation, convergence clock)."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..convergence import DEFAULT_MAX_EVALS, DEFAULT_TAU, ConvergenceState, NotReady, update_and_check
from ..game import Counters, GameSpec, UtilityCache, UtilityError, eval_mask


@dataclass
class ShapleyResult:
    values: np.ndarray
    n_uc: int
    wall_time: float
    converged: bool
    trace: list = field(default_factory=list)
    algo: str = ""
    queries: int = 0
    truncated: int = 0
    t_uc_mean: float = 0.0
    stop_reason: str = ""
    mc_variance: np.ndarray | None = None
    flags: dict = field(default_factory=dict)
    u_grand: float | None = None

    @property
    def n(self) -> int:
        return len(self.values)


class MarginalStats:
    """Per-player running mean and variance (Welford) of marginal contributions."""

    def __init__(self, n: int):
        self.n = n
        self.count = np.zeros(n, dtype=np.int64)
        self.mean = np.zeros(n)
        self.m2 = np.zeros(n)

    @property
    def total(self) -> np.ndarray:
        return self.mean * self.count

    def add(self, p: int, x: float) -> None:
        self.count[p] += 1
        d = x - self.mean[p]
        self.mean[p] += d / self.count[p]
        self.m2[p] += d * (x - self.mean[p])

    def add_many(self, values: np.ndarray) -> None:
        for p, x in enumerate(values):
            self.add(p, float(x))

    def variance(self) -> np.ndarray:
        """Unbiased sample variance; raises if any player has fewer than 2 marginals."""
        short = np.flatnonzero(self.count < 2)
        if len(short):
            raise ValueError(f"players {short.tolist()} have fewer than 2 recorded marginals")
        return self.m2 / (self.count - 1)


def kernel_size_probs(n: int) -> np.ndarray:
    """P(size=k) proportional to 1/k + 1/(n-k) for k in 1..n-1 (0 at the endpoints).

    Both the regression kernel and the group-testing design reduce to this.
    """
    p = np.zeros(n + 1)
    k = np.arange(1, n)
    p[1:n] = 1.0 / k + 1.0 / (n - k)
    return p / p.sum()


class Session:
    """One estimator run.

    ``u(mask)`` returns a utility and advances the query clock; cache misses
    count towards ``n_uc``.  Every ``n`` queries the current estimate is
    snapshotted into the trace and, if a convergence state is attached,
    tested.  ``done`` becomes true on convergence, at ``max_evals`` queries,
    or when a fixed budget is spent (the estimator sets that itself).
    """

    def __init__(self, game: GameSpec, *, tau: float | None = DEFAULT_TAU,
                 max_evals: int = DEFAULT_MAX_EVALS, tc_ratio: float | None = None,
                 cache: UtilityCache | None = None, convergence: ConvergenceState | None = None):
        self.game = game
        self.n = game.n
        self.cache = cache if cache is not None else UtilityCache()
        self.counters = Counters()
        self.max_evals = int(max_evals)
        if convergence is not None:
            self.conv = convergence
            self.max_evals = int(convergence.max_evals)
        elif tau is not None:
            self.conv = ConvergenceState(self.n, tau, self.max_evals)
        else:
            self.conv = None
        self.tc_ratio = tc_ratio
        self.stats = MarginalStats(self.n)
        self.trace: list = []
        self.estimate_fn = None
        self.stop_reason = ""
        self._saturated: list[int] = []
        self._u_grand = None
        self.t0 = time.perf_counter()

    # utilities

    def u(self, mask: int) -> float:
        try:
            v = eval_mask(self.game, mask, self.cache, self.counters)
        except UtilityError as exc:
            # keep what was computed so callers can persist it
            exc.partial_trace = list(self.trace)
            exc.queries = self.counters.queries
            exc.n_uc = self.counters.n_uc
            raise
        if mask:
            self.counters.queries += 1
            self._tick()
        return v

    @property
    def u_grand(self) -> float:
        if self._u_grand is None:
            self._u_grand = self.u((1 << self.n) - 1)
        return self._u_grand

    def impute(self, count: int = 1) -> None:
        """Account for ``count`` utility values supplied by truncation."""
        for _ in range(count):
            self.counters.queries += 1
            self.counters.truncated += 1
            self._tick()

    def saturates(self, value: float) -> bool:
        from ..optimizers import should_truncate
        return self.tc_ratio is not None and should_truncate(value, self.u_grand, self.tc_ratio)

    def u_tc(self, mask: int) -> float:
        """Utility with truncation for coalition-based estimators.

        A coalition containing an already saturated coalition takes that
        coalition's value without evaluation.
        """
        if self.tc_ratio is None or mask == 0:
            return self.u(mask)
        for s in self._saturated:
            if s & mask == s:
                self.impute()
                return self.cache.get(s)
        v = self.u(mask)
        if mask != (1 << self.n) - 1 and self.saturates(v):
            self._saturated = [s for s in self._saturated if s & mask != mask] + [mask]
        return v

    # clock

    def _tick(self) -> None:
        q = self.counters.queries
        if q % self.n == 0 and self.estimate_fn is not None:
            est = self.estimate_fn()
            if est is None:
                if self.conv is not None:
                    self.conv.reset()
            else:
                est = np.asarray(est, dtype=float)
                self.trace.append((q, est.copy()))
                if self.conv is not None:
                    try:
                        _, ok = update_and_check(self.conv, est, q)
                        if ok and not self.stop_reason:
                            self.stop_reason = "converged"
                    except NotReady:
                        pass
        if q >= self.max_evals and not self.stop_reason:
            self.stop_reason = "max_evals"

    @property
    def done(self) -> bool:
        return bool(self.stop_reason)

    def finish(self, values, algo: str, mc_variance=None, **flags) -> ShapleyResult:
        if not self.stop_reason:
            self.stop_reason = "budget"
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise FloatingPointError(f"{algo} produced non-finite values {values}")
        c = self.counters
        return ShapleyResult(
            values=values, n_uc=c.n_uc, wall_time=time.perf_counter() - self.t0,
            converged=self.stop_reason == "converged", trace=self.trace, algo=algo,
            queries=c.queries, truncated=c.truncated, t_uc_mean=c.t_uc_mean,
            stop_reason=self.stop_reason, mc_variance=mc_variance, flags=flags,
            u_grand=self._u_grand,
        )


def budget_session(game, n_objects, convergence, tau, max_evals, tc_ratio, cache):
    """Fixed-budget runs (``n_objects`` given, no convergence) skip the stopping test."""
    if n_objects is not None and convergence is None:
        tau = None
    return Session(game, tau=tau, max_evals=max_evals, tc_ratio=tc_ratio, cache=cache,
                   convergence=convergence)
