"""Permutation and coalition samplers: random, stratified and antithetic.

A sampler owns one seeded stream.  Coalition draws return ``(mask, weight)``
where ``weight`` is the importance correction relative to the requested
size distribution (always 1 except for stratified draws with proportions
that differ from it).
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .game import Coalition, PlayerSet, mask_of

STRATEGIES = ("random", "stratified", "antithetic")


def uniform_sizes(m: int) -> np.ndarray:
    """Size distribution uniform on 0..m."""
    return np.full(m + 1, 1.0 / (m + 1))


class Sampler:
    """Stateful draw stream.

    ``proportions`` (stratified only) fixes the share of draws each size
    stratum receives; by default it equals the requested size distribution
    (proportional allocation).  Stratified permutations are generated in
    blocks of ``n`` cyclic shifts of one uniform permutation, so every player,
    including the ``pivot``, occupies each position exactly once per block.
    """

    def __init__(self, n: int, seed: int = 0, strategy: str = "random", proportions=None, pivot: int = 0):
        if strategy not in STRATEGIES + ("exhaustive",):
            raise ValueError(f"unknown sampling strategy {strategy!r}; expected one of {STRATEGIES}")
        if proportions is not None:
            proportions = np.asarray(proportions, dtype=float)
            if np.any(proportions < 0) or abs(proportions.sum() - 1) > 1e-9:
                raise ValueError("stratum proportions must be nonnegative and sum to 1")
        self.n = n
        self.strategy = strategy
        self.rng = np.random.default_rng(seed)
        self.proportions = proportions
        self.pivot = pivot
        self.draws = 0
        self._last = None           # previous draw, for antithetic pairing
        self._block: list = []      # pending stratified permutations
        self._alloc: dict = {}      # stratum key -> per-size draw counts
        self._enum = None

    # permutations

    def permutation(self) -> tuple[int, ...]:
        n = self.n
        self.draws += 1
        if self.strategy == "antithetic":
            if self._last is not None:
                out, self._last = tuple(reversed(self._last)), None
                return out
            out = tuple(int(p) for p in self.rng.permutation(n))
            self._last = out
            return out
        if self.strategy == "stratified":
            if not self._block:
                base = [int(p) for p in self.rng.permutation(n)]
                start = int(self.rng.integers(n))
                self._block = [tuple(base[(i - r) % n] for i in range(n))
                               for r in range(start, start + n)]
            return self._block.pop(0)
        if self.strategy == "exhaustive":
            if self._enum is None:
                self._enum = itertools.permutations(range(n))
            return next(self._enum)
        return tuple(int(p) for p in self.rng.permutation(n))

    # coalitions

    def _universe(self, exclude) -> np.ndarray:
        players = np.arange(self.n)
        if exclude is None:
            return players
        ex = {exclude} if isinstance(exclude, (int, np.integer)) else set(exclude)
        return players[[p not in ex for p in players]]

    def _stratum(self, probs: np.ndarray, key) -> tuple[int, float]:
        """Deterministic largest-deficit allocation to the target proportions."""
        props = self.proportions if self.proportions is not None else probs
        if len(props) != len(probs):
            raise ValueError(f"{len(props)} stratum proportions for {len(probs)} size strata")
        counts = self._alloc.setdefault(key, np.zeros(len(probs)))
        total = counts.sum() + 1
        deficit = props * total - counts
        deficit[props <= 0] = -np.inf
        k = int(np.argmax(deficit))
        counts[k] += 1
        return k, float(probs[k] / props[k])

    def coalition(self, exclude=None, size_probs=None, key=None) -> tuple[int, float]:
        """Draw a coalition from the universe minus ``exclude``.

        ``size_probs[k]`` is the probability of size ``k`` (length m+1 for a
        universe of m players); default uniform on 0..m.
        """
        uni = self._universe(exclude)
        m = len(uni)
        probs = uniform_sizes(m) if size_probs is None else np.asarray(size_probs, dtype=float)
        if len(probs) != m + 1:
            raise ValueError(f"size distribution must cover sizes 0..{m}")
        self.draws += 1
        full = mask_of(uni)
        if self.strategy == "antithetic":
            if self._last is not None:
                out, self._last = full & ~self._last, None
                return out, 1.0
        weight = 1.0
        if self.strategy == "stratified":
            k, weight = self._stratum(probs, (key, m))
        else:
            k = int(self.rng.choice(m + 1, p=probs / probs.sum()))
        members = self.rng.choice(uni, k, replace=False) if k else []
        mask = mask_of(members)
        if self.strategy == "antithetic":
            self._last = mask
        return mask, weight

    def bernoulli(self, q: float, key=None) -> int:
        """Coalition with each player included independently with probability ``q``.

        Stratified draws fix the size by largest-deficit allocation to the
        binomial size distribution, then pick a uniform subset of that size.
        Antithetic draws alternate a fresh draw and its complement.
        """
        n = self.n
        self.draws += 1
        if self.strategy == "antithetic" and self._last is not None:
            out, self._last = ((1 << n) - 1) & ~self._last, None
            return out
        if self.strategy == "stratified":
            probs = np.array([math.comb(n, k) * q ** k * (1 - q) ** (n - k) for k in range(n + 1)])
            saved, self.proportions = self.proportions, None
            k, _ = self._stratum(probs, ("q", key))
            self.proportions = saved
            return mask_of(self.rng.choice(n, k, replace=False)) if k else 0
        mask = mask_of(np.flatnonzero(self.rng.random(n) < q))
        if self.strategy == "antithetic":
            self._last = mask
        return mask


def make_sampler(spec, n: int, seed: int = 0, **kw) -> Sampler:
    if isinstance(spec, Sampler):
        return spec
    return Sampler(n, seed, spec or "random", **kw)


def next_permutation(sampler: Sampler, ps: PlayerSet) -> tuple[int, ...]:
    if ps.n != sampler.n:
        raise ValueError(f"sampler built for {sampler.n} players used with {ps.n}")
    return sampler.permutation()


def next_coalition(sampler: Sampler, ps: PlayerSet, exclude=None, size_probs=None) -> Coalition:
    if ps.n != sampler.n:
        raise ValueError(f"sampler built for {sampler.n} players used with {ps.n}")
    mask, _ = sampler.coalition(exclude, size_probs)
    return Coalition(mask, ps.n)
