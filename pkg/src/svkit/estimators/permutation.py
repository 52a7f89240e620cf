"""Permutation-walk estimators: plain Monte Carlo and compressive sampling."""
from __future__ import annotations

import math

import numpy as np

from ..convergence import DEFAULT_MAX_EVALS, DEFAULT_TAU
from ..samplers import make_sampler
from .core import Session, budget_session

ISTA_ITERS = 200


def walk(session: Session, perm) -> np.ndarray:
    """Marginal contributions along one permutation, with truncation."""
    n = session.n
    marg = np.zeros(n)
    prefix, prev = 0, 0.0
    for k, p in enumerate(perm):
        prefix |= 1 << p
        cur = session.u(prefix)
        marg[p] = cur - prev
        prev = cur
        if k < n - 1 and session.saturates(cur):
            session.impute(n - 1 - k)
            break
    return marg


def _tc_ratio(optimizer):
    if optimizer is None:
        return None
    return optimizer.tc_ratio if getattr(optimizer, "tc", False) else None


def mc_shapley(game, sampler="random", optimizer=None, convergence=None, *, seed: int = 0,
               n_permutations: int | None = None, tau: float = DEFAULT_TAU,
               max_evals: int = DEFAULT_MAX_EVALS, cache=None, exhaustive: bool = False):
    """Average marginal contributions over sampled permutations.

    Stops on convergence, at ``max_evals`` queries, or after
    ``n_permutations`` walks.  ``exhaustive`` walks all n! permutations once.
    """
    n = game.n
    if exhaustive:
        sampler, n_permutations = "exhaustive", math.factorial(n)
    smp = make_sampler(sampler, n, seed)
    s = budget_session(game, n_permutations, convergence, tau, max_evals, _tc_ratio(optimizer), cache)
    s.estimate_fn = lambda: s.stats.mean.copy()
    walks = 0
    while not s.done and (n_permutations is None or walks < n_permutations):
        s.stats.add_many(walk(s, smp.permutation()))
        walks += 1
    var = s.stats.variance() if walks >= 2 else None
    return s.finish(s.stats.mean.copy(), "MC", mc_variance=var, permutations=walks)


def measurement_matrix(n: int, rng, sparsity: int = 1, m: int | None = None) -> np.ndarray:
    """Random +-1/sqrt(M) matrix with M = 4 * ceil(ln n) * sparsity rows by default."""
    if m is None:
        m = 4 * max(1, math.ceil(math.log(n))) * sparsity
    return rng.choice([-1.0, 1.0], size=(m, n)) / math.sqrt(m)


def sparse_recover(A: np.ndarray, y: np.ndarray, lam: float, iters: int = ISTA_ITERS, x0=None):
    """Iterative soft-thresholding for min 0.5||Ax - y||^2 + lam||x||_1, then
    an unpenalized least-squares refit on the recovered support."""
    L = np.linalg.norm(A, 2) ** 2
    x = np.zeros(A.shape[1]) if x0 is None else x0.copy()
    step = 1.0 / L
    for _ in range(iters):
        z = x - step * (A.T @ (A @ x - y))
        x = np.sign(z) * np.maximum(np.abs(z) - step * lam, 0.0)
    support = list(np.flatnonzero(x))
    tol = 1e-12 * max(1.0, np.linalg.norm(y))
    # coordinates the threshold zeroed out are added back greedily while the
    # refit still leaves a residual
    while support:
        sol, *_ = np.linalg.lstsq(A[:, support], y, rcond=None)
        x = np.zeros_like(x)
        x[support] = sol
        grad = np.abs(A.T @ (y - A @ x))
        grad[support] = 0.0
        if len(support) >= min(A.shape) or grad.max() <= tol:
            break
        support.append(int(np.argmax(grad)))
    return x


def cp_shapley(game, n_permutations: int | None = None, sparsity_weight: float = 1e-3, sampler="random",
               optimizer=None, convergence=None, *, seed: int = 0, sparsity: int = 1,
               tau: float = DEFAULT_TAU, max_evals: int = DEFAULT_MAX_EVALS, cache=None,
               exhaustive: bool = False):
    """Mean share U(N)/n plus a sparse deviation recovered from random
    projections of the average permutation marginals."""
    n = game.n
    if n < 2:
        raise ValueError("compressive sampling needs at least two players")
    if exhaustive:
        sampler, n_permutations = "exhaustive", math.factorial(n)
    rng = np.random.default_rng([seed, 1])
    A = measurement_matrix(n, rng, sparsity)
    smp = make_sampler(sampler, n, seed)
    s = budget_session(game, n_permutations, convergence, tau, max_evals, _tc_ratio(optimizer), cache)
    warm = {"x": None}

    def estimate():
        if s.stats.count.min() == 0:
            return None
        base = s.u_grand / n
        y = A @ s.stats.mean - A @ np.full(n, base)
        dev = sparse_recover(A, y, sparsity_weight, x0=warm["x"])
        warm["x"] = dev
        return base + dev

    s.u_grand
    s.estimate_fn = estimate
    walks = 0
    while not s.done and (n_permutations is None or walks < n_permutations):
        s.stats.add_many(walk(s, smp.permutation()))
        walks += 1
    var = s.stats.variance() if walks >= 2 else None
    return s.finish(estimate(), "CP", mc_variance=var, permutations=walks, measurements=A.shape[0],
                    full_rank=bool(np.linalg.matrix_rank(A) == n))
