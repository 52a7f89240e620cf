"""Coalition-sampling estimators: weighted regression, multilinear extension
and group testing."""
from __future__ import annotations

import math

import numpy as np

from ..convergence import DEFAULT_MAX_EVALS, DEFAULT_TAU
from ..samplers import make_sampler
from .core import budget_session, kernel_size_probs
from .permutation import _tc_ratio

RIDGE = 1e-8


def regression_weight(n: int, size: int) -> float:
    """Kernel weight (n-1)|S|!(n-|S|)! / (n! |S| (n-|S|)) for 0 < |S| < n."""
    if not 0 < size < n:
        raise ValueError("endpoint coalitions have infinite weight")
    return ((n - 1) * math.factorial(size) * math.factorial(n - size)
            / (math.factorial(n) * size * (n - size)))


def solve_constrained(A: np.ndarray, b: np.ndarray, total: float):
    """argmin phi' A phi - 2 b' phi subject to sum(phi) = total.

    Returns (phi, ridge_used).  A singular KKT system is solved with a small
    ridge on A.
    """
    n = len(b)
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = A
    K[:n, n] = K[n, :n] = 1.0
    rhs = np.append(b, total)
    if np.linalg.matrix_rank(K) == n + 1:
        return np.linalg.solve(K, rhs)[:n], False
    K[:n, :n] += RIDGE * max(1.0, np.abs(A).max()) * np.eye(n)
    return np.linalg.lstsq(K, rhs, rcond=None)[0][:n], True


def _indicator(mask: int, n: int) -> np.ndarray:
    return ((mask >> np.arange(n)) & 1).astype(float)


def re_shapley(game, n_samples: int | None = None, sampler="random", convergence=None, *,
               optimizer=None, seed: int = 0, tau: float = DEFAULT_TAU,
               max_evals: int = DEFAULT_MAX_EVALS, cache=None, exhaustive: bool = False):
    """Efficiency-constrained weighted least squares over sampled coalitions.

    Sizes are drawn from the normalized kernel (endpoints excluded), subsets
    uniformly, so each sample carries unit weight.  ``exhaustive`` fits every
    proper nonempty coalition with its kernel weight instead.
    """
    n = game.n
    if n < 2:
        raise ValueError("regression estimator needs at least two players")
    s = budget_session(game, n_samples if not exhaustive else 0, convergence, tau, max_evals,
                       _tc_ratio(optimizer), cache)
    A = np.zeros((n, n))
    b = np.zeros(n)
    flags = {"ridge": False}
    total = s.u_grand

    def estimate(final=False):
        phi, ridge = solve_constrained(A, b, total)
        if ridge and not final:
            return None
        flags["ridge"] = ridge
        return phi

    s.estimate_fn = estimate

    def add(mask, w):
        nonlocal A, b
        z = _indicator(mask, n)
        A += w * np.outer(z, z)
        b += w * z * s.u_tc(mask)

    if exhaustive:
        for mask in range(1, (1 << n) - 1):
            add(mask, regression_weight(n, bin(mask).count("1")))
        drawn = (1 << n) - 2
    else:
        smp = make_sampler(sampler, n, seed)
        probs = kernel_size_probs(n)
        drawn = 0
        while not s.done and (n_samples is None or drawn < n_samples):
            mask, w = smp.coalition(size_probs=probs)
            add(mask, w)
            drawn += 1
    phi = estimate(final=True)
    return s.finish(phi, "RE", samples=drawn, ridge=flags["ridge"])


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    h = np.diff(grid)
    w = np.zeros(len(grid))
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def mle_shapley(game, q_grid_size: int = 20, samples_per_q: int | None = None, sampler="random",
                convergence=None, *, optimizer=None, seed: int = 0, tau: float = DEFAULT_TAU,
                max_evals: int = DEFAULT_MAX_EVALS, cache=None, exhaustive: bool = False,
                quadrature: str = "trapezoid"):
    """Integrate the multilinear-extension gradient over q in [0, 1].

    For each grid point q a coalition T is drawn with every player present
    independently with probability q; players outside T get U(T+i) - U(T),
    players inside get U(T) - U(T-i).  The estimate is the trapezoid rule
    over the per-q means; until every grid point has a sample, missing
    points are linearly interpolated from visited ones.  With the antithetic strategy the complement of
    each draw is credited to the mirrored grid point 1-q.

    ``exhaustive`` computes the expected marginal at every q exactly from all
    2^n coalitions and integrates with a fine trapezoid grid of
    ``q_grid_size`` points, or exactly with ``quadrature="gauss"``.
    """
    n = game.n
    if q_grid_size < 2:
        raise ValueError("q grid needs at least two points")
    if exhaustive:
        return _mle_exhaustive(game, q_grid_size, quadrature, cache)
    grid = np.linspace(0.0, 1.0, q_grid_size)
    tw = trapezoid_weights(grid)
    G = len(grid)
    s = budget_session(game, samples_per_q, convergence, tau, max_evals, _tc_ratio(optimizer), cache)
    smp = make_sampler(sampler, n, seed)
    sums = np.zeros((G, n))
    counts = np.zeros(G)

    def estimate():
        # unvisited grid points take the linear interpolant of visited ones
        seen = counts > 0
        if not seen.any():
            return None
        means = sums[seen] / counts[seen, None]
        if seen.all():
            return tw @ means
        filled = np.column_stack([np.interp(grid, grid[seen], means[:, i]) for i in range(n)])
        return tw @ filled

    s.estimate_fn = estimate
    full = (1 << n) - 1
    anti = getattr(smp, "strategy", "") == "antithetic"

    def credit(g, T):
        uT = s.u(T) if T else 0.0
        marg = np.zeros(n)
        if s.saturates(uT):
            outside = n - bin(T).count("1")
            s.impute(outside)
        else:
            for i in range(n):
                if not T >> i & 1:
                    marg[i] = s.u(T | 1 << i) - uT
        for i in range(n):
            if T >> i & 1:
                marg[i] = uT - s.u(T & ~(1 << i))
        sums[g] += marg
        counts[g] += 1
        s.stats.add_many(marg)

    # grid points are visited in a fresh seeded order each round so the
    # stability window is not dominated by the near-deterministic endpoints
    order_rng = np.random.default_rng([seed, 5])
    firsts = np.arange((G + 1) // 2) if anti else np.arange(G)
    rounds = 0
    while not s.done and (samples_per_q is None or rounds < samples_per_q):
        for g in order_rng.permutation(firsts):
            credit(g, smp.bernoulli(grid[g], key=g))
            if anti and G - 1 - g != g:
                credit(G - 1 - g, smp.bernoulli(grid[G - 1 - g], key=G - 1 - g))
            if s.done:
                break
        rounds += 1
    phi = estimate()
    var = s.stats.variance() if s.stats.count.min() >= 2 else None
    return s.finish(phi, "MLE", mc_variance=var, rounds=rounds, grid=G)


def _mle_exhaustive(game, grid_size, quadrature, cache):
    from ..game import Counters, UtilityCache, all_utilities
    from .core import ShapleyResult
    from .exact import popcount
    import time

    n = game.n
    t0 = time.perf_counter()
    counters = Counters()
    table = all_utilities(game, cache if cache is not None else UtilityCache(), counters, max_n=n)
    masks = np.arange(1 << n, dtype=np.int64)
    sizes = popcount(masks)
    # D[i, k]: summed marginal of i over coalitions of size k without i
    D = np.zeros((n, n))
    for i in range(n):
        without = masks[(masks >> i) & 1 == 0]
        np.add.at(D[i], sizes[without], table[without | (1 << i)] - table[without])
    k = np.arange(n)

    def e(q):
        return D @ (q ** k * (1 - q) ** (n - 1 - k))

    if quadrature == "gauss":
        x, w = np.polynomial.legendre.leggauss(max(2, (n + 2) // 2))
        qs, ws = (x + 1) / 2, w / 2
    else:
        qs = np.linspace(0.0, 1.0, grid_size)
        ws = trapezoid_weights(qs)
    phi = sum(wq * e(q) for q, wq in zip(qs, ws))
    counters.queries = (1 << n) - 1
    return ShapleyResult(values=phi, n_uc=counters.n_uc, wall_time=time.perf_counter() - t0,
                         converged=True, algo="MLE", queries=counters.queries,
                         t_uc_mean=counters.t_uc_mean, stop_reason="exhaustive",
                         flags={"quadrature": quadrature, "grid": len(qs)})


def gt_normalizer(n: int) -> float:
    return 2.0 * sum(1.0 / k for k in range(1, n))


def gt_project(s_sum: np.ndarray, total: float, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares solution of phi_i - phi_j = scale*(s_i - s_j) on the efficiency hyperplane.

    Returns (phi, pairwise difference estimates).
    """
    n = len(s_sum)
    dU = scale * (s_sum[:, None] - s_sum[None, :])
    phi = total / n + dU.sum(axis=1) / n
    return phi, dU


def gt_shapley(game, n_tests: int | None = None, epsilon_target: float = 0.1, sampler="random",
               convergence=None, *, optimizer=None, seed: int = 0, tau: float = DEFAULT_TAU,
               max_evals: int = DEFAULT_MAX_EVALS, cache=None, exhaustive: bool = False):
    """Group testing: pairwise value differences from random test coalitions.

    Test sizes k in 1..n-1 are drawn with probability proportional to
    1/k + 1/(n-k) and members uniformly; Z * U(S) * (b_i - b_j) is an unbiased
    estimate of phi_i - phi_j with Z = 2 * sum_{k<n} 1/k.  The values are the
    least-squares fit to those differences subject to efficiency; the flag
    ``feasible`` records whether every pairwise constraint holds within
    epsilon_target / (2 sqrt(n)).
    """
    n = game.n
    if n < 2:
        raise ValueError("group testing needs at least two players")
    Z = gt_normalizer(n)
    s = budget_session(game, n_tests if not exhaustive else 0, convergence, tau, max_evals,
                       _tc_ratio(optimizer), cache)
    acc = np.zeros(n)
    weight_total = [0.0]
    total = s.u_grand

    def estimate():
        if weight_total[0] == 0:
            return None
        return gt_project(acc, total, Z / weight_total[0])[0]

    s.estimate_fn = estimate
    probs = kernel_size_probs(n)
    if exhaustive:
        for mask in range(1, (1 << n) - 1):
            k = bin(mask).count("1")
            p = probs[k] / math.comb(n, k)
            acc += p * s.u_tc(mask) * _indicator(mask, n)
        weight_total[0] = 1.0
        tests = (1 << n) - 2
    else:
        smp = make_sampler(sampler, n, seed)
        tests = 0
        while not s.done and (n_tests is None or tests < n_tests):
            mask, w = smp.coalition(size_probs=probs)
            acc += w * s.u_tc(mask) * _indicator(mask, n)
            weight_total[0] += 1.0
            tests += 1
    phi, dU = gt_project(acc, total, Z / weight_total[0])
    tol = epsilon_target / (2 * math.sqrt(n))
    gap = np.abs((phi[:, None] - phi[None, :]) - dU)
    return s.finish(phi, "GT", tests=tests, feasible=bool(gap.max() <= tol + 1e-12),
                    max_violation=float(gap.max()), solver="least-squares projection")
