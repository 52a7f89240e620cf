import time

import numpy as np
import pytest

from svkit.datasets import Table
from svkit.desk import desk_game
from svkit.estimators import exact_shapley, mc_shapley
from svkit.game import Coalition, UtilityCache
from svkit.metrics import epsilon
from svkit.models import TrainBudget
from svkit.optimizers import (OptimizerConfig, STRATEGIES, apply_ga, apply_optimizers, should_truncate,
                              tss_select)
from svkit.synthetic import additive_game, random_table_game


class FixedModel:
    def __init__(self, P):
        self.P = np.asarray(P, dtype=float)

    def predict_proba(self, X):
        return self.P[: len(X)]


def _table(rows):
    return Table(np.arange(rows, dtype=float)[:, None], np.zeros(rows, dtype=int))


def test_should_truncate_examples():
    assert should_truncate(0.95, 1.0, 0.9)
    assert not should_truncate(0.5, 1.0, 0.9)
    assert should_truncate(-0.95, -1.0, 0.9)


def _truncations(g, ratios):
    return [mc_shapley(g, optimizer=OptimizerConfig(tc=True, tc_ratio=r), n_permutations=200,
                       seed=0).truncated for r in ratios]


def test_truncation_frequency_falls_as_ratio_approaches_one():
    ratios = (0.5, 0.9, 0.99, 0.999999)
    noisy = _truncations(random_table_game(8, seed=7), ratios)
    assert noisy == sorted(noisy, reverse=True) and noisy[0] > noisy[-1]
    # with U(N) the strict maximum nothing truncates in the limit
    clean = _truncations(random_table_game(8, seed=7, noise=0.0), ratios)
    assert clean == sorted(clean, reverse=True)
    assert clean[0] > 0 and clean[-1] == 0


def test_config_rejects_ratio_one():
    with pytest.raises(ValueError):
        OptimizerConfig(tc=True, tc_ratio=1.0)


def test_strategy_parsing():
    for s in STRATEGIES:
        assert OptimizerConfig.from_strategy(s).label == s
    with pytest.raises(ValueError):
        OptimizerConfig.from_strategy("TSS")


def test_tc_soundness_near_one():
    for seed in range(5):
        g = random_table_game(6, seed=seed)
        base = mc_shapley(g, n_permutations=300, seed=seed)
        tc = mc_shapley(g, optimizer=OptimizerConfig(tc=True, tc_ratio=0.99), n_permutations=300, seed=seed)
        assert epsilon(tc.values, base.values) <= 0.02


@pytest.fixture(scope="module")
def dv200():
    return desk_game("DV", 12, seed=0, background=188)


def test_ga_identity_budget(dv200):
    u = dv200.utility
    assert apply_ga(u.budget, u) is u


def test_ga_noop_on_cheap_utility(caplog):
    u = additive_game([1, 2]).utility
    assert apply_ga(TrainBudget(epochs=1), u) is u
    assert "no effect" in caplog.text


def test_ga_deterministic_and_faster(dv200):
    u = dv200.utility
    fast = apply_ga(TrainBudget(epochs=1), u)
    c = Coalition.of(range(6), 12)
    assert fast.evaluate(c, 0) == fast.evaluate(c, 0)

    def per_eval(util):
        masks = np.random.default_rng(0).integers(1, 1 << 12, 30)
        t0 = time.perf_counter()
        for m in masks:
            util.evaluate(Coalition(int(m), 12), 0)
        return (time.perf_counter() - t0) / len(masks)

    per_eval(u)
    assert per_eval(fast) * 2 <= per_eval(u)


def test_ga_counts_each_evaluation_once():
    r = exact_shapley(desk_game("DV", 6, seed=0, background=20))
    g6, _ = apply_optimizers(desk_game("DV", 6, seed=0, background=20), OptimizerConfig(ga=True))
    assert exact_shapley(g6).n_uc == r.n_uc == 63


def test_tss_identical_models_keep_first_rows():
    P = np.tile([0.3, 0.7], (50, 1))
    sel = tss_select([FixedModel(P), FixedModel(P)], _table(50), 0.2)
    assert np.array_equal(sel.X[:, 0], np.arange(10))


def test_tss_full_quantile_is_identity():
    t = _table(30)
    assert tss_select([FixedModel(np.ones((30, 2)) / 2)] * 2, t, 1.0) is t


def test_tss_controlled_disagreement():
    rng = np.random.default_rng(0)
    rows = np.sort(rng.choice(100, 10, replace=False))
    A = np.tile([0.9, 0.1], (100, 1))
    B = A.copy()
    B[rows] = [0.1, 0.9]
    sel = tss_select([FixedModel(A), FixedModel(B)], _table(100), 0.1)
    assert np.array_equal(sel.X[:, 0].astype(int), rows)


def test_tss_errors():
    t = _table(10)
    P = FixedModel(np.ones((10, 2)) / 2)
    for a in (0, 1.5, -0.1):
        with pytest.raises(ValueError):
            tss_select([P, P], t, a)
    with pytest.raises(ValueError):
        tss_select([P], t, 0.5)


def test_tss_subset_and_deterministic(dv200):
    g1, info1 = apply_optimizers(dv200, OptimizerConfig(ga=True, tss=True), seed=3)
    g2, info2 = apply_optimizers(dv200, OptimizerConfig(ga=True, tss=True), seed=3)
    full = dv200.utility.test
    sub = g1.utility.test
    assert info1["tss_rows"] == info2["tss_rows"] == int(np.ceil(0.2 * full.n_rows))
    assert np.array_equal(sub.X, g2.utility.test.X)
    rows = {tuple(r) for r in full.X}
    assert all(tuple(r) in rows for r in sub.X)


def test_tc_reduces_evaluations_on_dv():
    g = desk_game("DV", 12, seed=0)
    cache_a, cache_b = UtilityCache(), UtilityCache()
    a = mc_shapley(g, seed=0, cache=cache_a)
    b = mc_shapley(g, optimizer=OptimizerConfig(tc=True), seed=0, cache=cache_b)
    assert b.n_uc <= a.n_uc
