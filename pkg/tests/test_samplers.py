import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from scipy.stats import chisquare

from svkit.estimators import exact_shapley, mc_shapley
from svkit.game import PlayerSet
from svkit.metrics import epsilon
from svkit.samplers import Sampler, next_coalition, next_permutation
from svkit.synthetic import random_table_game


def test_antithetic_permutation_pair():
    s = Sampler(3, seed=0, strategy="antithetic")
    for _ in range(20):
        a, b = s.permutation(), s.permutation()
        assert b == tuple(reversed(a))
    # the worked pair
    s._last = (2, 0, 1)
    assert s.permutation() == (1, 0, 2)


def test_antithetic_coalition_pair():
    s = Sampler(4, seed=1, strategy="antithetic")
    for _ in range(20):
        (a, _), (b, _) = s.coalition(), s.coalition()
        assert a & b == 0 and a | b == 0b1111
    s._last = 0b1010
    assert s.coalition()[0] == 0b0101


def test_random_permutations_uniform():
    s = Sampler(3, seed=0)
    counts = {p: 0 for p in itertools.permutations(range(3))}
    for _ in range(6000):
        counts[s.permutation()] += 1
    assert all(abs(c - 1000) <= 120 for c in counts.values())
    assert chisquare(list(counts.values())).pvalue > 0.001


def test_stratified_pivot_positions():
    s = Sampler(4, seed=0, strategy="stratified", pivot=0)
    pos = np.zeros(4)
    for _ in range(4000):
        pos[s.permutation().index(0)] += 1
    assert np.all(np.abs(pos - 1000) <= 100)


def test_stratified_size_proportions():
    props = [0, 0.5, 0.5, 0]
    s = Sampler(3, seed=0, strategy="stratified", proportions=props)
    sizes = np.zeros(4)
    for _ in range(2000):
        mask, w = s.coalition(size_probs=props)
        sizes[bin(mask).count("1")] += 1
        assert w == 1.0
    assert abs(sizes[1] - 1000) <= 80 and abs(sizes[2] - 1000) <= 80


def test_stratified_weights_correct_for_proportions():
    probs = np.array([0.1, 0.2, 0.3, 0.4])
    props = np.array([0.25, 0.25, 0.25, 0.25])
    s = Sampler(3, seed=0, strategy="stratified", proportions=props)
    weighted = np.zeros(4)
    for _ in range(4000):
        mask, w = s.coalition(size_probs=probs)
        weighted[bin(mask).count("1")] += w
    assert np.allclose(weighted / 4000, probs, atol=1e-9)


def test_bad_proportions():
    with pytest.raises(ValueError):
        Sampler(3, strategy="stratified", proportions=[0.5, 0.6])
    with pytest.raises(ValueError):
        Sampler(3, strategy="sobol")


@pytest.mark.parametrize("strategy", ["random", "stratified", "antithetic"])
def test_exclusion(strategy):
    s = Sampler(6, seed=3, strategy=strategy)
    for _ in range(200):
        c = next_coalition(s, PlayerSet(6), exclude=2)
        assert 2 not in c


@pytest.mark.parametrize("strategy", ["random", "stratified", "antithetic"])
def test_permutations_are_valid(strategy):
    s = Sampler(7, seed=0, strategy=strategy)
    for _ in range(50):
        assert sorted(next_permutation(s, PlayerSet(7))) == list(range(7))


@pytest.mark.parametrize("strategy", ["random", "stratified", "antithetic"])
def test_bernoulli_inclusion_rate(strategy):
    s = Sampler(10, seed=0, strategy=strategy)
    q = 0.3
    draws = [s.bernoulli(q, key=0) for _ in range(4000)]
    rate = np.mean([bin(m).count("1") for m in draws]) / 10
    expected = q if strategy != "antithetic" else 0.5
    assert abs(rate - expected) <= 0.02


def test_sampler_player_count_mismatch():
    with pytest.raises(ValueError):
        next_permutation(Sampler(3), PlayerSet(4))


@pytest.mark.parametrize("strategy", ["stratified", "antithetic"])
def test_variance_reduced_mc_unbiased(strategy):
    for game_seed in (0, 1):
        g = random_table_game(6, seed=game_seed)
        phi = exact_shapley(g).values
        for seed in range(10):
            r = mc_shapley(g, sampler=strategy, n_permutations=20000 // 6, seed=seed)
            assert epsilon(r.values, phi) <= 0.02


def _stream(strategy, seed):
    s = Sampler(8, seed=seed, strategy=strategy)
    return [s.permutation() for _ in range(100)] + [s.coalition() for _ in range(100)]


@pytest.mark.parametrize("strategy", ["random", "stratified", "antithetic"])
def test_determinism_across_threads(strategy):
    serial = [_stream(strategy, s) for s in range(8)]
    with ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(lambda s: _stream(strategy, s), range(8)))
    assert serial == threaded
