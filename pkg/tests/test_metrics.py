import numpy as np
import pytest
from hypothesis import given, strategies as st

from svkit.estimators import mc_shapley
from svkit.estimators.core import MarginalStats
from svkit.metrics import (effectiveness_score, effectiveness_score_abs, epsilon, mc_variance_profile,
                           rank_positions, ranking_variance, spearman, utility_delta)
from svkit.synthetic import additive_game, symmetric_game, table_game

nonzero = st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=10).map(np.array).filter(
    lambda v: np.linalg.norm(v) > 1e-3)


def test_epsilon_examples():
    phi = np.array([1.0, 2.0, 3.0])
    assert epsilon(phi, phi) == pytest.approx(0, abs=1e-15)
    assert epsilon(2 * phi, phi) == pytest.approx(0, abs=1e-15)
    assert epsilon([1, 0], [0, 1]) == pytest.approx(1)
    with pytest.raises(ValueError):
        epsilon([0, 0], [1, 1])


@given(nonzero, st.floats(0.01, 100))
def test_epsilon_symmetry_and_scale(a, c):
    b = a[::-1].copy()
    if np.linalg.norm(b) == 0:
        return
    assert epsilon(a, b) == pytest.approx(epsilon(b, a), abs=1e-12)
    assert epsilon(a, c * a) == pytest.approx(0, abs=1e-9)
    assert -1e-12 <= epsilon(a, b) <= 2 + 1e-12


def test_effectiveness_scores():
    phi = np.array([1.0, 2.0, 3.0])
    assert effectiveness_score(3 * phi, phi) == pytest.approx(0, abs=1e-15)
    assert effectiveness_score([5.0, -1.0, 0.5], phi) == pytest.approx(0, abs=1e-12)
    assert effectiveness_score_abs(np.array([0.6, 0.4]) * 7, np.array([0.5, 0.5]) * 7) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        effectiveness_score([1, -1], phi[:2])


def test_ranking_variance_examples():
    assert ranking_variance([3, 2, 1], [3, 2, 1]) == 0
    assert ranking_variance([3, 2, 1], [1, 2, 3]) == pytest.approx(8 / 3)
    assert list(rank_positions([1.0, 1.0, 2.0])) == [1, 2, 0]


def test_ranking_ties_are_deterministic():
    v = np.array([0.5, 0.5, 0.2, 0.5])
    pos = rank_positions(v)
    assert list(pos) == [0, 1, 3, 2]
    assert list(rank_positions(v.copy())) == list(pos)


def test_suppressed_ranked_last():
    pos = rank_positions([5.0, 1.0, 3.0], [True, False, False])
    assert list(pos) == [2, 1, 0]


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=8), st.integers(0, 100))
def test_ranking_variance_zero_iff_same_ranking(vals, seed):
    a = np.array(vals, dtype=float)
    b = a + np.random.default_rng(seed).integers(-1, 2, len(a))
    same = np.array_equal(rank_positions(a), rank_positions(b))
    assert (ranking_variance(a, b) == 0) == same


def test_utility_delta_examples():
    g = additive_game([1, 2, 3])
    assert utility_delta(g, 2, "remove") == -3
    assert utility_delta(g, 0, "add") == 1
    for p in range(4):
        assert utility_delta(symmetric_game(4), p, "remove") == -1
    with pytest.raises(ValueError):
        utility_delta(g, 5)


def test_mc_variance_profile_examples():
    r = mc_shapley(additive_game([1, 2, 3]), n_permutations=10, seed=0)
    assert np.allclose(r.mc_variance, 0)
    s = MarginalStats(1)
    s.add(0, 0.0)
    s.add(0, 2.0)
    assert mc_variance_profile(s)[0] == pytest.approx(2.0)
    short = MarginalStats(3)
    short.add_many([1, 2, 3])
    with pytest.raises(ValueError, match=r"\[0, 1, 2\]"):
        mc_variance_profile(short)
    # player 0 is needed for any value and its marginal grows with the coalition
    table = [10 + bin(m).count("1") - 1 if m & 1 else 0 for m in range(1 << 5)]
    d = mc_shapley(table_game(table), n_permutations=200, seed=0).mc_variance
    assert d[0] > d[1:].max()


def test_spearman_constant_is_nan():
    assert np.isnan(spearman([1, 1, 1], [1, 2, 3]))
    assert spearman([1, 2, 3], [2, 4, 9]) == pytest.approx(1)
