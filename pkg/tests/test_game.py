import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svkit.game import (Coalition, Counters, FunctionUtility, GameError, PlayerSet, UtilityCache,
                        UtilityError, as_permutation, complement, eval_utility, make_game, predecessors)
from svkit.synthetic import additive_game


def test_predecessors_examples():
    assert predecessors((2, 0, 1), 2) == Coalition(0, 3)
    assert set(predecessors((2, 0, 1), 1)) == {2, 0}
    assert set(predecessors((0, 1, 2, 3), 2)) == {0, 1}


def test_predecessors_unknown_player():
    with pytest.raises(GameError):
        predecessors((0, 1, 2), 5)


@given(st.permutations(list(range(7))))
def test_predecessor_cardinality(perm):
    for k, p in enumerate(perm):
        assert len(predecessors(perm, p)) == k


def test_complement_examples():
    ps = PlayerSet(4)
    assert set(complement(Coalition.of([1, 3], 4), ps)) == {0, 2}
    assert set(complement(ps.empty(), ps)) == {0, 1, 2, 3}
    assert len(complement(ps.grand(), ps)) == 0


def test_complement_outside_member():
    with pytest.raises(GameError):
        complement(Coalition.of([5], 6), PlayerSet(4))


def test_coalition_rejects_foreign_members():
    with pytest.raises(GameError):
        Coalition.of([4], 4)


def test_encoding_round_trip_exhaustive():
    for n in range(1, 17):
        step = max(1, (1 << n) // 4096)
        for m in range(0, 1 << n, step):
            c = Coalition(m, n)
            enc = c.encode()
            assert len(enc) == 8
            assert Coalition.decode(enc, n) == c


def test_wide_encoding():
    c = Coalition.of([0, 69], 70)
    enc = c.encode()
    assert len(enc) == 9
    assert Coalition.decode(enc, 70) == c


def test_permutation_validation():
    assert as_permutation([2, 0, 1]) == (2, 0, 1)
    with pytest.raises(GameError):
        as_permutation([0, 0, 1])


def test_eval_empty_is_zero_without_call():
    calls = []
    g = make_game(3, lambda c: calls.append(c) or 5.0)
    counters = Counters()
    assert eval_utility(g, Coalition(0, 3), UtilityCache(), counters) == 0.0
    assert counters.n_uc == 0 and not calls


def test_eval_additive_and_cache():
    g = additive_game([1, 2, 3])
    cache, counters = UtilityCache(), Counters()
    c = Coalition.of([0, 2], 3)
    assert eval_utility(g, c, cache, counters) == 4.0
    assert eval_utility(g, c, cache, counters) == 4.0
    assert counters.n_uc == 1


def test_utility_error_carries_encoding():
    def boom(c):
        raise RuntimeError("degenerate")
    g = make_game(2, boom)
    with pytest.raises(UtilityError) as info:
        eval_utility(g, Coalition.of([1], 2))
    assert info.value.encoding == Coalition.of([1], 2).encode().hex()


def test_seeded_stochastic_utility_is_deterministic():
    u = FunctionUtility(lambda c, seed: np.random.default_rng(seed).normal(), seeded=True)
    g = make_game(10, u, seed=42)
    rng = np.random.default_rng(0)
    c = Coalition(int(rng.integers(1, 1 << 10)), 10)
    first = eval_utility(g, c)
    assert all(eval_utility(g, c) == first for _ in range(1000))


@settings(max_examples=50)
@given(st.integers(1, (1 << 8) - 1))
def test_cache_never_changes_value(mask):
    g = additive_game(np.arange(1, 9) * 0.37)
    c = Coalition(mask, 8)
    cache = UtilityCache()
    assert eval_utility(g, c, cache) == eval_utility(g, c) == eval_utility(g, c, cache)


def test_concurrent_cache_inserts():
    g = make_game(12, lambda c: float(c.mask % 7))
    cache, counters = UtilityCache(), Counters()

    def work():
        for m in range(1, 1 << 12):
            eval_utility(g, Coalition(m, 12), cache, counters)

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(cache) == (1 << 12) - 1
    for m in range(1, 1 << 12):
        assert cache.get(m) == float(m % 7)
