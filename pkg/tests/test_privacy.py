import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svkit.privacy import (PrivacyConfig, apply_privacy, dp_mask, dr_mask, parse_levels, qt_kmeans_mask,
                           qt_mask, strength_params)

vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=16).map(np.array)


def test_dp_zero_is_identity():
    phi = np.array([0.3, -1.0, 2.5])
    assert np.array_equal(dp_mask(phi, 0.0, seed=4), phi)


def test_dp_noise_scale():
    x = dp_mask(np.zeros(100_000), 0.5, seed=0)
    assert abs(x.std() - 0.5) <= 0.01 and abs(x.mean()) <= 0.01


def test_dp_deterministic_and_negative_sigma():
    assert np.array_equal(dp_mask(np.ones(5), 0.3, 9), dp_mask(np.ones(5), 0.3, 9))
    with pytest.raises(ValueError):
        dp_mask(np.ones(3), -0.1)


def test_strength_levels():
    assert [strength_params("dp", lv, 10)["dp_sigma"] for lv in ("low", "mid", "high")] == [0.1, 0.5, 0.9]
    assert [strength_params("qt", lv, 10)["qt_levels"] for lv in ("low", "mid", "high")] == [9, 5, 1]
    assert parse_levels("0.5n", 10) == 5 and parse_levels("3", 10) == 3


def test_qt_examples():
    assert np.allclose(qt_mask([0, 0.4, 1.0], 2), [0.25, 0.25, 0.75])
    assert np.array_equal(qt_mask([2.0, 2.0, 2.0], 1), [2.0, 2.0, 2.0])
    with pytest.raises(ValueError):
        qt_mask([1, 2], 0)


def test_qt_equally_spaced_keeps_ranking():
    phi = np.linspace(-1, 3, 9)[np.random.default_rng(0).permutation(9)]
    out = qt_mask(phi, 9)
    assert np.array_equal(np.argsort(out), np.argsort(phi))


@given(vectors)
def test_qt_identity_at_distinct_count(phi):
    assert np.array_equal(qt_mask(phi, len(np.unique(phi))), phi)


@settings(max_examples=200)
@given(vectors, st.integers(1, 16))
def test_qt_cardinality(phi, levels):
    assert len(np.unique(qt_mask(phi, levels))) <= levels


def test_qt_cardinality_exhaustive_random():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 17))
        phi = rng.normal(size=n)
        for levels in range(1, n + 1):
            assert len(np.unique(qt_mask(phi, levels))) <= levels


def test_qt_kmeans_cardinality():
    phi = np.random.default_rng(1).normal(size=12)
    assert len(np.unique(qt_kmeans_mask(phi, 3))) <= 3


def test_dr_examples():
    phi = np.array([1.0, 2.0, 3.0])
    out, sup = dr_mask(phi, [3, 1, 2], 3)
    assert np.array_equal(out, phi) and not sup.any()
    out, sup = dr_mask(phi, [3, 1, 2], 0)
    assert sup.all() and np.all(out == 0)
    out, sup = dr_mask(phi, [3, 1, 2], 2)
    assert list(sup) == [False, True, False] and np.array_equal(out, [1.0, 0.0, 3.0])


def test_dr_errors():
    with pytest.raises(ValueError):
        dr_mask([1, 2], None, 1)
    with pytest.raises(ValueError):
        dr_mask([1, 2], [1, 2], 3)


@given(vectors)
def test_dr_full_keep_identity(phi):
    var = np.abs(phi) + 1
    out, sup = dr_mask(phi, var, len(phi))
    assert np.array_equal(out, phi) and not sup.any()


def test_apply_privacy_dispatch():
    phi = np.array([0.1, 0.5, 0.9])
    assert np.array_equal(apply_privacy(phi, PrivacyConfig())[0], phi)
    assert np.array_equal(apply_privacy(phi, PrivacyConfig("dp", dp_sigma=0))[0], phi)
    assert np.array_equal(apply_privacy(phi, PrivacyConfig("qt", qt_levels=3))[0], phi)
    out, sup = apply_privacy(phi, PrivacyConfig("dr", dr_keep=1), mc_variance=[0, 1, 0])
    assert list(sup) == [True, False, True]
    with pytest.raises(ValueError):
        apply_privacy(phi, PrivacyConfig("shuffle"))
