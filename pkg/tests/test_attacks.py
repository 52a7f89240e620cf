import numpy as np
import pytest
from hypothesis import given, strategies as st

from svkit.attacks import (auroc, fia_aux, fia_gen, fia_setup, membership_score, mia, mia_setup, run_fia,
                           ValuationService)
from svkit.estimators import linear_closed_form
from svkit.privacy import PrivacyConfig


@pytest.fixture(scope="module")
def fia():
    return fia_setup(seed=0)


def test_auroc_examples():
    assert auroc([0.9, 0.8, 0.4, 0.2], [1, 0, 1, 0]) == pytest.approx(0.75)
    assert auroc([3, 4, 1, 2], [1, 1, 0, 0]) == 1.0
    assert auroc([0.5] * 6, [1, 0, 1, 0, 1, 0]) == 0.5
    with pytest.raises(ValueError):
        auroc([0.1, 0.2], [1, 1])


@given(st.lists(st.integers(-1000, 1000).map(lambda k: k / 10), min_size=4, max_size=30), st.integers(0, 1000))
def test_auroc_monotone_invariance(scores, seed):
    s = np.array(scores)
    labels = np.random.default_rng(seed).permutation(np.arange(len(s)) % 2)
    base = auroc(s, labels)
    assert 0 <= base <= 1
    assert auroc(np.exp(s / 50), labels) == pytest.approx(base)
    assert auroc(3 * s + 7, labels) == pytest.approx(base)


def test_membership_score_cases():
    same = [0.1, 0.2, 0.3]
    assert membership_score(0.25, same, same) == 0.5
    assert membership_score(1.0, [0.99, 1.0, 1.01], [-5.0, -5.1, -4.9]) > 0.999
    assert membership_score(0.0, [1.0, 1.0], [1.0, 1.0]) == 0.5
    for r in (-10, 0, 0.2, 10):
        assert 0 <= membership_score(r, [0, 0.1], [0.5, 0.7]) <= 1


def test_explanations_are_linear_closed_form(fia):
    svc, aux, vic = fia
    for x in vic[:3]:
        cf = linear_closed_form(svc.model, x, svc.means, svc.target)
        assert np.allclose(svc.query(x), cf, atol=1e-9)


def test_fia_aux_no_defense(fia):
    svc, aux, vic = fia
    stolen = svc.query_many(vic)
    _, err, flags = fia_aux(svc, aux, stolen, vic)
    assert err <= 0.05 and not flags["fallback"]


def test_fia_aux_in_sample(fia):
    svc, aux, _ = fia
    recon, err, _ = fia_aux(svc, aux, svc.query_many(aux.X), aux.X)
    assert err <= 0.05


def test_fia_aux_constant_explanations_fall_back(fia):
    svc, aux, vic = fia
    flat = type(svc)(svc.model, svc.means, svc.target, privacy=PrivacyConfig("dr", dr_keep=0))
    recon, _, flags = fia_aux(flat, aux, np.zeros((2, len(svc.means))))
    assert flags["fallback"] and np.allclose(recon, aux.X.mean(axis=0))


def test_fia_aux_needs_twenty_rows(fia):
    svc, aux, vic = fia
    with pytest.raises(ValueError):
        fia_aux(svc, aux.X[:19], vic)


def test_fia_aux_dp_raises_error():
    wins = 0
    for seed in range(10):
        none = run_fia("fia_aux", "none", trials=1, seed=seed).score
        dp = run_fia("fia_aux", "dp", "high", trials=1, seed=seed).score
        wins += dp > none
    assert wins >= 8


def test_fia_gen_threshold_cases(fia):
    svc, _, vic = fia
    stolen = svc.query_many(vic[:3])
    rng = np.random.default_rng(5)
    cand = rng.uniform(0, 1, (50, len(svc.means)))
    recon, _, _ = fia_gen(svc, "uniform01", 50, np.inf, stolen, seed=5)
    assert np.allclose(recon, cand.mean(axis=0))
    recon, _, flags = fia_gen(svc, "uniform01", 50, 0.0, stolen, seed=5)
    assert np.allclose(recon, 0.5) and flags["fallback_dims"] == 3 * len(svc.means)


def test_fia_gen_filtering_beats_blind_mean(fia):
    svc, _, vic = fia
    stolen = svc.query_many(vic)
    _, tuned, _ = fia_gen(svc, "uniform01", 500, None, stolen, vic, seed=0)
    _, blind, _ = fia_gen(svc, "uniform01", 500, np.inf, stolen, vic, seed=0)
    assert tuned < blind


def test_fia_gen_candidate_order_invariance(fia):
    svc, _, vic = fia
    stolen = svc.query_many(vic[:4])
    from svkit import attacks
    rng = np.random.default_rng(0)
    cand = rng.uniform(0, 1, (40, len(svc.means)))
    S = svc.query_many(cand)
    perm = np.random.default_rng(1).permutation(40)

    def recon(C, SS):
        d = np.abs(SS[:, None, :] - stolen[None])
        t = np.percentile(d, 10, axis=0)
        return np.array([[C[d[:, v, j] <= t[v, j], j].mean() for j in range(C.shape[1])]
                         for v in range(len(stolen))])

    assert np.allclose(recon(cand, S), recon(cand[perm], S[perm]))
    assert attacks.mae(recon(cand, S), vic[:4]) >= 0


def test_fia_gen_rejects_few_candidates(fia):
    svc, _, vic = fia
    with pytest.raises(ValueError):
        fia_gen(svc, "uniform01", 5, None, svc.query_many(vic[:1]))
    with pytest.raises(ValueError):
        fia_gen(svc, "beta", 50, None, svc.query_many(vic[:1]))


def test_mia_scores_in_unit_interval():
    private, test, pool, targets, labels = mia_setup(0, n_private=10, n_targets=2)
    svc = ValuationService(private, test, k=1, seed=0, per_stratum=2)
    for tgt in targets:
        score, ins, outs = mia(svc, tgt, pool, rounds=5, seed=1)
        assert 0 <= score <= 1 and len(ins) == len(outs) == 5
    with pytest.raises(ValueError):
        mia(svc, targets[0], pool, rounds=4)


def test_valuation_service_deterministic():
    private, test, pool, targets, _ = mia_setup(0, n_private=10, n_targets=2)
    a = ValuationService(private, test, k=1, seed=3, per_stratum=2)
    b = ValuationService(private, test, k=1, seed=3, per_stratum=2)
    assert a.query(*targets[0]) == b.query(*targets[0])
