"""Inference attacks driven by released Shapley values.

Feature inference reconstructs a victim's features from their explanation,
either by regressing features on explanations of auxiliary rows (``fia_aux``)
or by keeping random candidates whose explanations land close to the stolen
one (``fia_gen``).  Membership inference (``mia``) compares a released tuple
value against value distributions computed with and without the tuple in a
shadow dataset.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .builtin_games import FeatureUtility
from .datasets import Table
from .estimators.exact import exact_shapley
from .game import GameSpec, PlayerSet
from .models import KNNModel, LinearModel, accuracy
from .privacy import PrivacyConfig, apply_privacy, dp_mask

log = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-9
DEFAULT_VICTIMS = 20
DEFAULT_ROUNDS = 30


@dataclass
class AttackReport:
    attack: str
    defense: str
    strength: str | None
    score: float
    n_trials: int
    ranking_variance: float | None = None
    metric: str = ""
    scores: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


class ExplanationService:
    """Answers a feature vector with the (masked) exact feature attribution
    of the model's output on it."""

    def __init__(self, model: LinearModel, means, target: int, output: str = "linear",
                 privacy: PrivacyConfig | None = None, seed: int = 0):
        self.model = model
        self.means = np.asarray(means, dtype=float)
        self.target = target
        self.output = output
        self.privacy = privacy or PrivacyConfig()
        self.seed = seed
        self.queries = 0

    def raw(self, x) -> tuple[np.ndarray, np.ndarray]:
        u = FeatureUtility(self.model, x, self.means, self.target, self.output)
        res = exact_shapley(GameSpec(PlayerSet(len(self.means)), u))
        return res.values, res.mc_variance

    def query(self, x) -> np.ndarray:
        phi, var = self.raw(x)
        cfg = PrivacyConfig(self.privacy.measure, self.privacy.dp_sigma, self.privacy.qt_levels,
                            self.privacy.dr_keep, [self.seed, self.queries])
        self.queries += 1
        return apply_privacy(phi, cfg, var)[0]

    def query_many(self, X) -> np.ndarray:
        return np.array([self.query(x) for x in np.atleast_2d(X)])


def mae(a, b) -> float:
    return float(np.mean(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def fia_aux(svc: ExplanationService, aux: Table | np.ndarray, stolen, victims=None):
    """Least-squares map from explanations to features fitted on auxiliary rows.

    Returns (reconstructed features, MAE against ``victims`` or None, flags).
    """
    X_aux = aux.X if isinstance(aux, Table) else np.asarray(aux, dtype=float)
    if len(X_aux) < 20:
        raise ValueError("auxiliary set needs at least 20 rows")
    S_aux = svc.query_many(X_aux)
    stolen = np.atleast_2d(np.asarray(stolen, dtype=float))
    flags = {"fallback": False}
    if np.allclose(S_aux, S_aux[0]):
        flags["fallback"] = True
        recon = np.tile(X_aux.mean(axis=0), (len(stolen), 1))
    else:
        design = np.column_stack([S_aux, np.ones(len(S_aux))])
        coef, *_ = np.linalg.lstsq(design, X_aux, rcond=None)
        recon = np.column_stack([stolen, np.ones(len(stolen))]) @ coef
    err = mae(recon, victims) if victims is not None else None
    return recon, err, flags


def sample_candidates(distro: str, n: int, d: int, rng) -> np.ndarray:
    if distro == "uniform01":
        return rng.uniform(0.0, 1.0, (n, d))
    if distro == "gaussian":
        return rng.normal(0.5, 0.25, (n, d))
    raise ValueError(f"unknown candidate distribution {distro!r}; expected 'uniform01' or 'gaussian'")


def fia_gen(svc: ExplanationService, distro: str, n_candidates: int, threshold, stolen,
            victims=None, seed: int = 0):
    """Reconstruct each dimension as the mean of candidates whose explanation
    in that dimension lies within ``threshold`` of the stolen one.

    ``threshold=None`` uses the 10th percentile of the per-dimension
    distances.  Dimensions with no survivor fall back to the distribution
    mean (flagged).
    """
    if n_candidates < 10:
        raise ValueError("need at least 10 candidates")
    rng = np.random.default_rng(seed)
    d = len(svc.means)
    cand = sample_candidates(distro, n_candidates, d, rng)
    S = svc.query_many(cand)
    stolen = np.atleast_2d(np.asarray(stolen, dtype=float))
    recon = np.empty((len(stolen), d))
    fallbacks = 0
    for v, sv in enumerate(stolen):
        dist = np.abs(S - sv)
        t = np.percentile(dist, 10, axis=0) if threshold is None else np.full(d, float(threshold))
        for j in range(d):
            alive = dist[:, j] <= t[j]
            if alive.any():
                recon[v, j] = cand[alive, j].mean()
            else:
                recon[v, j] = 0.5
                fallbacks += 1
    err = mae(recon, victims) if victims is not None else None
    return recon, err, {"fallback_dims": fallbacks}


def auroc(scores, labels) -> float:
    """Rank-based area under the ROC curve; ties count one half."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    pos, neg = y.sum(), (~y).sum()
    if pos == 0 or neg == 0:
        raise ValueError("AUROC needs both members and non-members")
    r = rankdata(s)
    return float((r[y].sum() - pos * (pos + 1) / 2) / (pos * neg))


def gaussian_pdf(x, mu, var) -> float:
    var = max(var, VARIANCE_FLOOR)
    return math.exp(-0.5 * (x - mu) ** 2 / var) / math.sqrt(2 * math.pi * var)


def membership_score(released: float, in_values, out_values) -> float:
    """IN-likelihood share under Gaussian fits of the IN and OUT samples."""
    li = gaussian_pdf(released, float(np.mean(in_values)), float(np.var(in_values)))
    lo = gaussian_pdf(released, float(np.mean(out_values)), float(np.var(out_values)))
    if li + lo == 0:
        # both underflow: decide by standardized distance
        zi = abs(released - np.mean(in_values)) / math.sqrt(max(np.var(in_values), VARIANCE_FLOOR))
        zo = abs(released - np.mean(out_values)) / math.sqrt(max(np.var(out_values), VARIANCE_FLOOR))
        return 1.0 if zi < zo else 0.0 if zo < zi else 0.5
    return li / (li + lo)


def tuple_value(data: Table, x, y, test: Table, k: int = 5, per_stratum: int = 4, seed: int = 0) -> float:
    """Shapley value of tuple (x, y) added as one extra player to ``data``,
    with a k-NN test-accuracy utility, by stratified sampling over coalition sizes."""
    rng = np.random.default_rng(seed)
    m = data.n_rows
    C = max(data.n_classes, test.n_classes, int(y) + 1)
    z = Table(np.atleast_2d(x), [int(y)], n_classes=C)

    def u(idx, with_z):
        if len(idx) == 0 and not with_z:
            return 0.0
        t = data.subset(idx) if len(idx) else None
        if with_z:
            t = z if t is None else Table(np.vstack([t.X, z.X]), np.append(t.y, z.y), n_classes=C)
        else:
            t = Table(t.X, t.y, n_classes=C)
        return accuracy(KNNModel(t, k, C), test)

    total = 0.0
    for size in range(m + 1):
        draws = 1 if size in (0, m) else per_stratum
        acc = 0.0
        for _ in range(draws):
            idx = np.sort(rng.choice(m, size, replace=False)) if size else np.zeros(0, int)
            acc += u(idx, True) - u(idx, False)
        total += acc / draws
    return total / (m + 1)


class ValuationService:
    """Values a candidate tuple against the server's private dataset, then masks it."""

    def __init__(self, private: Table, test: Table, k: int = 5, privacy: PrivacyConfig | None = None,
                 seed: int = 0, per_stratum: int = 4):
        self.private = private
        self.test = test
        self.k = k
        self.privacy = privacy or PrivacyConfig()
        self.seed = seed
        self.per_stratum = per_stratum
        self.queries = 0

    def raw(self, x, y) -> float:
        return tuple_value(self.private, x, y, self.test, self.k, self.per_stratum, self.seed)

    def query(self, x, y) -> float:
        v = np.array([self.raw(x, y)])
        seed = [self.seed, self.queries]
        self.queries += 1
        # quantization and top-k release are identities on a single value
        if self.privacy.measure == "dp":
            return float(dp_mask(v, self.privacy.dp_sigma, seed)[0])
        return float(v[0])


def mia(svc: ValuationService, target, pool: Table, rounds: int = DEFAULT_ROUNDS, seed: int = 0):
    """Membership score of ``target = (x, y)``.

    Each round draws a shadow dataset of the server's size from ``pool`` and
    values the target with a copy of it inside the shadow set (IN) and
    without (OUT).  Returns (score, in_values, out_values).
    """
    if rounds < 5:
        raise ValueError("membership inference needs at least 5 rounds")
    x, y = target
    rng = np.random.default_rng(seed)
    m = svc.private.n_rows
    same = np.flatnonzero(np.all(np.isclose(pool.X, x), axis=1) & (pool.y == y))
    others = np.setdiff1d(np.arange(pool.n_rows), same)
    ins, outs = [], []
    for r in range(rounds):
        base = rng.choice(others, m, replace=False)
        shadow_out = pool.subset(base)
        shadow_in = pool.subset(base[:-1]).concat(Table(np.atleast_2d(x), [int(y)], n_classes=pool.n_classes))
        s = int(rng.integers(2**31))
        ins.append(tuple_value(shadow_in, x, y, svc.test, svc.k, svc.per_stratum, s))
        outs.append(tuple_value(shadow_out, x, y, svc.test, svc.k, svc.per_stratum, s))
    released = svc.query(x, y)
    return membership_score(released, ins, outs), ins, outs


# experiment runners

def _privacy(defense: str, strength: str | None, n: int, seed) -> PrivacyConfig:
    from .privacy import strength_params
    pc = PrivacyConfig(defense or "none", 0.0, n, n, seed)
    if pc.measure != "none":
        for k, v in strength_params(pc.measure, strength or "mid", n).items():
            setattr(pc, k, v)
    return pc


def fia_setup(seed: int = 0, dataset: str = "iris", defense: str = "none", strength: str | None = None,
              victims: int = DEFAULT_VICTIMS):
    """Explanation service over a min-max scaled dataset, with victim rows
    drawn from the test split and auxiliary rows from the training split."""
    from .datasets import load_dataset, minmax_scale, split
    from .models import train_logistic
    t = minmax_scale(load_dataset(dataset, seed))
    s = split(t, 0.8, seed)
    model = train_logistic(s.train, seed)
    means = s.train.X.mean(axis=0)
    svc = ExplanationService(model, means, model.n_classes - 1, "linear",
                             _privacy(defense, strength, t.n_features, seed), seed)
    rng = np.random.default_rng([seed, 7])
    vic = s.test.X[rng.choice(s.test.n_rows, min(victims, s.test.n_rows), replace=False)]
    return svc, s.train, vic


def run_fia(variant: str = "fia_aux", defense: str = "none", strength: str | None = None,
            trials: int = 10, seed: int = 0, victims: int = DEFAULT_VICTIMS,
            n_candidates: int = 500, distro: str = "uniform01") -> AttackReport:
    from .metrics import ranking_variance
    maes, rvs = [], []
    for trial in range(trials):
        s = seed + trial
        svc, aux, vic = fia_setup(s, defense=defense, strength=strength, victims=victims)
        raw = np.array([svc.raw(x)[0] for x in vic])
        stolen = svc.query_many(vic)
        rvs.append(np.mean([ranking_variance(a, b) for a, b in zip(raw, stolen)]))
        if variant == "fia_aux":
            _, err, _ = fia_aux(svc, aux, stolen, vic)
        elif variant == "fia_gen":
            _, err, _ = fia_gen(svc, distro, n_candidates, None, stolen, vic, s)
        else:
            raise ValueError(f"unknown feature-inference variant {variant!r}")
        maes.append(err)
    return AttackReport(variant, defense, strength, float(np.mean(maes)), trials,
                        float(np.mean(rvs)), "MAE", maes, {"victims": victims})


def mia_setup(seed: int = 0, n_private: int = 20, n_targets: int = 20, dataset: str = "digits",
              test_rows: int = 60):
    """Server private set, server test set, attacker pool and labelled targets.

    Members are ``n_targets`` rows of the private set; non-members come from
    rows the server never saw.  The pool holds neither.  The default is a
    high-dimensional dataset: in low-dimensional blobs a tuple's value is
    mostly masked by its neighbours, so membership leaves little trace.
    """
    from .datasets import load_dataset
    t = load_dataset(dataset, seed, n_rows=600)
    rng = np.random.default_rng([seed, 11])
    order = rng.permutation(t.n_rows)
    priv = order[:n_private]
    test = order[n_private:n_private + test_rows]
    nonmem = order[n_private + test_rows:n_private + test_rows + n_targets]
    pool = order[n_private + test_rows + n_targets:]
    members = priv[:n_targets]
    targets = [(t.X[i], int(t.y[i])) for i in np.concatenate([members, nonmem])]
    labels = np.r_[np.ones(len(members), bool), np.zeros(len(nonmem), bool)]
    return t.subset(priv), t.subset(test), t.subset(pool), targets, labels


def run_mia(defense: str = "none", strength: str | None = None, trials: int = 2, seed: int = 0,
            rounds: int = DEFAULT_ROUNDS, k: int = 1, n_private: int = 20, n_targets: int = 20,
            per_stratum: int = 4, dataset: str = "digits") -> AttackReport:
    scores, labels = [], []
    for trial in range(trials):
        s = seed + trial
        private, test, pool, targets, lab = mia_setup(s, n_private, n_targets, dataset)
        svc = ValuationService(private, test, k, _privacy(defense, strength, 1, s), s, per_stratum)
        for j, tgt in enumerate(targets):
            score, _, _ = mia(svc, tgt, pool, rounds, seed=s * 1000 + j)
            scores.append(score)
        labels.extend(lab)
    return AttackReport("mia", defense, strength, auroc(scores, labels), trials, None, "AUROC",
                        scores, {"rounds": rounds, "k": k, "targets": len(scores)})
