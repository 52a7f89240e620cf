"""The four analytics game families: feature attribution (RI), tuple valuation
(DV), dataset valuation (DSV) and federated model valuation (FL)."""
from __future__ import annotations

import copy
import logging

import numpy as np

from .datasets import SplitTable, Table
from .game import CHEAP, MODEL_TRAINING, GameError, GameSpec, PlayerSet, UtilityFunction, members_of
from .models import (DEFAULT_BUDGET, KNNModel, LinearModel, TrainBudget, accuracy, fedavg,
                     standardizer, train_logistic)

log = logging.getLogger(__name__)

TASKS = ("RI", "DV", "DSV", "FL")
PLAYER_OF_TASK = {"RI": "feature", "DV": "tuple", "DSV": "dataset", "FL": "model"}


class FeatureUtility(UtilityFunction):
    """Model output on the explicand with absent features set to training means,
    minus the output at the all-means input (so the empty coalition is 0)."""

    cost = CHEAP

    def __init__(self, model: LinearModel, explicand, means, target: int, output: str = "probability"):
        if output not in ("probability", "linear"):
            raise ValueError(f"output must be 'probability' or 'linear', got {output!r}")
        self.model = model
        self.x = np.asarray(explicand, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.target = int(target)
        self.output = output
        self.name = f"ri-{output}"
        self.baseline = self._f(self.means)

    def _f(self, x) -> float:
        if self.output == "linear":
            return float(self.model.scores(x)[0, self.target])
        return float(self.model.predict_proba(x)[0, self.target])

    def evaluate(self, coalition, seed):
        x = self.means.copy()
        idx = list(coalition)
        x[idx] = self.x[idx]
        return self._f(x) - self.baseline


class TrainingUtility(UtilityFunction):
    """Test accuracy of a learner fitted on the rows selected by a coalition.

    ``rows_of(mask)`` maps a coalition to training row indices; ``base_rows``
    are always included.
    """

    cost = MODEL_TRAINING
    deterministic = True

    def __init__(self, train: Table, test: Table, row_groups, base_rows=(), *,
                 learner: str = "logistic", budget: TrainBudget = DEFAULT_BUDGET, k: int = 5,
                 name: str = "accuracy"):
        if learner not in ("logistic", "knn"):
            raise ValueError(f"learner must be 'logistic' or 'knn', got {learner!r}")
        self.train = train
        self.test = test
        self.row_groups = [np.asarray(g, dtype=int) for g in row_groups]
        self.base_rows = np.asarray(base_rows, dtype=int)
        self.learner = learner
        self.budget = budget
        self.k = k
        self.n_classes = max(train.n_classes, test.n_classes)
        self.name = name
        if learner == "knn":
            self.cost = CHEAP

    def rows_of(self, mask: int) -> np.ndarray:
        parts = [self.base_rows] + [self.row_groups[i] for i in members_of(mask)]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=int)

    def fit(self, coalition, seed: int = 0):
        rows = self.rows_of(coalition.mask if hasattr(coalition, "mask") else int(coalition))
        data = self.train.subset(rows)
        if self.learner == "knn":
            return KNNModel(data, self.k, self.n_classes)
        return train_logistic(data, seed, self.budget, self.n_classes)

    def evaluate(self, coalition, seed):
        return accuracy(self.fit(coalition, seed), self.test)

    def with_budget(self, budget: TrainBudget) -> "TrainingUtility":
        u = copy.copy(self)
        u.budget = budget
        return u

    def with_test(self, test: Table) -> "TrainingUtility":
        u = copy.copy(self)
        u.test = test
        return u


class FedAvgUtility(UtilityFunction):
    """Test accuracy of the uniform average of the coalition's local models."""

    cost = CHEAP
    name = "fedavg-accuracy"

    def __init__(self, models, test: Table):
        self.models = list(models)
        self.test = test

    def evaluate(self, coalition, seed):
        return accuracy(fedavg(self.models, coalition), self.test)

    def with_test(self, test: Table) -> "FedAvgUtility":
        u = copy.copy(self)
        u.test = test
        return u


def shard_indices(n_rows: int, n_shards: int, seed: int) -> list[np.ndarray]:
    order = np.random.default_rng(seed).permutation(n_rows)
    return [np.sort(s) for s in np.array_split(order, n_shards)]


def make_game(task: str, data: SplitTable, n_players: int | None = None, seed: int = 0, *,
              explicand: int | None = None, output: str = "probability", learner: str = "logistic",
              budget: TrainBudget = DEFAULT_BUDGET, background: int | None = None,
              shards: list | None = None) -> GameSpec:
    """Build one of the four game families from a train/test split.

    RI: players are features of one explicand (a test row, seeded choice unless
    ``explicand`` is given).  DV: players are the first ``n_players`` training
    rows, the following ``background`` rows (default: all remaining) are
    always included.  DSV: players are disjoint training shards.  FL: players
    are logistic models trained locally on disjoint shards.
    """
    task = task.upper()
    train, test = data.train, data.test
    meta = {"task": task, "player": PLAYER_OF_TASK.get(task)}
    if task == "RI":
        d = train.n_features
        if n_players is not None and n_players != d:
            raise GameError(f"RI game needs n = n_features = {d}, got {n_players}")
        model = train_logistic(train, seed, budget)
        idx = int(np.random.default_rng(seed).integers(test.n_rows)) if explicand is None else int(explicand)
        if not 0 <= idx < test.n_rows:
            raise GameError(f"explicand index {idx} outside test set of {test.n_rows} rows")
        x = test.X[idx]
        target = int(test.y[idx]) if output == "probability" else int(model.n_classes - 1)
        means = train.X.mean(axis=0)
        u = FeatureUtility(model, x, means, target, output)
        meta.update(model=model, explicand=idx, x=x, means=means, target=target, output=output)
        return GameSpec(PlayerSet(d), u, seed, f"RI(n={d})", meta)
    if task == "DV":
        if n_players is None or n_players < 1:
            raise GameError("DV game needs a positive tuple count")
        if n_players > train.n_rows:
            raise GameError(f"DV game asks for {n_players} tuples but training split has {train.n_rows}")
        rest = np.arange(n_players, train.n_rows)
        if background is not None:
            rest = rest[:background]
        u = TrainingUtility(train, test, [[i] for i in range(n_players)], rest,
                            learner=learner, budget=budget, name=f"dv-{learner}")
        meta.update(background=len(rest))
        return GameSpec(PlayerSet(n_players), u, seed, f"DV(n={n_players})", meta)
    if task in ("DSV", "FL"):
        if n_players is None or n_players < 1:
            raise GameError(f"{task} game needs a positive shard count")
        if n_players > train.n_rows:
            raise GameError(f"{n_players} shards requested from {train.n_rows} training rows")
        groups = shards if shards is not None else shard_indices(train.n_rows, n_players, seed)
        if len(groups) != n_players:
            raise GameError(f"got {len(groups)} shards for {n_players} players")
        meta.update(shards=[np.asarray(g) for g in groups])
        if task == "DSV":
            u = TrainingUtility(train, test, groups, (), learner=learner, budget=budget,
                                name=f"dsv-{learner}")
            return GameSpec(PlayerSet(n_players), u, seed, f"DSV(n={n_players})", meta)
        std = standardizer(train.X)
        C = max(train.n_classes, test.n_classes)
        models = [train_logistic(train.subset(g), seed + i, budget, C, std) for i, g in enumerate(groups)]
        meta.update(models=models)
        return GameSpec(PlayerSet(n_players), FedAvgUtility(models, test), seed, f"FL(n={n_players})", meta)
    raise GameError(f"unknown task {task!r}; expected one of {TASKS}")
