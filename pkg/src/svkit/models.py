"""Small numpy learners used inside utility functions."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .datasets import Table

FULL_BATCH_ROWS = 256


@dataclass(frozen=True)
class TrainBudget:
    epochs: int = 30
    learning_rate: float = 0.1
    batch_size: int = 64
    max_batches: int | None = None

    def reduced(self, epochs: int) -> "TrainBudget":
        return replace(self, epochs=epochs)


DEFAULT_BUDGET = TrainBudget()


@dataclass
class LinearModel:
    """Multinomial linear classifier on standardized inputs."""

    W: np.ndarray          # (C, d)
    b: np.ndarray          # (C,)
    mean: np.ndarray       # input standardization
    scale: np.ndarray
    budget: TrainBudget = DEFAULT_BUDGET

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    def scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.W.shape[1]:
            raise ValueError(f"model expects {self.W.shape[1]} features, got {X.shape[1]}")
        return ((X - self.mean) / self.scale) @ self.W.T + self.b

    def predict_proba(self, X) -> np.ndarray:
        z = self.scores(X)
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.scores(X), axis=1)

    def effective_weights(self):
        """(W', b') such that scores(x) = x @ W'.T + b' in raw feature units."""
        Wr = self.W / self.scale
        return Wr, self.b - Wr @ self.mean


def standardizer(X):
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    return mean, np.where(scale > 1e-12, scale, 1.0)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def train_logistic(data: Table, seed: int = 0, budget: TrainBudget = DEFAULT_BUDGET,
                   n_classes: int | None = None, standardize=None) -> LinearModel:
    """Multinomial logistic regression by seeded (mini-)batch gradient descent.

    Weights start at zero and biases at the log class priors, so an untrained
    model predicts the majority class.  Data with a single class yields that
    constant predictor without training.
    """
    if data.n_rows == 0:
        raise ValueError("cannot train on zero rows")
    C = n_classes or data.n_classes
    d = data.n_features
    mean, scale = standardize if standardize is not None else standardizer(data.X)
    counts = np.bincount(data.y, minlength=C).astype(float)
    prior = np.where(counts > 0, counts, 1e-6) / counts.sum()
    W = np.zeros((C, d))
    b = np.log(prior)
    if (counts > 0).sum() < 2 or budget.epochs <= 0:
        return LinearModel(W, b, mean, scale, budget)

    Z = (data.X - mean) / scale
    Y = np.eye(C)[data.y]
    m = len(Z)
    rng = np.random.default_rng(seed)
    full = m <= FULL_BATCH_ROWS
    bs = m if full else budget.batch_size
    lr = budget.learning_rate
    steps = 0
    for _ in range(budget.epochs):
        order = np.arange(m) if full else rng.permutation(m)
        for start in range(0, m, bs):
            idx = order[start:start + bs]
            P = _softmax(Z[idx] @ W.T + b)
            G = (P - Y[idx]) / len(idx)
            W -= lr * (G.T @ Z[idx])
            b -= lr * G.sum(axis=0)
            steps += 1
            if budget.max_batches is not None and steps >= budget.max_batches:
                return LinearModel(W, b, mean, scale, budget)
    return LinearModel(W, b, mean, scale, budget)


def accuracy(model, test: Table) -> float:
    if test.n_rows == 0:
        raise ValueError("accuracy of an empty test set is undefined")
    return float(np.mean(model.predict(test.X) == test.y))


def fedavg(models, subset) -> LinearModel:
    """Uniform parameter-wise mean of the models indexed by ``subset``."""
    members = list(subset)
    if not members:
        raise ValueError("fedavg needs a nonempty subset")
    chosen = [models[i] for i in members]
    first = chosen[0]
    for m in chosen[1:]:
        if not (np.array_equal(m.mean, first.mean) and np.array_equal(m.scale, first.scale)):
            raise ValueError("local models must share one input standardization")
    W = np.mean([m.W for m in chosen], axis=0)
    b = np.mean([m.b for m in chosen], axis=0)
    return LinearModel(W, b, first.mean, first.scale, first.budget)


class KNNModel:
    """k-nearest-neighbour vote on standardized features; ties go to the lower label."""

    def __init__(self, train: Table, k: int = 5, n_classes: int | None = None, standardize=None):
        self.k = k
        self.C = n_classes or train.n_classes
        self.mean, self.scale = standardize if standardize is not None else standardizer(train.X)
        self.Z = (train.X - self.mean) / self.scale
        self.y = train.y

    def predict(self, X) -> np.ndarray:
        Q = (np.atleast_2d(X) - self.mean) / self.scale
        d2 = ((Q[:, None, :] - self.Z[None, :, :]) ** 2).sum(axis=2)
        k = min(self.k, len(self.y))
        nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
        votes = np.zeros((len(Q), self.C))
        for j in range(k):
            votes[np.arange(len(Q)), self.y[nn[:, j]]] += 1
        return np.argmax(votes, axis=1)

    def predict_proba(self, X) -> np.ndarray:
        pred = self.predict(X)
        return np.eye(self.C)[pred]
