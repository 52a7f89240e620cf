"""Efficiency optimizations that compose with any estimator: truncation (TC),
reduced training budgets (GA) and ambiguous-test-row selection (TSS)."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .datasets import Table
from .game import MODEL_TRAINING, Coalition, GameSpec, UtilityFunction
from .models import TrainBudget

log = logging.getLogger(__name__)

STRATEGIES = ("None", "TC", "GA", "TC+GA", "GA+TSS", "TC+GA+TSS")


@dataclass
class OptimizerConfig:
    tc: bool = False
    tc_ratio: float = 0.9
    ga: bool = False
    ga_epochs: int = 1
    tss: bool = False
    tss_quantile: float = 0.2

    def __post_init__(self):
        if not 0 < self.tc_ratio < 1:
            raise ValueError(f"tc_ratio must lie in (0, 1), got {self.tc_ratio}")
        if not 0 < self.tss_quantile <= 1:
            raise ValueError(f"tss_quantile must lie in (0, 1], got {self.tss_quantile}")
        if self.ga_epochs < 0:
            raise ValueError("ga_epochs must be nonnegative")

    @classmethod
    def from_strategy(cls, strategy: str | None, **kw) -> "OptimizerConfig":
        strategy = strategy or "None"
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown optimization strategy {strategy!r}; expected one of {STRATEGIES}")
        parts = set(strategy.split("+")) - {"None"}
        return cls(tc="TC" in parts, ga="GA" in parts, tss="TSS" in parts, **kw)

    @property
    def label(self) -> str:
        parts = [p for p, on in (("TC", self.tc), ("GA", self.ga), ("TSS", self.tss)) if on]
        return "+".join(parts) or "None"


def should_truncate(u_partial: float, u_grand: float, r: float) -> bool:
    """True when a partial coalition already reaches the ratio ``r`` of the grand utility."""
    return abs(u_partial) > r * abs(u_grand)


def apply_ga(budget: TrainBudget, utility: UtilityFunction) -> UtilityFunction:
    """Utility that trains with ``budget`` instead of its own."""
    if getattr(utility, "cost", None) != MODEL_TRAINING or not hasattr(utility, "with_budget"):
        log.warning("reduced training budget has no effect on utility %r", getattr(utility, "name", utility))
        return utility
    if budget == utility.budget:
        return utility
    wrapped = utility.with_budget(budget)
    wrapped.name = f"{utility.name}+ga({budget.epochs})"
    return wrapped


def disagreement(models, X) -> np.ndarray:
    """Per row, the variance across models of the predicted class distribution, summed over classes."""
    P = np.stack([m.predict_proba(X) for m in models])
    return P.var(axis=0).sum(axis=1)


def tss_select(models, test: Table, a: float) -> Table:
    """The top-``a`` share of test rows by probe-model disagreement.

    Ties are resolved in favour of earlier rows; the selection keeps the
    original row order.
    """
    if not 0 < a <= 1:
        raise ValueError(f"ambiguity quantile must lie in (0, 1], got {a}")
    if len(models) < 2:
        raise ValueError("test-row selection needs at least two probe models")
    if a == 1:
        return test
    k = math.ceil(a * test.n_rows)
    d = disagreement(models, test.X)
    keep = np.sort(np.argsort(-d, kind="stable")[:k])
    return test.subset(keep)


def probe_models(utility, n: int, seed: int, count: int = 3):
    """Models trained on seeded random half-coalitions."""
    rng = np.random.default_rng([seed, 3])
    models = []
    for j in range(count):
        members = rng.choice(n, max(1, n // 2), replace=False)
        models.append(utility.fit(Coalition.of(members.tolist(), n), seed + j))
    return models


def apply_optimizers(game: GameSpec, cfg: OptimizerConfig, seed: int = 0) -> tuple[GameSpec, dict]:
    """Rewrite the game's utility for GA and TSS; TC is applied by the estimators."""
    info = {"strategy": cfg.label}
    u = game.utility
    if cfg.ga:
        budget = getattr(u, "budget", TrainBudget()).reduced(cfg.ga_epochs)
        u = apply_ga(budget, u)
        info["ga_applied"] = u is not game.utility
    if cfg.tss:
        if not hasattr(u, "fit") or not hasattr(u, "with_test"):
            log.warning("test-row selection needs a model-training utility; skipped")
            info["tss_rows"] = None
        else:
            models = probe_models(u, game.n, seed)
            test = tss_select(models, u.test, cfg.tss_quantile)
            info["tss_rows"] = test.n_rows
            info["tss_from"] = u.test.n_rows
            u = u.with_test(test)
    if u is game.utility:
        return game, info
    return game.replace_utility(u, f"{game.label}[{cfg.label}]"), info
