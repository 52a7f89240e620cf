"""Stability criterion for sampling estimators.

Snapshots of the running estimate are taken every ``n`` utility computations.
Once five earlier snapshots are available the relative drift

    delta = 1/(5n) * sum_{m=1..5} sum_i |(phi_i^e - phi_i^{e-mn}) / phi_i^e|

is compared against ``tau``.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

WINDOW = 5
NEAR_ZERO = 1e-12
DEFAULT_TAU = 0.05
DEFAULT_MAX_EVALS = 1_000_000


class NotReady(Exception):
    """Raised when no verdict can be given yet."""


@dataclass
class ConvergenceState:
    n: int
    tau: float = DEFAULT_TAU
    max_evals: int = DEFAULT_MAX_EVALS
    snapshots: deque = field(default_factory=lambda: deque(maxlen=WINDOW + 1))
    last_delta: float = float("nan")
    skipped: int = 0
    converged: bool = False

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def ready(self) -> bool:
        return len(self.snapshots) == WINDOW + 1

    def reset(self) -> None:
        self.snapshots.clear()
        self.converged = False


def relative_drift(current: np.ndarray, previous: list[np.ndarray], n: int) -> tuple[float, int]:
    """The drift statistic and the number of near-zero terms skipped."""
    current = np.asarray(current, dtype=float)
    keep = np.abs(current) >= NEAR_ZERO
    skipped = int((~keep).sum()) * len(previous)
    total = 0.0
    for prev in previous:
        total += float(np.sum(np.abs((current[keep] - prev[keep]) / current[keep])))
    return total / (len(previous) * n), skipped


def update_and_check(state: ConvergenceState, phi_hat, e: int) -> tuple[float, bool]:
    """Record the snapshot at eval count ``e`` and test the criterion.

    Raises :class:`NotReady` until five earlier snapshots, spaced exactly
    ``n`` evaluations apart, are available.
    """
    n = state.n
    if e % n:
        raise ValueError(f"snapshots must be taken at multiples of n={n}, got e={e}")
    if state.snapshots and e - state.snapshots[-1][0] != n:
        # a gap in the clock invalidates the window
        state.snapshots.clear()
    state.snapshots.append((e, np.array(phi_hat, dtype=float)))
    if not state.ready:
        raise NotReady(f"{len(state.snapshots) - 1} of {WINDOW} earlier snapshots available")
    current = state.snapshots[-1][1]
    previous = [s for _, s in list(state.snapshots)[:-1]]
    delta, skipped = relative_drift(current, previous, n)
    if skipped:
        log.debug("convergence check at e=%d skipped %d near-zero terms", e, skipped)
    state.skipped += skipped
    state.last_delta = delta
    state.converged = delta < state.tau
    return delta, state.converged
