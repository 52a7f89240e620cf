"""Named user extensions: utilities, samplers, optimizers and privacy measures.

Every registration is probed on a two-player game before it is accepted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import Coalition, GameSpec, PlayerSet, as_utility

KINDS = ("utility", "sampler", "optimizer", "privacy")


class RegistrationError(ValueError):
    pass


@dataclass(frozen=True)
class Registration:
    kind: str
    name: str
    impl: object


def _probe_game() -> GameSpec:
    table = {0: 0.0, 1: 1.0, 2: 2.0, 3: 4.0}
    return GameSpec(PlayerSet(2), as_utility(lambda c: table[c.mask]), 0, "probe")


def _probe_utility(impl):
    u = as_utility(impl)
    try:
        empty = float(u.evaluate(Coalition(0, 2), 0))
        others = [float(u.evaluate(Coalition(m, 2), 0)) for m in (1, 2, 3)]
    except Exception as exc:
        raise RegistrationError(f"utility raised on the probe game: {exc!r}") from exc
    if empty != 0.0:
        raise RegistrationError(f"utility of the empty coalition must be 0, got {empty}")
    if not all(math.isfinite(v) for v in others):
        raise RegistrationError(f"utility returned non-finite values {others}")
    return u


def _probe_sampler(impl):
    try:
        smp = impl(2, 0)
        perm = tuple(smp.permutation())
    except Exception as exc:
        raise RegistrationError(f"sampler failed on the probe game: {exc!r}") from exc
    if sorted(perm) != [0, 1]:
        raise RegistrationError(f"sampler produced {perm}, not a permutation of 0..1")
    return impl


def _probe_optimizer(impl):
    try:
        out = impl(_probe_game())
    except Exception as exc:
        raise RegistrationError(f"optimizer failed on the probe game: {exc!r}") from exc
    if not isinstance(out, GameSpec) or out.n != 2:
        raise RegistrationError("optimizer must return a game over the same players")
    _probe_utility(out.utility)
    return impl


def _probe_privacy(impl):
    phi = np.array([1.0, 3.0])
    try:
        out = np.asarray(impl(phi), dtype=float)
    except Exception as exc:
        raise RegistrationError(f"privacy measure failed on the probe vector: {exc!r}") from exc
    if out.shape != phi.shape:
        raise RegistrationError(f"privacy measure changed length {len(phi)} -> {out.size}")
    return impl


_PROBES = {"utility": _probe_utility, "sampler": _probe_sampler,
           "optimizer": _probe_optimizer, "privacy": _probe_privacy}


class ExtensionRegistry:
    def __init__(self):
        self._items: dict[tuple[str, str], Registration] = {}

    def register(self, kind: str, name: str, impl) -> Registration:
        if kind not in KINDS:
            raise RegistrationError(f"unknown extension kind {kind!r}; expected one of {KINDS}")
        if (kind, name) in self._items:
            raise RegistrationError(f"{kind} {name!r} is already registered")
        checked = _PROBES[kind](impl)
        reg = Registration(kind, name, checked)
        self._items[(kind, name)] = reg
        return reg

    def get(self, kind: str, name: str):
        reg = self._items.get((kind, name))
        return reg.impl if reg else None

    def names(self, kind: str) -> list[str]:
        return [n for k, n in self._items if k == kind]

    def __contains__(self, key) -> bool:
        return key in self._items


default_registry = ExtensionRegistry()


def register_extension(kind: str, name: str, impl, registry: ExtensionRegistry | None = None) -> Registration:
    return (registry or default_registry).register(kind, name, impl)
