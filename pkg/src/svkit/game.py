"""Players, coalitions, permutations and the utility-function contract.

Coalitions are stored as Python integers used as bit sets: bit ``i`` is set
when player ``i`` is a member.  The integer form is canonical for any number
of players, so it doubles as the utility-cache key.
"""
from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

CHEAP = "cheap"
MODEL_TRAINING = "model-training"


class GameError(ValueError):
    """Raised for malformed players, coalitions or permutations."""


class UtilityError(RuntimeError):
    """A utility function failed on a specific coalition."""

    def __init__(self, coalition: "Coalition", cause: BaseException):
        self.coalition = coalition
        self.encoding = coalition.encode().hex()
        super().__init__(
            f"utility failed on coalition {sorted(coalition)} "
            f"(encoding {self.encoding}): {cause!r}"
        )


@dataclass(frozen=True)
class PlayerSet:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise GameError("a player set needs at least one player")

    @property
    def players(self) -> range:
        return range(self.n)

    @property
    def grand_mask(self) -> int:
        return (1 << self.n) - 1

    def grand(self) -> "Coalition":
        return Coalition(self.grand_mask, self.n)

    def empty(self) -> "Coalition":
        return Coalition(0, self.n)

    def __contains__(self, p: int) -> bool:
        return 0 <= p < self.n

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.n))


def mask_of(members: Iterable[int]) -> int:
    m = 0
    for p in members:
        m |= 1 << int(p)
    return m


def members_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


class Coalition:
    """An immutable subset of ``0..n-1``."""

    __slots__ = ("mask", "n")

    def __init__(self, mask: int, n: int):
        if mask < 0 or mask >> n:
            raise GameError(f"coalition mask {mask:#x} has members outside 0..{n - 1}")
        self.mask = mask
        self.n = n

    @classmethod
    def of(cls, members: Iterable[int], n: int) -> "Coalition":
        members = list(members)
        for p in members:
            if not 0 <= p < n:
                raise GameError(f"player {p} is not in 0..{n - 1}")
        return cls(mask_of(members), n)

    def encode(self) -> bytes:
        """Fixed 8-byte word for n <= 64, otherwise ceil(n/8) bytes (little endian)."""
        width = 8 if self.n <= 64 else (self.n + 7) // 8
        return self.mask.to_bytes(width, "little")

    @classmethod
    def decode(cls, data: bytes, n: int) -> "Coalition":
        return cls(int.from_bytes(data, "little"), n)

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(members_of(self.mask))

    def __contains__(self, p: int) -> bool:
        return bool(self.mask >> p & 1) if p >= 0 else False

    def __iter__(self) -> Iterator[int]:
        return iter(members_of(self.mask))

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __eq__(self, other) -> bool:
        return isinstance(other, Coalition) and self.mask == other.mask and self.n == other.n

    def __hash__(self) -> int:
        return hash((self.mask, self.n))

    def __repr__(self) -> str:
        return f"Coalition({set(self.members) or '{}'}, n={self.n})"

    def with_player(self, p: int) -> "Coalition":
        return Coalition(self.mask | (1 << p), self.n)

    def without_player(self, p: int) -> "Coalition":
        return Coalition(self.mask & ~(1 << p), self.n)

    def indicator(self) -> np.ndarray:
        z = np.zeros(self.n, dtype=bool)
        z[list(members_of(self.mask))] = True
        return z


def as_permutation(order: Sequence[int], n: int | None = None) -> tuple[int, ...]:
    order = tuple(int(p) for p in order)
    n = len(order) if n is None else n
    if len(order) != n or sorted(order) != list(range(n)):
        raise GameError(f"{order} is not a permutation of 0..{n - 1}")
    return order


def predecessors(perm: Sequence[int], p: int) -> Coalition:
    """Players strictly before ``p`` in ``perm``."""
    n = len(perm)
    try:
        k = list(perm).index(p)
    except ValueError:
        raise GameError(f"player {p} does not appear in permutation {tuple(perm)}") from None
    return Coalition(mask_of(perm[:k]), n)


def complement(c: Coalition, ps: PlayerSet) -> Coalition:
    if c.n != ps.n or c.mask & ~ps.grand_mask:
        raise GameError(f"{c!r} is not a subset of a {ps.n}-player set")
    return Coalition(ps.grand_mask & ~c.mask, ps.n)


class UtilityFunction:
    """Base class for coalition utilities.

    Subclasses implement :meth:`evaluate`, which receives the coalition and a
    64-bit seed derived from the game seed and the coalition encoding.  The
    empty coalition is never passed in; its utility is fixed at zero.
    """

    name = "utility"
    deterministic = True
    cost = CHEAP

    def evaluate(self, coalition: Coalition, seed: int) -> float:
        raise NotImplementedError

    def __call__(self, coalition: Coalition, seed: int = 0) -> float:
        return self.evaluate(coalition, seed)


class FunctionUtility(UtilityFunction):
    """Wraps a plain callable ``fn(coalition) -> float``.

    With ``seeded=True`` the callable is invoked as ``fn(coalition, seed)``.
    """

    def __init__(self, fn: Callable, name: str = "function", *, seeded: bool = False,
                 cost: str = CHEAP, deterministic: bool = True):
        self.fn = fn
        self.name = name
        self.seeded = seeded
        self.cost = cost
        self.deterministic = deterministic

    def evaluate(self, coalition, seed):
        return self.fn(coalition, seed) if self.seeded else self.fn(coalition)


class TableUtility(UtilityFunction):
    """Utility read from a dense table indexed by coalition mask."""

    name = "table"

    def __init__(self, table: np.ndarray, name: str = "table"):
        table = np.asarray(table, dtype=float)
        n = int(round(np.log2(len(table))))
        if len(table) != 1 << n:
            raise GameError("table length must be a power of two")
        self.table = table.copy()
        self.table[0] = 0.0
        self.name = name

    def evaluate(self, coalition, seed):
        return float(self.table[coalition.mask])


def as_utility(u) -> UtilityFunction:
    if isinstance(u, UtilityFunction):
        return u
    if callable(u):
        return FunctionUtility(u, getattr(u, "__name__", "function"))
    raise TypeError(f"cannot use {u!r} as a utility function")


@dataclass(frozen=True)
class GameSpec:
    player_set: PlayerSet
    utility: UtilityFunction
    seed: int = 0
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.player_set.n

    def replace_utility(self, utility: UtilityFunction, label: str | None = None) -> "GameSpec":
        return GameSpec(self.player_set, utility, self.seed, label or self.label, dict(self.meta))


def make_game(n: int, utility, seed: int = 0, label: str = "") -> GameSpec:
    return GameSpec(PlayerSet(n), as_utility(utility), seed, label)


def coalition_seed(game_seed: int, mask: int, n: int) -> int:
    """Per-coalition 64-bit seed; independent of evaluation order."""
    width = 8 if n <= 64 else (n + 7) // 8
    h = hashlib.blake2b(digest_size=8)
    h.update(int(game_seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"))
    h.update(mask.to_bytes(width, "little"))
    return int.from_bytes(h.digest(), "little")


class UtilityCache:
    """Coalition mask -> utility value.  Safe for concurrent use."""

    def __init__(self):
        self._data: dict[int, float] = {}
        self._lock = threading.Lock()

    def get(self, mask: int):
        return self._data.get(mask)

    def put(self, mask: int, value: float) -> None:
        with self._lock:
            self._data[mask] = value

    def __contains__(self, mask: int) -> bool:
        return mask in self._data

    def __len__(self) -> int:
        return len(self._data)


class Counters:
    """Utility-computation accounting shared by one estimator run.

    ``n_uc`` counts actual utility computations (cache misses).  ``queries``
    counts every utility value the estimator consumed, including cache hits
    and values imputed by truncation; the convergence clock runs on it.
    """

    def __init__(self):
        self.n_uc = 0
        self.queries = 0
        self.truncated = 0
        self.eval_time = 0.0
        self._lock = threading.Lock()

    def add_eval(self, seconds: float) -> None:
        with self._lock:
            self.n_uc += 1
            self.eval_time += seconds

    @property
    def t_uc_mean(self) -> float:
        return self.eval_time / self.n_uc if self.n_uc else 0.0


def eval_mask(game: GameSpec, mask: int, cache: UtilityCache | None, counters: Counters | None) -> float:
    if mask == 0:
        return 0.0
    if cache is not None:
        hit = cache.get(mask)
        if hit is not None:
            return hit
    coalition = Coalition(mask, game.n)
    seed = coalition_seed(game.seed, mask, game.n)
    t0 = time.perf_counter()
    try:
        value = float(game.utility.evaluate(coalition, seed))
    except Exception as exc:
        raise UtilityError(coalition, exc) from exc
    elapsed = time.perf_counter() - t0
    if counters is not None:
        counters.add_eval(elapsed)
    if cache is not None:
        cache.put(mask, value)
    return value


def eval_utility(game: GameSpec, c: Coalition, cache: UtilityCache | None = None,
                 counters: Counters | None = None) -> float:
    """U(c), consulting ``cache`` first.  Only cache misses count towards ``n_uc``."""
    if c.n != game.n:
        raise GameError(f"coalition over {c.n} players used with a {game.n}-player game")
    return eval_mask(game, c.mask, cache, counters)


def all_utilities(game: GameSpec, cache: UtilityCache | None = None,
                  counters: Counters | None = None, max_n: int = 25) -> np.ndarray:
    """Dense table of U over all 2^n coalitions."""
    n = game.n
    if n > max_n:
        raise GameError(f"refusing to enumerate 2^{n} coalitions (limit n <= {max_n})")
    table = np.empty(1 << n)
    for mask in range(1 << n):
        table[mask] = eval_mask(game, mask, cache, counters)
    return table
