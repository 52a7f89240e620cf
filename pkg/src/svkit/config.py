"""Run configuration: defaults, JSON file and command-line flags."""
from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .builtin_games import PLAYER_OF_TASK, TASKS
from .estimators import ALGOS
from .optimizers import STRATEGIES as OPTIMIZATIONS
from .privacy import LEVELS, MEASURES
from .registry import default_registry
from .samplers import STRATEGIES as SAMPLINGS


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    task: str = "RI"
    dataset: str | None = None
    player: str | None = None
    utility_function: str | None = None
    base_algo: str = "MC"
    sampling: str = "random"
    optimization_strategy: str = "None"
    privacy_protection_measure: str = "none"
    strength: str | None = None
    n_players: int | None = None
    explicand: int | None = None
    label: str = "label"
    tc_ratio: float = 0.9
    ga_epochs: int = 1
    tss_quantile: float = 0.2
    dp_sigma: float = 0.5
    qt_levels: str | None = None
    dr_keep: int | None = None
    tau: float = 0.05
    max_evals: int = 1_000_000
    seed: int = 0
    output: str | None = None
    csv: str | None = None
    exact_reference: str = "auto"
    probe: bool = False
    omit_timing: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
BOOL_FIELDS = ("probe", "omit_timing")
UTILITIES = {"RI": ("probability", "linear"), "DV": ("logistic", "knn"),
             "DSV": ("logistic", "knn"), "FL": ("fedavg",)}


def _canon(value: str, valid, what: str, extra=()):
    for v in tuple(valid) + tuple(extra):
        if str(value).lower() == str(v).lower():
            return v
    raise ConfigError(f"invalid {what} {value!r}; valid values: {', '.join(map(str, tuple(valid) + tuple(extra)))}")


def validate(cfg: RunConfig, registry=None) -> RunConfig:
    registry = registry if registry is not None else default_registry
    names = registry.names
    cfg.task = _canon(cfg.task, TASKS, "task")
    cfg.base_algo = _canon(cfg.base_algo, ALGOS, "base_algo")
    cfg.sampling = _canon(cfg.sampling, SAMPLINGS, "sampling", names("sampler"))
    cfg.optimization_strategy = _canon(cfg.optimization_strategy or "None", OPTIMIZATIONS,
                                       "optimization_strategy", names("optimizer"))
    cfg.privacy_protection_measure = _canon(cfg.privacy_protection_measure or "none", MEASURES,
                                            "privacy_protection_measure", names("privacy"))
    if cfg.strength is not None:
        cfg.strength = _canon(cfg.strength, LEVELS, "strength")
    expected = PLAYER_OF_TASK[cfg.task]
    if cfg.player is None:
        cfg.player = expected
    elif cfg.player != expected:
        raise ConfigError(f"task {cfg.task} values players of type {expected!r}, not {cfg.player!r}")
    if cfg.utility_function is None:
        cfg.utility_function = UTILITIES[cfg.task][0]
    elif cfg.utility_function not in UTILITIES[cfg.task] and cfg.utility_function not in names("utility"):
        raise ConfigError(f"utility {cfg.utility_function!r} not available for task {cfg.task}; "
                          f"valid: {', '.join(UTILITIES[cfg.task] + tuple(names('utility')))}")
    if cfg.base_algo == "LINEAR" and not (cfg.task == "RI" and cfg.utility_function == "linear"):
        raise ConfigError("base_algo LINEAR needs task RI with the linear utility")
    if not cfg.tau > 0:
        raise ConfigError("tau must be positive")
    if not 0 < cfg.tc_ratio < 1:
        raise ConfigError("tc_ratio must lie in (0, 1)")
    if cfg.exact_reference not in ("auto", "always", "never"):
        raise ConfigError("exact_reference must be auto, always or never")
    return cfg


def build_parser(parser: argparse.ArgumentParser | None = None) -> argparse.ArgumentParser:
    """Flags for every RunConfig field; defaults are left unset so precedence can be resolved."""
    p = parser or argparse.ArgumentParser(prog="svkit run")
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    for f in fields(RunConfig):
        flag = f"--{f.name}"
        if f.name in BOOL_FIELDS:
            p.add_argument(flag, action="store_true", default=None)
            continue
        kind = str(f.type)
        conv = int if kind.startswith("int") else float if kind.startswith("float") else str
        p.add_argument(flag, type=conv, default=None)
    return p


def load_config(args=None, file=None, registry=None) -> RunConfig:
    """Defaults, overridden by the JSON file, overridden by flags."""
    if isinstance(args, argparse.Namespace):
        ns = args
    else:
        ns = build_parser().parse_args(args or [])
    values = {}
    path = file or getattr(ns, "config", None)
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        unknown = set(data) - set(FIELD_TYPES)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        values.update(data)
    for name in FIELD_TYPES:
        v = getattr(ns, name, None)
        if v is not None:
            values[name] = v
    return validate(RunConfig(**values), registry)
