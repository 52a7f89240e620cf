"""End-to-end run: build the game, apply optimizations, estimate, mask,
score and serialize."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from pathlib import Path

import numpy as np

from . import estimators as est
from .config import RunConfig, validate
from .desk import desk_game
from .game import GameSpec, UtilityCache, make_game
from .metrics import (RunMetrics, effectiveness_score, effectiveness_score_abs, epsilon, probe_table,
                      ranking_variance, spearman)
from .optimizers import OptimizerConfig, apply_optimizers
from .privacy import PrivacyConfig, apply_privacy, parse_levels, strength_params
from .registry import default_registry
from .samplers import Sampler

log = logging.getLogger(__name__)

EXACT_REFERENCE_MAX_N = 14
CUSTOM_GAME_N = 4


def build_game(cfg: RunConfig, registry=None) -> GameSpec:
    registry = registry or default_registry
    custom = registry.get("utility", cfg.utility_function)
    if custom is not None:
        return make_game(cfg.n_players or CUSTOM_GAME_N, custom, cfg.seed, cfg.utility_function)
    kw = {}
    if cfg.task == "RI":
        kw = {"output": cfg.utility_function, "explicand": cfg.explicand}
    elif cfg.task in ("DV", "DSV"):
        kw = {"learner": cfg.utility_function}
    return desk_game(cfg.task, cfg.n_players, cfg.seed, cfg.dataset, **kw)


def _sampler(cfg: RunConfig, n: int, registry):
    custom = registry.get("sampler", cfg.sampling)
    if custom is not None:
        return custom(n, cfg.seed)
    return Sampler(n, cfg.seed, cfg.sampling)


def estimate(game: GameSpec, cfg: RunConfig, opt: OptimizerConfig | None = None, registry=None,
             cache: UtilityCache | None = None) -> est.ShapleyResult:
    """Run the configured base algorithm on ``game``."""
    registry = registry or default_registry
    n = game.n
    a = cfg.base_algo
    common = dict(seed=cfg.seed, tau=cfg.tau, max_evals=cfg.max_evals, cache=cache, optimizer=opt)
    if a == "exact":
        return est.exact_shapley(game, cache=cache)
    if a == "LOO":
        return est.loo_result(game, cache)
    if a == "UNIF":
        return est.uniform_result(game, cache)
    if a == "LINEAR":
        t0 = time.perf_counter()
        m = game.meta
        values = est.linear_closed_form(m["model"], m["x"], m["means"], m["target"])
        return est.ShapleyResult(values, 0, time.perf_counter() - t0, True, algo="LINEAR",
                                 stop_reason="closed-form")
    smp = _sampler(cfg, n, registry)
    if a == "MC":
        return est.mc_shapley(game, smp, **common)
    if a == "RE":
        return est.re_shapley(game, None, smp, **common)
    if a == "MLE":
        return est.mle_shapley(game, 20, None, smp, **common)
    if a == "GT":
        return est.gt_shapley(game, None, 0.1, smp, **common)
    if a == "CP":
        return est.cp_shapley(game, None, 1e-3, smp, **common)
    raise ValueError(f"unknown base algorithm {a!r}")


def privacy_config(cfg: RunConfig, n: int) -> PrivacyConfig:
    m = cfg.privacy_protection_measure
    pc = PrivacyConfig(m, cfg.dp_sigma, n, n, cfg.seed)
    if cfg.strength is not None and m in ("dp", "qt", "dr"):
        for k, v in strength_params(m, cfg.strength, n).items():
            setattr(pc, k, v)
        return pc
    if cfg.qt_levels is not None:
        pc.qt_levels = parse_levels(cfg.qt_levels, n)
    if cfg.dr_keep is not None:
        pc.dr_keep = cfg.dr_keep
    return pc


def run_pipeline(cfg: RunConfig, registry=None, game: GameSpec | None = None):
    """Returns (result, metrics, record).  ``record`` is the JSON-ready output."""
    registry = registry or default_registry
    cfg = validate(cfg, registry)
    t0 = time.perf_counter()
    game = game or build_game(cfg, registry)
    custom_opt = registry.get("optimizer", cfg.optimization_strategy)
    if custom_opt is not None:
        opt = OptimizerConfig()
        run_game, opt_info = custom_opt(game), {"strategy": cfg.optimization_strategy}
    else:
        opt = OptimizerConfig.from_strategy(cfg.optimization_strategy, tc_ratio=cfg.tc_ratio,
                                            ga_epochs=cfg.ga_epochs, tss_quantile=cfg.tss_quantile)
        run_game, opt_info = apply_optimizers(game, opt, cfg.seed)
    result = estimate(run_game, cfg, opt, registry)

    pc = privacy_config(cfg, game.n)
    custom_priv = registry.get("privacy", pc.measure)
    if pc.measure == "dr" and result.mc_variance is None:
        raise ValueError(f"dimension reduction needs marginal variances, which {result.algo} does not record")
    released, suppressed = apply_privacy(result.values, pc, result.mc_variance, custom_priv)

    exact = None
    want = cfg.exact_reference == "always" or (cfg.exact_reference == "auto" and game.n <= EXACT_REFERENCE_MAX_N)
    if want:
        exact = est.exact_shapley(game, force=True, cache=UtilityCache()).values
    metrics = RunMetrics(n_uc=result.n_uc, t_uc_mean=result.t_uc_mean,
                         total_time=time.perf_counter() - t0, queries=result.queries)
    if exact is not None and np.linalg.norm(exact) > 0 and np.linalg.norm(released) > 0:
        metrics.epsilon = epsilon(released, exact)
        if released.sum() != 0 and exact.sum() != 0:
            metrics.effectiveness_score = effectiveness_score(released, exact)
            metrics.effectiveness_score_abs = effectiveness_score_abs(released, exact)
    if pc.measure != "none":
        metrics.ranking_variance = ranking_variance(result.values, released, None, suppressed)
    if cfg.probe:
        metrics.probe = probe_table(game, exact if exact is not None else result.values)
        nsv = [r["normalized_sv"] for r in metrics.probe]
        metrics.probe_spearman = {
            "remove": spearman(nsv, [r["delta_remove"] for r in metrics.probe]),
            "add": spearman(nsv, [r["delta_add"] for r in metrics.probe]),
        }
    metrics.total_time = time.perf_counter() - t0
    record = make_record(cfg, game, result, released, suppressed, metrics, exact, opt_info, pc)
    return result, metrics, record


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def make_record(cfg, game, result, released, suppressed, metrics, exact, opt_info, pc) -> dict:
    m = metrics.to_dict()
    timing = {k: m.pop(k) for k in ("t_uc_mean", "total_time")}
    timing["wall_time"] = result.wall_time
    rec = {
        "config": cfg.to_dict(),
        "game": {"label": game.label, "n": game.n, "seed": game.seed},
        "algo": result.algo,
        "values": released,
        "suppressed": suppressed,
        "raw_values": result.values,
        "exact": exact,
        "n_uc": result.n_uc,
        "queries": result.queries,
        "truncated": result.truncated,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "flags": result.flags,
        "optimization": opt_info,
        "privacy": {"measure": pc.measure, "dp_sigma": pc.dp_sigma, "qt_levels": pc.qt_levels,
                    "dr_keep": pc.dr_keep},
        "trace": [{"e": e, "values": v} for e, v in result.trace],
        "metrics": m,
    }
    if not cfg.omit_timing:
        rec["timing"] = timing
    return _clean(rec)


def failure_record(cfg: RunConfig, exc) -> dict:
    """Record for a run aborted by a utility failure, with the trace computed so far."""
    return _clean({
        "config": cfg.to_dict(),
        "error": str(exc),
        "coalition": getattr(exc, "encoding", None),
        "converged": False,
        "stop_reason": "utility_error",
        "queries": getattr(exc, "queries", None),
        "n_uc": getattr(exc, "n_uc", None),
        "trace": [{"e": e, "values": v} for e, v in getattr(exc, "partial_trace", [])],
    })


def write_output(record: dict, path, csv_path=None) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")
        if csv_path:
            buf = io.StringIO()
            w = csv.writer(buf)
            w.writerow(["player", "value", "suppressed", "raw_value"])
            for i, (v, s, r) in enumerate(zip(record["values"], record["suppressed"], record["raw_values"])):
                w.writerow([i, v, int(s), r])
            Path(csv_path).write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write output to {path}: {exc}") from exc
    return path


def read_output(path) -> dict:
    return json.loads(Path(path).read_text())


# sweeps

def sweep(cfg: RunConfig, param: str, values, registry=None) -> list[dict]:
    """One pipeline run per value of ``param``; returns table rows."""
    rows = []
    for v in values:
        c = RunConfig(**{**cfg.to_dict(), param: v})
        res, met, _ = run_pipeline(c, registry)
        rows.append({param: v, "algo": res.algo, "n_uc": res.n_uc, "queries": res.queries,
                     "converged": res.converged, "epsilon": met.epsilon,
                     "ranking_variance": met.ranking_variance})
    return rows


def probe_sweep(seed: int = 0, tasks=("RI", "DV", "DSV", "FL")) -> tuple[list[dict], dict]:
    """Utility deltas against normalized exact values for each game family.

    Returns (table rows, Spearman correlation per family and mode).
    """
    rows, corr = [], {}
    for task in tasks:
        game = desk_game(task, seed=seed)
        cache = UtilityCache()
        phi = est.exact_shapley(game, cache=cache).values
        table = probe_table(game, phi, cache)
        for r in table:
            rows.append({"task": task, **r})
        nsv = [r["normalized_sv"] for r in table]
        corr[task] = {"remove": spearman(nsv, [r["delta_remove"] for r in table]),
                      "add": spearman(nsv, [r["delta_add"] for r in table])}
    return rows, corr


def write_table(rows: list[dict], path=None) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    text = buf.getvalue()
    if path:
        Path(path).write_text(text)
    return text
