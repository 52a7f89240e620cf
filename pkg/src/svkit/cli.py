"""Command line: ``svkit run``, ``svkit attack`` and ``svkit sweep``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .attacks import run_fia, run_mia
from .config import ConfigError, RunConfig, build_parser, load_config
from .game import UtilityError
from .pipeline import failure_record, probe_sweep, run_pipeline, sweep, write_output, write_table
from .privacy import LEVELS

EXIT_NOT_CONVERGED = 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svkit", description="Shapley value computation for data analytics")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    build_parser(sub.add_parser("run", help="estimate Shapley values for one configuration"))

    a = sub.add_parser("attack", help="simulate an inference attack against released values")
    a.add_argument("--attack", choices=("fia_aux", "fia_gen", "mia"), required=True)
    a.add_argument("--defense", choices=("none", "dp", "qt", "dr"), default="none")
    a.add_argument("--strength", choices=LEVELS, default=None)
    a.add_argument("--trials", type=int, default=None)
    a.add_argument("--rounds", type=int, default=30, help="shadow rounds per membership target")
    a.add_argument("--victims", type=int, default=20, help="victim rows per feature-inference trial")
    a.add_argument("--distro", choices=("uniform01", "gaussian"), default="uniform01")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--sweep", action="store_true", help="run every defense at every strength")
    a.add_argument("--output", help="JSON report path (sweep: CSV table path)")

    s = sub.add_parser("sweep", help="repeat a run over values of one parameter")
    build_parser(s)
    s.add_argument("--param", help="RunConfig field to sweep")
    s.add_argument("--values", help="comma-separated values")
    s.add_argument("--probes", action="store_true",
                   help="emit the utility-delta vs normalized value table for all game families")
    s.add_argument("--table", help="CSV output path")
    return p


def _attack(ns) -> int:
    def one(defense, strength):
        if ns.attack == "mia":
            return run_mia(defense, strength, ns.trials or 2, ns.seed, ns.rounds)
        return run_fia(ns.attack, defense, strength, ns.trials or 10, ns.seed, ns.victims, distro=ns.distro)

    if ns.sweep:
        rows = []
        for defense in ("none", "dp", "qt", "dr"):
            for strength in ((None,) if defense == "none" else LEVELS):
                r = one(defense, strength)
                rows.append({"attack": r.attack, "defense": defense, "strength": strength or "",
                             "metric": r.metric, "score": r.score, "ranking_variance": r.ranking_variance})
        print(write_table(rows, ns.output), end="")
        return 0
    report = one(ns.defense, ns.strength)
    text = json.dumps(report.to_dict(), indent=1)
    if ns.output:
        with open(ns.output, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _coerce(param: str, raw: str):
    kind = str(RunConfig.__dataclass_fields__[param].type)
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw


def _sweep(ns) -> int:
    if ns.probes:
        rows, corr = probe_sweep(ns.seed or 0)
        print(write_table(rows, ns.table), end="")
        print(json.dumps({"spearman": corr}, indent=1), file=sys.stderr)
        return 0
    if not ns.param or not ns.values:
        raise ConfigError("sweep needs --param and --values, or --probes")
    if ns.param not in RunConfig.__dataclass_fields__:
        raise ConfigError(f"unknown parameter {ns.param!r}")
    cfg = load_config(ns)
    values = [_coerce(ns.param, v) for v in ns.values.split(",")]
    print(write_table(sweep(cfg, ns.param, values), ns.table), end="")
    return 0


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.command == "attack":
            return _attack(ns)
        if ns.command == "sweep":
            return _sweep(ns)
        cfg = load_config(ns)
        try:
            result, metrics, record = run_pipeline(cfg)
        except UtilityError as exc:
            if cfg.output:
                write_output(failure_record(cfg, exc), cfg.output)
            print(f"svkit: error: {exc}", file=sys.stderr)
            return 1
        if cfg.output:
            write_output(record, cfg.output, cfg.csv)
        else:
            print(json.dumps(record, indent=1, sort_keys=True))
        return 0 if result.converged else EXIT_NOT_CONVERGED
    except (ConfigError, ValueError, OSError) as exc:
        print(f"svkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
