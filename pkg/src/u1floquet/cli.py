"""Command line entry point: ``u1floquet <subcommand> [options]``.

Exit codes: 0 success, 2 config error, 3 resource guard, 4 numerical failure,
130 interrupted (partial results are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .basis import ConfigError, ResourceError
from .config import ExperimentConfig, load_config
from .harness import PartialResult, run, sweep
from .spectral import NumericalError

SUBCOMMANDS = ("levelstats", "transport", "entanglement", "sweep", "sample-gate", "calibrate")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="u1floquet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--realizations", type=int, dest="n_realizations")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--threads", type=int)
        p.add_argument("--L", type=int)
        p.add_argument("--q", type=int)
        p.add_argument("--r", type=int)
        p.add_argument("--T", type=int)
        p.add_argument("--family")
        p.add_argument("--parameter", type=float)
        p.add_argument("--n-up", type=int, dest="n_up")
        p.add_argument("--t-max", type=int, dest="t_max")
        p.add_argument("--random-in-time", action="store_const", const=True, dest="random_in_time")
        if name == "sweep":
            p.add_argument("--grid", type=float, nargs="+", help="parameter values")
            p.add_argument("--sizes", type=int, nargs="+", help="system sizes")
            p.add_argument("--periods", type=int, nargs="+", help="Floquet periods")
    return parser


def _config(args) -> ExperimentConfig:
    experiment = "levelstats" if args.command == "sweep" else args.command
    overrides = {k: getattr(args, k) for k in (
        "seed", "n_realizations", "threads", "L", "q", "r", "T", "family", "parameter",
        "n_up", "t_max", "random_in_time")}
    overrides["out"] = str(args.out) if args.out else None
    if args.config:
        cfg = load_config(args.config, **overrides)
        return cfg.replace(experiment=experiment)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return ExperimentConfig(experiment=experiment, **overrides)


def _report(table, out):
    if out:
        paths = table.write(out)
        print(f"wrote {paths['csv']}")
    else:
        print(table.csv_text(), end="")


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
        out = Path(cfg.out) if cfg.out else None
        if args.command == "sweep":
            tables, summary = sweep(cfg, args.grid or [cfg.parameter], args.sizes, args.periods)
            if out:
                for table in tables:
                    if table is not None:
                        c = table.header["config"]
                        table.write(out, f"levelstats_L{c['L']}_T{c['T']}_p{c['parameter']}")
            _report(summary, out)
        elif args.command == "sample-gate":
            table = run(cfg)
            text = json.dumps(table.payload, indent=2)
            if out:
                out.mkdir(parents=True, exist_ok=True)
                (out / "gate.json").write_text(text)
            print(text)
        else:
            _report(run(cfg), out)
    except (ConfigError, yaml.YAMLError, FileNotFoundError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except PartialResult as exc:
        _report(exc.table, out)
        print("interrupted; partial results written", file=sys.stderr)
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
