"""Command line: ``nodal-lab run|plot|list``.

Exit codes: 0 pass, 1 acceptance failure, 2 usage error, 3 internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import traceback
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import experiments as ex
from .errors import ConfigError
from .plotting import MissingTableError, plot

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
log = logging.getLogger("nodal_lab")

_TOP_KEYS = {"experiment", "seed", "out", "budget_scale", "params"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def load_config(path: str | None, experiment: str | None, seed=None, out=None, budget_scale=None) -> ex.ExperimentConfig:
    raw: dict = {}
    if path:
        try:
            raw = tomllib.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}", "config") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}", "config") from None
    for k in raw:
        if k not in _TOP_KEYS:
            raise ConfigError(f"unknown config key {k!r}; allowed: {sorted(_TOP_KEYS)}", k)
    exp = experiment or raw.get("experiment")
    if not exp:
        raise ConfigError("no experiment given (positional EXP or 'experiment' in the config)", "experiment")
    if experiment and raw.get("experiment") and ex.get_spec(experiment).id != ex.get_spec(raw["experiment"]).id:
        raise ConfigError(f"experiment {experiment!r} disagrees with config file {raw['experiment']!r}", "experiment")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be a table", "params")
    s = raw.get("seed", 0) if seed is None else seed
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2**64:
        raise ConfigError("seed must be an integer in [0, 2^64)", "seed")
    b = raw.get("budget_scale", 1.0) if budget_scale is None else budget_scale
    if isinstance(b, bool) or not isinstance(b, (int, float)):
        raise ConfigError("budget_scale must be a number", "budget_scale")
    cfg = ex.ExperimentConfig(ex.get_spec(exp).id, s, out or raw.get("out", "results"), float(b), dict(params))
    ex.resolve_params(cfg)  # validate early
    return cfg


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nodal-lab", description="Reproducible nodal-geometry experiments E1-E7.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run one experiment and write its report")
    r.add_argument("experiment", nargs="?", help="E1..E7 or an experiment name")
    r.add_argument("--config", help="TOML file with experiment, seed, out, budget_scale and a [params] table")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output root; files go to OUT/<EXP>/")
    r.add_argument("--budget-scale", type=float)
    r.add_argument("--no-plot", action="store_true")
    pl = sub.add_parser("plot", help="write SVG plots for an existing report directory")
    pl.add_argument("report_dir")
    sub.add_parser("list", help="list experiments and their default parameters")
    return p


def _list() -> int:
    import dataclasses

    for spec in ex.EXPERIMENTS.values():
        print(f"{spec.id}  {spec.name}: {spec.description}")
        for f in dataclasses.fields(spec.params):
            print(f"    {f.name} = {getattr(spec.params(), f.name)!r}")
    return EXIT_PASS


def _run(args) -> int:
    cfg = load_config(args.config, args.experiment, args.seed, args.out, args.budget_scale)
    report = ex.run(cfg)
    out = ex.write_report(report, Path(cfg.out) / cfg.experiment)
    if not args.no_plot:
        plot(out)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}" + (f"  ({c.detail})" if c.detail else ""))
    print(f"{cfg.experiment}: {'PASS' if report.passed else 'FAIL'}  -> {out}  [{report.wall_clock:.1f} s]")
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except ConfigError as exc:
        print(f"nodal-lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "list":
            return _list()
        if args.command == "plot":
            for p in plot(args.report_dir):
                print(p)
            return EXIT_PASS
        return _run(args)
    except ConfigError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"nodal-lab: usage error{key}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MissingTableError, FileNotFoundError) as exc:
        print(f"nodal-lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
