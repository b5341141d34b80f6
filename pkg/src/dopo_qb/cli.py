"""Command-line entry point: ``dopo-qb run | validate | list``.

Exit status: 0 success, 1 configuration error, 2 integration failure,
3 fit or steady-state failure, 4 acceptance miss (only with ``--check``).
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from importlib import metadata
from pathlib import Path

from . import config, experiments
from .errors import (ConfigError, FitError, IntegrationError, InvalidArgumentError,
                     NotConvergedError)

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION, EXIT_FIT, EXIT_CHECK = 0, 1, 2, 3, 4


def fmt(value):
    """17 significant digits for floats; lowercase booleans."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, complex):
        raise TypeError("complex values must be split before serialization")
    if isinstance(value, float) or hasattr(value, "dtype"):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(value)


def code_version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_table(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_outputs(cfg, outcome):
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (columns, rows) in outcome.tables.items():
        write_table(out_dir / f"{name}.csv", columns, rows)
    lines = [f"experiment={outcome.experiment}"]
    lines += [f"{k}={fmt(v)}" for k, v in outcome.summary]
    lines += [f"criterion.{v.criterion}={'pass' if v.passed else 'fail'}" for v in outcome.verdicts]
    lines.append(f"all_pass={fmt(all(v.passed for v in outcome.verdicts))}")
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest = f"# dopo-qb {code_version()}\n" + config.to_ini(cfg)
    (out_dir / "manifest.ini").write_text(manifest, encoding="utf-8")
    return out_dir


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def cmd_run(args):
    try:
        cfg = config.load(args.config, experiment=args.experiment, output_dir=args.out,
                          threads=args.threads)
    except ConfigError as exc:
        _err(exc)
        return EXIT_CONFIG
    for w in config.lint(cfg):
        print(f"warning: {w}", file=sys.stderr)
    try:
        outcome = experiments.run(cfg)
    except IntegrationError as exc:
        _err(f"integration failed: {exc}")
        return EXIT_INTEGRATION
    except (FitError, NotConvergedError) as exc:
        _err(f"fit failed: {exc}")
        return EXIT_FIT
    except InvalidArgumentError as exc:
        _err(exc)
        return EXIT_CONFIG
    for note in outcome.notes:
        print(f"warning: {note}", file=sys.stderr)
    out_dir = write_outputs(cfg, outcome)
    for v in outcome.verdicts:
        print(v.line())
    print(f"wrote {len(outcome.tables)} tables to {out_dir}")
    if args.check and not all(v.passed for v in outcome.verdicts):
        return EXIT_CHECK
    return EXIT_OK


def cmd_validate(args):
    try:
        cfg = config.load(args.config)
    except ConfigError as exc:
        print(f"error: {exc}")
        return EXIT_CONFIG
    warnings = config.lint(cfg)
    for w in warnings:
        print(f"warning: {w}")
    print(f"config ok ({len(warnings)} warning{'s' if len(warnings) != 1 else ''})")
    return EXIT_OK


def cmd_list(_args):
    width = max(map(len, experiments.CATALOG))
    for name, text in experiments.CATALOG.items():
        print(f"{name:<{width}}  {text}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="dopo-qb", description="DOPO quantum battery experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV, summary and manifest")
    run.add_argument("experiment", choices=config.EXPERIMENTS)
    run.add_argument("--config", help="INI config file")
    run.add_argument("--out", help=f"output directory (overrides {config.OUTPUT_ENV} and the config)")
    run.add_argument("--check", action="store_true", help="exit 4 if an acceptance target is missed")
    run.add_argument("--threads", type=int, help="worker processes for sweeps")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config file and lint its physics parameters")
    val.add_argument("--config", required=True)
    val.set_defaults(func=cmd_validate)

    lst = sub.add_parser("list", help="list the experiment catalog")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
