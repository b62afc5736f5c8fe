"""Command line entry point: ``asl2lab run | verify | presets``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from .config import PRESET_NAMES, ConfigError, load, preset
from .verification import SUITES

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
WORKERS_ENV = "ASL2LAB_WORKERS"

log = logging.getLogger("asl2lab")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asl2lab", description="Equidistribution experiments on affine lattices.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("--config", required=True, help="path to a flat TOML config")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--workers", type=int, help=f"override worker count (also ${WORKERS_ENV})")
    r.add_argument("--out", help="output directory (default: the config's output)")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", required=True, choices=sorted(SUITES))

    s = sub.add_parser("presets", help="list or print presets")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--list", action="store_true")
    g.add_argument("--show", choices=PRESET_NAMES, help="print a preset as a config file")

    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _cmd_run(args) -> int:
    from .runner import NumericFailure, run

    try:
        cfg = load(args.config)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        workers = args.workers
        if workers is None and os.environ.get(WORKERS_ENV):
            try:
                workers = int(os.environ[WORKERS_ENV])
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV} must be an integer")
        if workers is not None:
            changes["workers"] = workers
        if changes:
            cfg = cfg.replace(**changes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run(cfg, args.out)
    except (NumericFailure, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for r in report.results:
        print(f"{r.ensemble:>16} {r.parameter:>9d}  estimate {r.estimate.real:+.6f}{r.estimate.imag:+.6f}i  abs_err {r.abs_err:.3e}")
    for name, fit in report.fits.items():
        if fit is not None:
            print(f"{name}: delta_hat {fit.delta_hat:.3f} (r2 {fit.r2:.3f})")
    if any(not c.passed for c in report.verification):
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verification import run_suite

    results = run_suite(args.suite, echo=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed")
    return 1 if failed else 0


def _cmd_presets(args) -> int:
    if args.list:
        for name in PRESET_NAMES:
            cfg = preset(name)
            print(f"{name:<18} section={cfg.section} ensembles={','.join(cfg.ensembles)}")
    else:
        sys.stdout.write(preset(args.show).to_toml())
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return {"run": _cmd_run, "verify": _cmd_verify, "presets": _cmd_presets}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
