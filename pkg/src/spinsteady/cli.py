"""``spinsteady`` command line.

Exit codes: 0 success, 1 invalid configuration, 2 solver failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .config import RECIPES, ConfigError, load_file, parse_set, resolve
from .models import PresetError
from .runner import (
    SOLVER_ERRORS, fit_lines, run_closure, run_nogo, run_sweep, run_wigner, write_table,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3
COMMANDS = ("steady", "sweep", "verify-nogo", "closure-check", "wigner")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinsteady", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--preset", help="preset model id")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration key (value parsed as JSON when possible)")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int, help="seed for randomized checks")
        p.add_argument("--jobs", type=int, help="worker processes for sweeps")
        if name in ("sweep", "wigner", "steady"):
            p.add_argument("--recipe", choices=sorted(RECIPES), help="built-in figure recipe")
    return parser


def _config(args):
    file_data = load_file(args.config) if args.config else None
    cfg = resolve(file_data, recipe=getattr(args, "recipe", None), preset=args.preset,
                  overrides=parse_set(args.set), out=args.out, seed=args.seed, jobs=args.jobs)
    if cfg.recipe is not None and cfg.command not in (None, args.command):
        raise ConfigError(f"recipe {cfg.recipe} runs with the '{cfg.command}' command")
    return cfg


def _steady(cfg) -> int:
    if cfg.sweep:
        raise ConfigError("steady evaluates a single point; use the sweep command for grids")
    rows = run_sweep(cfg, certify=True)
    write_table(rows, cfg, "steady", stream=sys.stdout)
    if rows[0]["status"] != "ok":
        print(f"solver failure: {rows[0]['error']}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _sweep(cfg) -> int:
    rows = run_sweep(cfg)
    write_table(rows, cfg, "sweep", footer=fit_lines(rows, cfg.fit), stream=sys.stdout)
    failed = sum(r["status"] != "ok" for r in rows)
    if failed:
        print(f"{failed} of {len(rows)} sweep points failed (see the status column)", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _wigner(cfg) -> int:
    rows = run_wigner(cfg)
    write_table(rows, cfg, "wigner", stream=sys.stdout)
    return EXIT_OK


def _closure(cfg) -> int:
    rows, rep = run_closure(cfg)
    kind = "strict" if rep.ok else "span" if rep.span_ok else "none"
    footer = [f"group={rep.group.name} elements={len(rep.group)} closure={kind} "
              f"span_error={rep.span_error:.3e}"]
    write_table(rows, cfg, "closure-check", footer=footer, stream=sys.stdout)
    print(f"closure under {rep.group.name}: {kind}", file=sys.stderr)
    return EXIT_OK if kind != "none" else EXIT_VERIFY


def _nogo(cfg) -> int:
    rows, results = run_nogo(cfg)
    n_fail = sum(not r.passed for r in results)
    write_table(rows, cfg, "verify-nogo", footer=[f"instances={len(rows)} failed={n_fail}"], stream=sys.stdout)
    if n_fail:
        for r in results:
            if not r.passed:
                inst = r.instance
                payload = {"instance": inst.describe(), "hs_dist_mms": r.hs_dist_mms, "nullity": r.nullity,
                           "jumps": [np.stack([J.real, J.imag]).tolist() for J in inst.jumps],
                           "h_s": np.stack([inst.h_s.real, inst.h_s.imag]).tolist()}
                print(json.dumps(payload), file=sys.stderr)
        return EXIT_VERIFY
    print(f"no-go verified on {len(rows)} instances", file=sys.stderr)
    return EXIT_OK


HANDLERS = {"steady": _steady, "sweep": _sweep, "wigner": _wigner,
            "closure-check": _closure, "verify-nogo": _nogo}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = _config(args)
        return HANDLERS[args.command](cfg)
    except (ConfigError, PresetError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
