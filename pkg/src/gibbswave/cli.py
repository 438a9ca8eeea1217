"""``gibbswave <command> --config FILE --seed U64 --out DIR [--workers K]``."""
from __future__ import annotations

import argparse
import sys

from .dynamics import ConvergenceError, NumericalAbort
from .experiments import (
    COMMAND_TABLE,
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    ConfigError,
    SCHEMA,
    load_config,
    strichartz_sigma,
)
from .sampling import DegenerateSpecError


def _parser() -> argparse.ArgumentParser:
    keys = "\n".join(f"  {k:<15} {v[2]} (default {v[1]!r})" for k, v in SCHEMA.items())
    ap = argparse.ArgumentParser(
        prog="gibbswave",
        description="Galerkin simulations and Monte Carlo checks for the radial wave equation on the ball.",
        epilog="config keys:\n" + keys,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("command", choices=sorted(COMMAND_TABLE))
    ap.add_argument("--config", required=True, help="flat key = value config file")
    ap.add_argument("--seed", required=True, type=int, help="unsigned 64-bit seed")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--workers", type=int, default=None, help="worker processes (overrides config)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1")
            cfg["workers"] = args.workers
    except (ConfigError, OSError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"alpha = {cfg['alpha']:g}, p = {cfg['p']:g}, sigma = 3/2 - 4/p = {strichartz_sigma(cfg['p']):g}")
    try:
        return COMMAND_TABLE[args.command](cfg, args.seed, args.out)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalAbort, ConvergenceError, DegenerateSpecError) as exc:
        print(f"error: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
