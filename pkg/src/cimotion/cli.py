"""Command line entry point.

    cimotion equilibrium --config run.cfg
    cimotion surfaces    --config run.cfg
    cimotion evolve      --config run.cfg [--field zero|FIELD.csv]
    cimotion optimize    --config run.cfg [--mode spinor|bo] [--max-iters N]
                         [--seed-field rect|gauss|file|zero] [--jobs N]

Each command accepts several --config paths; --jobs runs them in separate
processes (the runs share nothing).  Exit codes: 0 success, 2 config or
model problem, 3 numerical blowup, 4 broken monotonic ascent.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import sys
import traceback

from .config import load_config
from .errors import (ConfigError, ModelInvalidError, MonotonicityError,
                     NumericalBlowupError)
from . import runner


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cimotion",
        description="Ion-pair wavepacket dynamics and control near an "
                    "engineered conical intersection")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", nargs="+", required=True,
                       help="one or more YAML config files")
        p.add_argument("--out", default=None,
                       help="output directory override (single config only)")
        p.add_argument("--jobs", type=int, default=1,
                       help="process pool size for several configs")

    p_eq = sub.add_parser("equilibrium", help="solve and report the trap equilibrium")
    common(p_eq)

    p_surf = sub.add_parser("surfaces", help="write coefficient and surface grids")
    common(p_surf)

    p_ev = sub.add_parser("evolve", help="propagate under a fixed field")
    common(p_ev)
    p_ev.add_argument("--field", default="zero",
                      help="'zero' or a field CSV (t_us,u_V_per_m)")

    p_opt = sub.add_parser("optimize", help="run the monotonic field optimizer")
    common(p_opt)
    p_opt.add_argument("--mode", choices=["spinor", "bo"], default=None)
    p_opt.add_argument("--max-iters", type=int, default=None)
    p_opt.add_argument("--seed-field", default=None,
                       choices=["zero", "rect", "gauss", "file"],
                       help="assert the config's seed field kind")
    return ap


def _run_one(args, config_path: str) -> None:
    cfg = load_config(config_path)
    if args.command == "equilibrium":
        runner.run_equilibrium(cfg, args.out)
    elif args.command == "surfaces":
        runner.run_surfaces(cfg, args.out)
    elif args.command == "evolve":
        runner.run_evolve(cfg, args.out, field=args.field)
    elif args.command == "optimize":
        runner.run_optimize(cfg, args.out, mode_override=args.mode,
                            max_iters_override=args.max_iters,
                            seed_field_override=args.seed_field)
    else:
        raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.out is not None and len(args.config) > 1:
        print("error: --out only applies to a single --config", file=sys.stderr)
        return 2
    try:
        if len(args.config) > 1 and args.jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(args.jobs) as pool:
                futures = [pool.submit(_run_one, args, c) for c in args.config]
                for fut in futures:
                    fut.result()
        else:
            for config_path in args.config:
                _run_one(args, config_path)
    except (ConfigError, ModelInvalidError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalBlowupError as exc:
        print(f"numerical blowup: {exc}", file=sys.stderr)
        return 3
    except MonotonicityError as exc:
        print(f"monotonicity fault: {exc}", file=sys.stderr)
        return 4
    except Exception:
        traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
