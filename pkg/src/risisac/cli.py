"""``risisac`` command line: run and validate experiment configs, print oracles."""

from __future__ import annotations

import argparse
import sys

from .config_io import ConfigError, parse_config, serialize_config
from .oracles import ORACLES, format_table


def parse_seeds(text: str) -> list:
    """``"0-4,7,9"`` -> ``[0, 1, 2, 3, 4, 7, 9]``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds or len(set(seeds)) != len(seeds) or min(seeds) < 0:
        raise argparse.ArgumentTypeError("seeds must be distinct nonnegative integers")
    return seeds


def _seeds_arg(text):
    try:
        return parse_seeds(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="risisac", description="RIS-assisted ISAC design experiments")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", choices=["desk", "paper"], default=None,
                        help="base scenario (overrides the config's profile key)")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--seeds", type=_seeds_arg, default=None, help="e.g. 0-9 or 1,3,5")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--out-dir", default=None)

    val = sub.add_parser("validate", parents=[common], help="check a config and echo it")
    val.add_argument("config")

    ora = sub.add_parser("oracle", help="print a reference computation")
    ora.add_argument("name", choices=sorted(ORACLES))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "oracle":
        print(format_table(*ORACLES[args.name]()))
        return 0
    try:
        cfg = parse_config(args.config, profile_override=args.profile)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        sys.stdout.write(serialize_config(cfg))
        return 0
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    from .experiments import run_experiment

    paths = run_experiment(cfg, out_dir=args.out_dir, seeds=args.seeds, jobs=args.jobs)
    for key, path in paths.items():
        print(f"{key}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
