"""Command-line front end: ``trajloc {spectrum,trajectory,sweep,validate}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiment import ConfigError, cmd_spectrum, cmd_sweep, cmd_trajectory, load_config
from .models import PRESETS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("spectrum", "eigenvalue table and quasiprobability snapshots"),
        ("trajectory", "per-sample trajectory logs and CM/IPR ensemble series"),
        ("sweep", "two-parameter grid of converged steady-state ensembles"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="experiment JSON document")
        p.add_argument("--preset", choices=sorted(PRESETS), help="model preset (overrides config model name)")
        p.add_argument("--out", default=f"out_{name}", help="output directory")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--threads", type=int, default=1, help="parallel sweep cells")
    v = sub.add_parser("validate", help="run invariant and oracle checks")
    v.add_argument("--out", help="write the JSON report here as well")
    v.add_argument("--threads", type=int, default=1, help="accepted for interface symmetry")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate":
        from .validation import run_all

        report = run_all()
        text = json.dumps(report, indent=1)
        print(text)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        return 0 if all(r["passed"] for r in report) else 1
    try:
        config = load_config(args.config, args.preset, args.seed)
        if args.command == "spectrum":
            result = cmd_spectrum(config, args.out)
        elif args.command == "trajectory":
            result = cmd_trajectory(config, args.out)
            result = {k: result[k] for k in ("config_hash", "dt", "sample_stride")}
        else:
            result = cmd_sweep(config, args.out, threads=args.threads)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result, indent=1))
    return 0


if __name__ == "__main__":
    sys.exit(main())
