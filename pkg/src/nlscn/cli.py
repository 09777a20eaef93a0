"""Command line interface.

    nlscn groundstate  --config cfg.json --out outdir
    nlscn evolve       --config cfg.json --out outdir
    nlscn convergence  --config cfg.json --out outdir [--threads N]
    nlscn compare      --config cfg.json --out outdir [--threads N]

Configs are single JSON documents; shipped presets live under configs/.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import drivers
from .config import load_json, load_run_config
from .errors import NLSError


def _add_common(parser):
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", required=True, help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="nlscn", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("groundstate", help="compute and persist a ground state")
    _add_common(p)

    p = sub.add_parser("evolve", help="run one time evolution (cn-fem or sp2)")
    _add_common(p)

    p = sub.add_parser("convergence", help="error table and observed orders against a nested reference")
    _add_common(p)
    p.add_argument("--threads", type=int, default=1, help="max concurrent runs")

    p = sub.add_parser("compare", help="CN-FEM vs SP2 comparison table")
    _add_common(p)
    p.add_argument("--threads", type=int, default=1, help="max concurrent runs")

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "groundstate":
            report = drivers.run_groundstate(load_json(args.config), args.out)
            print(json.dumps({k: report[k] for k in ("lambda0", "energy0", "residual", "iterations")}, indent=2))
        elif args.command == "evolve":
            report = drivers.run_evolve(load_run_config(args.config), args.out)
            doc = report.to_dict()
            print(json.dumps({k: doc[k] for k in ("n_steps", "initial", "final", "mass_drift", "energy_drift")}, indent=2))
        elif args.command == "convergence":
            report = drivers.run_convergence(load_json(args.config), args.out, threads=args.threads)
            print(json.dumps(report["orders"], indent=2))
        elif args.command == "compare":
            report = drivers.run_compare(load_json(args.config), args.out, threads=args.threads)
            print(f"wrote {report['comparison_csv']}")
    except NLSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
