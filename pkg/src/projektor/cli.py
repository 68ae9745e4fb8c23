"""Command line entry point: ``projektor <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import InputError
from .gallery import GalleryConfig, save_subspaces
from .harness import EXIT_INPUT, ExperimentSpec, replay, run_experiment
from .schedule import Schedule

SUBCOMMAND_DIAGNOSTICS = {
    "scan": {"witness": True, "rate": True},
    "trajectory": {"trajectory": True},
    "johnson": {"johnson": True},
    "transport": {"transport": True},
}


def _truncations(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad truncation list {text!r}")


def _parser():
    p = argparse.ArgumentParser(prog="projektor", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("build", "scan", "trajectory", "johnson", "transport", "run"):
        s = sub.add_parser(name)
        s.add_argument("--config", help="experiment spec (JSON)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int)
        s.add_argument("--truncations", type=_truncations, help="comma-separated levels, e.g. 10,50,100")
        s.add_argument("--family", help="gallery family when no --config is given")
        s.add_argument("-K", type=int, default=None)
        s.add_argument("-J", type=int, default=None)
        s.add_argument("--steps", type=int)
    r = sub.add_parser("replay")
    r.add_argument("report")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _spec_from_args(args) -> ExperimentSpec:
    if args.config:
        raw = json.loads(Path(args.config).read_text())
    elif args.family:
        raw = {"gallery": {"family": args.family.upper(), "K": args.K or 3, "J": args.J or 10}}
    elif args.command == "transport":
        raw = {"gallery": {"family": "SLOWNONO", "K": 3, "J": 1}}
    else:
        raise InputError("need --config or --family")
    if args.command in SUBCOMMAND_DIAGNOSTICS:
        raw["diagnostics"] = SUBCOMMAND_DIAGNOSTICS[args.command]
    if args.command == "trajectory" and not raw.get("schedules"):
        K = raw["gallery"].get("K", 3)
        raw["schedules"] = [Schedule.cyclic(K).to_dict()]
    if args.out:
        raw["output_dir"] = args.out
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.truncations:
        raw["truncations"] = args.truncations
    if args.steps:
        raw["steps"] = args.steps
    if args.command == "build":
        raw["write_subspaces"] = True
        raw["diagnostics"] = {}
    return ExperimentSpec.from_dict(raw)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "replay":
        code = replay(args.report)
        print("replay:", {0: "identical", 1: "missing or unreadable report", 3: "mismatch"}[code])
        return code
    try:
        spec = _spec_from_args(args)
    except (InputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "build":
        subs = spec.gallery.build()
        save_subspaces(Path(spec.output_dir) / "subspaces", subs, spec.gallery)
        print(f"wrote {len(subs)} subspaces of R^{subs[0].ambient_dim} to {spec.output_dir}/subspaces")
        return 0
    code = run_experiment(spec)
    print(f"{args.command}: exit {code}, report at {Path(spec.output_dir) / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
