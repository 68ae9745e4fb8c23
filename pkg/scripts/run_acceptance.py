"""Run every acceptance experiment, print one line per criterion, save the artifacts.

    python3 scripts/run_acceptance.py [--out acceptance_out] [--only 4,8]
"""
import argparse
import json
import sys
from pathlib import Path

from projektor import experiments as ex


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out", default="acceptance_out")
    p.add_argument("--only", help="comma-separated criterion numbers")
    args = p.parse_args()
    wanted = {int(x) for x in args.only.split(",")} if args.only else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = {}
    for fn in ex.ALL:
        n = ex.ALL.index(fn) + 1
        if wanted and n not in wanted:
            continue
        res = fn()
        results[n] = res
        print(res.line(), flush=True)
        (out / f"criterion_{n:02d}.txt").write_text(res.artifact)
        (out / f"criterion_{n:02d}.json").write_text(json.dumps(res.details, indent=1, default=str))
    if wanted is None or 11 in wanted:
        res = ex.determinism({n: r.artifact for n, r in results.items()})
        results[11] = res
        print(res.line(), flush=True)
    return 0 if all(r.ok for r in results.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
