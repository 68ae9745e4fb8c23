"""Witness-gap and rate scan for a gallery family, printed as CSV.

    python3 scripts/dichotomy_scan.py slownono 10,50,100,200
    python3 scripts/dichotomy_scan.py bk 10,50,100 --subset 1,2
"""
import argparse

from projektor.regularity import dichotomy_scan


def main():
    p = argparse.ArgumentParser()
    p.add_argument("family")
    p.add_argument("truncations")
    p.add_argument("-K", type=int, default=3)
    p.add_argument("--subset")
    args = p.parse_args()
    levels = [int(t) for t in args.truncations.split(",")]
    subset = [int(i) for i in args.subset.split(",")] if args.subset else None
    scan = dichotomy_scan((args.family.upper(), {"K": args.K}), levels, subset=subset)
    print(scan.csv_text(), end="")
    print("# flags:", ",".join(scan.flags) or "none")


if __name__ == "__main__":
    main()
