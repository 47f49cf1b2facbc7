"""Tabulate D_n, its gap to sqrt(2) and the exact certificate for n up to --max."""
import argparse
import csv
import math
import sys

from slicing_reduction.combinatorics import dn, dn_le_sqrt2_exact


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max", type=int, default=200)
    ap.add_argument("--every", type=int, default=1, help="print every k-th n")
    args = ap.parse_args()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "D_n", "sqrt2_gap", "certificate"])
    prev = 0.0
    monotone = True
    for n in range(1, args.max + 1):
        d = float(dn(n).value)
        monotone &= d > prev
        prev = d
        if n % args.every == 0 or n == 1:
            w.writerow([n, repr(d), repr(math.sqrt(2) - d), dn_le_sqrt2_exact(n)])
    print(f"# increasing on [1, {args.max}]: {monotone}", file=sys.stderr)


if __name__ == "__main__":
    main()
