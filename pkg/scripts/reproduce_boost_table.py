"""Boost upper bounds for l=8, i=2n/5, n=100..200, next to the reference values."""

import argparse
import time
from fractions import Fraction

from ldpcount.boost import boost_table

REFERENCE = [75, 50, 35, 26, 134, 89, 60, 44, 34, 154, 105]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l", type=int, default=8)
    ap.add_argument("--rate", type=Fraction, default=Fraction(2, 5))
    args = ap.parse_args()

    t0 = time.perf_counter()
    rows = boost_table(args.l, args.rate, range(100, 201, 10))
    print(f"{'n':>4} {'i':>3} {'z':>3} {'B(z)':>10} {'bound':>10} {'ceil':>5} {'reference':>9}")
    for row, pub in zip(rows, REFERENCE):
        flag = "" if abs(row.bound_ceil - pub) <= 1 else "  <-- off by more than 1"
        print(f"{row.n:>4} {row.i:>3} {row.z:>3} {float(row.bz):>10.3e} {row.bound:>10.3f} {row.bound_ceil:>5} {pub:>9}{flag}")
    print(f"# {time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
