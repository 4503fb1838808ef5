"""Yes-frequency of the lower-bound test across levels on a planted formula.

Levels above log2|S| must answer yes at most theta of the time; levels well
below it should answer yes almost always.
"""

import argparse

from ldpcount.bounds import decide_at_least
from ldpcount.formula import CnfFormula
from ldpcount.oracle import InternalBackend
from ldpcount.xorsys import FamilySpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--log2-count", type=int, default=4)
    ap.add_argument("--theta", type=float, default=0.05)
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--family", default="dense", choices=["dense", "ldpc", "subcube"])
    args = ap.parse_args()

    frozen = args.n - args.log2_count
    f = CnfFormula(args.n, tuple((v,) for v in range(1, frozen + 1)))
    family = FamilySpec(args.family)
    backend = InternalBackend()
    print(f"|S| = 2^{args.log2_count}, theta = {args.theta}, {args.trials} trials, family {args.family}")
    for i in range(0, args.n + 1):
        yes = sum(decide_at_least(f, i, args.theta, family, backend, seed=1000 * i + k).yes for k in range(args.trials))
        print(f"i={i:2d}  yes {yes / args.trials:.3f}")


if __name__ == "__main__":
    main()
