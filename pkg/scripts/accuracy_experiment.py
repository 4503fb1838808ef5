"""Out-of-range frequency of the counter on random 3-CNFs (dense family, B=1)."""

import argparse
import math
import time
from fractions import Fraction

import numpy as np

from ldpcount.counter import CounterConfig, approx_count
from ldpcount.formula import CnfFormula
from ldpcount.oracle import InternalBackend, OracleBudget
from ldpcount.xorsys import XorSystem


def random_cnf(rng, n, m):
    clauses = []
    for _ in range(m):
        vs = rng.choice(n, size=3, replace=False) + 1
        clauses.append(tuple(int(v) * int(s) for v, s in zip(vs, rng.choice([-1, 1], size=3))))
    return CnfFormula(n, tuple(clauses))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--formulas", type=int, default=5)
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--delta", type=Fraction, default=Fraction(1, 3))
    ap.add_argument("--theta", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    backend = InternalBackend()
    cfg = CounterConfig(delta=args.delta, theta=args.theta)
    outside = total = 0
    for k in range(args.formulas):
        while True:
            f = random_cnf(rng, args.n, int(rng.integers(4, 4 * args.n)))
            count = len(backend.models(f))
            if count >= 12:
                break
        t0 = time.perf_counter()
        vals = [approx_count(f, cfg, backend, seed=args.seed * 10**6 + 1000 * k + r).value for r in range(args.runs)]
        miss = sum(not ((1 - args.delta) * count <= v <= (1 + args.delta) * count) for v in vals)
        outside += miss
        total += args.runs
        ratios = [float(v / count) for v in vals]
        print(f"formula {k}: |S|={count:5d}  est/|S| in [{min(ratios):.3f}, {max(ratios):.3f}]  "
              f"outside {miss}/{args.runs}  ({time.perf_counter() - t0:.1f}s)")
    limit = args.theta + 3 * math.sqrt(args.theta * (1 - args.theta) / total)
    print(f"overall outside {outside}/{total} = {outside / total:.3f}  (allowed {limit:.3f})")


if __name__ == "__main__":
    main()
