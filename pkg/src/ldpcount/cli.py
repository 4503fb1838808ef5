"""Command-line entry point: ``ldpcount <command> [flags]``.

Exit codes: 0 success, 1 usage error, 2 oracle failure, 3 degraded result
under ``--strict``. JSON goes to stdout with ``--json``; logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from fractions import Fraction

from . import streams
from .boost import (
    BoostBoundError,
    LdpcEnsemble,
    boost_table,
    boost_upper_bound,
    density,
    estimate_boost_mc,
)
from .bounds import augment_lower_bound, decide_at_least, iterations_for
from .counter import CounterConfig, approx_count, plan
from .formula import DimacsError, emit_dimacs, parse_dimacs, xor_line
from .oracle import ExternalBackend, InternalBackend, OracleError, SOLVER_ENV
from .xorsys import FamilySpec, InfeasibleError, sample_system

log = logging.getLogger("ldpcount")

EXIT_OK, EXIT_USAGE, EXIT_ORACLE, EXIT_DEGRADED = 0, 1, 2, 3
NOT_ECHOED = {"jobs", "timings", "json", "verbose", "func"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _n_values(text: str) -> list[int]:
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        lo, hi, step = parts
        return list(range(lo, hi + 1, step))
    return [int(v) for v in text.split(",") if v]


def _add_family(p):
    p.add_argument("--family", choices=["dense", "sparse", "subcube", "ldpc"], default="dense")
    p.add_argument("--p", type=float, default=0.25, help="entry probability of the sparse family")
    p.add_argument("--l", type=int, default=3, help="column degree of the ldpc family")
    p.add_argument("--unsafe-degree", action="store_true", help="allow ldpc column degree below 3")


def _add_oracle(p):
    p.add_argument("--oracle", choices=["internal", "external"], default="internal")
    p.add_argument("--solver-cmd", default=None, help=f"solver executable (default ${SOLVER_ENV})")
    p.add_argument("--xor-encoding", choices=["native", "chunked"], default="native")
    p.add_argument("--chunk-size", type=int, default=3)
    p.add_argument("--per-call-timeout", type=float, default=None, metavar="SECONDS")
    p.add_argument("--max-vars", type=int, default=30, help="variable guard of the internal oracle")


def _add_common(p):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--timings", action="store_true", help="include wall-clock times in the report")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ldpcount", description="Approximate model counting with random parity constraints.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("count", help="approximate |S(F)| within (1 ± delta) w.p. 1 - theta")
    p.add_argument("--cnf", required=True)
    p.add_argument("--delta", type=_fraction, default=Fraction(1, 3))
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--lower-bound", type=int, default=0)
    p.add_argument("--upper-bound", type=int, default=None)
    _add_family(p)
    p.add_argument("--boost", default="auto", help="'auto' or an explicit Boost bound B")
    p.add_argument("--assume-boost", type=_fraction, default=None, help="explicit Boost bound (same as --boost VALUE)")
    p.add_argument("--nested", action="store_true")
    p.add_argument("--heuristic-nested", action="store_true")
    p.add_argument("--s", type=float, default=None, help="confidence parameter of nested mode")
    p.add_argument("--plan-only", action="store_true", help="print constants and B without counting")
    _add_oracle(p)
    _add_common(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("lower", help="one-sided lower bound on log2 |S(F)|")
    p.add_argument("--cnf", required=True)
    p.add_argument("--i", type=int, default=None)
    p.add_argument("--augment", action="store_true")
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--theta", type=float, default=0.05)
    p.add_argument("--iterations", type=int, default=None)
    _add_family(p)
    _add_oracle(p)
    _add_common(p)
    p.set_defaults(func=cmd_lower)

    p = sub.add_parser("boost-table", help="Boost upper bounds for bi-regular LDPC ensembles")
    p.add_argument("--l", type=int, default=8)
    p.add_argument("--rate", type=_fraction, default=Fraction(2, 5))
    p.add_argument("--n", type=_n_values, default=list(range(100, 201, 10)), help="N, N1,N2,... or LO:HI:STEP")
    _add_common(p)
    p.set_defaults(func=cmd_boost_table)

    p = sub.add_parser("gen-xor", help="sample a parity system and print it as x-lines")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--i", type=int, required=True)
    _add_family(p)
    p.add_argument("--configuration", action="store_true", help="ldpc: configuration ensemble (no rejection)")
    _add_common(p)
    p.set_defaults(func=cmd_gen_xor)

    p = sub.add_parser("estimate-boost", help="Monte-Carlo pair-correlation average for a witness set")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--i", type=int, required=True)
    _add_family(p)
    p.add_argument("--configuration", action="store_true")
    p.add_argument("--witness", action="append", default=[], help="assignment as a 0/1 string, repeatable")
    p.add_argument("--pair-distance", type=int, default=None, help="use the pair 0...0 and 1^d 0^(n-d)")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--exact", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_estimate_boost)
    return parser


def _family(args, configuration=False) -> FamilySpec:
    if args.family == "sparse":
        return FamilySpec("sparse", sparse_prob=args.p)
    if args.family == "ldpc":
        return FamilySpec("ldpc", column_degree=args.l, unsafe=args.unsafe_degree, simple=not configuration)
    return FamilySpec(args.family)


def _backend(args):
    if args.oracle == "internal":
        return InternalBackend(max_vars=args.max_vars)
    return ExternalBackend(
        solver=args.solver_cmd or os.environ.get(SOLVER_ENV),
        encoding=args.xor_encoding,
        chunk_size=args.chunk_size,
        timeout=args.per_call_timeout,
    )


def _read_cnf(path):
    with open(path) as fh:
        return parse_dimacs(fh.read())


def _echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in NOT_ECHOED:
            continue
        if isinstance(v, Fraction):
            v = str(v)
        out[k] = v
    return out


def cmd_count(args, timer):
    formula = _read_cnf(args.cnf)
    family = _family(args)
    boost = None
    if args.assume_boost is not None:
        boost = args.assume_boost
    elif args.boost != "auto":
        boost = _fraction(args.boost)
    if args.nested and family.kind != "dense" and not args.heuristic_nested:
        raise UsageError(f"--nested --family {family.kind} requires --heuristic-nested")
    config = CounterConfig(
        delta=args.delta,
        theta=args.theta,
        lower_bound=args.lower_bound,
        upper_bound=args.upper_bound,
        boost=boost,
        family=family,
        nested=args.nested,
        heuristic_nested=args.heuristic_nested,
        s=args.s,
    )
    if args.plan_only:
        with timer("plan"):
            payload = plan(formula, config)
        return payload, {"degraded": False, "heuristic": payload["heuristic"]}
    with timer("count"):
        est = approx_count(formula, config, _backend(args), seed=args.seed, jobs=args.jobs)
    payload = est.to_json()
    log.info("estimate %s (log2 %.3f), status %s", payload["value"], est.log2_value, est.status)
    return payload, {"degraded": est.degraded, "heuristic": est.heuristic}


def cmd_lower(args, timer):
    formula = _read_cnf(args.cnf)
    family = _family(args)
    backend = _backend(args)
    if args.augment:
        with timer("augment"):
            res = augment_lower_bound(formula, args.ell, args.theta, family, backend, args.seed, jobs=args.jobs)
        payload = res.to_json()
        return payload, {"degraded": False, "heuristic": False}
    if args.i is None:
        raise UsageError("lower needs --i I or --augment")
    with timer("decide"):
        verdict = decide_at_least(
            formula, args.i, args.theta, family, backend, args.seed,
            iterations=args.iterations, jobs=args.jobs,
        )
    payload = verdict.to_json()
    payload["t_default"] = iterations_for(args.theta)
    return payload, {"degraded": verdict.degraded, "heuristic": False}


def cmd_boost_table(args, timer):
    with timer("table"):
        rows = boost_table(args.l, args.rate, args.n)
    payload = {"l": args.l, "rate": str(args.rate), "rows": [r.to_json() for r in rows]}
    if not args.json:
        print(f"{'n':>5} {'i':>4} {'r':>3} {'z':>3} {'bound':>12} {'ceil':>6} monotone")
        for r in rows:
            print(f"{r.n:>5} {r.i:>4} {r.r:>3} {r.z:>3} {r.bound:>12.4f} {r.bound_ceil:>6} {r.monotonicity_verified}")
    return payload, {"degraded": False, "heuristic": False}


def cmd_gen_xor(args, timer):
    family = _family(args, configuration=args.configuration)
    rng = streams.stream(args.seed, streams.GENXOR)
    with timer("sample"):
        system = sample_system(family, args.n, args.i, rng)
    lines = [xor_line(row, b) for row, b in zip(system.rows, system.rhs) if row]
    payload = {
        "family": family.describe(),
        "n": args.n,
        "i": args.i,
        "row_degrees": system.row_degrees(),
        "column_degrees": system.column_degrees(),
        "rows": [list(r) for r in system.rows],
        "rhs": list(system.rhs),
        "lines": lines,
    }
    if not args.json:
        for line in lines:
            print(line)
    return payload, {"degraded": False, "heuristic": False}


def cmd_estimate_boost(args, timer):
    family = _family(args, configuration=args.configuration)
    witnesses = [[int(c) for c in w] for w in args.witness]
    if args.pair_distance is not None:
        d = args.pair_distance
        witnesses = [[0] * args.n, [1] * d + [0] * (args.n - d)]
    for w in witnesses:
        if len(w) != args.n:
            raise UsageError(f"witness of length {len(w)} for n={args.n}")
    rng = streams.stream(args.seed, streams.BOOST_MC)
    with timer("estimate"):
        est = estimate_boost_mc(family, args.n, args.i, witnesses, args.trials, rng, exact=args.exact)
    payload = {"estimate": est.value, "stderr": est.stderr, "trials": est.trials}
    if est.exact is not None:
        payload["exact"] = str(est.exact)
    if family.kind == "ldpc" and args.pair_distance is not None:
        try:
            ens = LdpcEnsemble.uniform(args.n, args.i, args.l)
            payload["enumerator_prediction"] = float((1 << args.i) * density(ens, args.pair_distance))
        except ValueError:
            pass
    return payload, {"degraded": False, "heuristic": False}


class _Timer:
    def __init__(self):
        self.phases = {}

    def __call__(self, name):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.phases[name] = round(time.perf_counter() - self.t0, 6)

        return _Ctx()


def main(argv=None) -> int:
    try:
        return _main(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE


def _main(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.seed is None:
        args.seed = streams.fresh_seed()
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    timer = _Timer()
    try:
        payload, flags = args.func(args, timer)
    except UsageError as exc:
        parser.error(str(exc))
    except (DimacsError, InfeasibleError, BoostBoundError, ValueError, OSError) as exc:
        print(f"ldpcount: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleError as exc:
        print(f"ldpcount: oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE

    report = {
        "command": args.command,
        "args": _echo(args),
        "seed": args.seed,
        "result": payload,
        "degraded": flags["degraded"],
        "heuristic": flags["heuristic"],
    }
    if args.timings:
        report["timings"] = timer.phases
    if args.json:
        print(json.dumps(report, indent=2, sort_keys=True))
    elif args.command in ("count", "lower", "estimate-boost"):
        print(json.dumps(payload, indent=2, sort_keys=True))
    log.debug("phase timings: %s", timer.phases)
    if args.strict and flags["degraded"]:
        return EXIT_DEGRADED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
