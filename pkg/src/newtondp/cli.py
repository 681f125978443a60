"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 data error (unreadable, unparsable
or invalid MDP), 4 solver did not converge.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import os
import sys

import numpy as np

from newtondp.experiments import (
    BENCHMARK_COLUMNS,
    SWEEP_COLUMNS,
    TRACE_COLUMNS,
    BenchmarkSpec,
    alpha_sweep,
    bellman_graph,
    reference_solution,
    run_benchmark,
    sweep_alphas,
)
from newtondp.mdp import MdpFormatError, MdpValidationError, load_mdp, random_mdp, save_mdp
from newtondp.newton import (
    SolverConfig,
    SolverError,
    alpha_value_iteration,
    policy_iteration,
    value_iteration,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NOT_CONVERGED = 4

SEED_ENV = "NEWTONDP_SEED"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def read_mdp(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return load_mdp(text)
    except MdpFormatError as exc:
        raise DataError(f"{path}: parse error: {exc}") from exc
    except MdpValidationError as exc:
        raise DataError(f"{path}: invalid MDP: {exc}") from exc


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


# -- subcommands -------------------------------------------------------------


def cmd_gen(args) -> int:
    if len(args.rest) == 1:
        seed, out = _default_seed(), args.rest[0]
    elif len(args.rest) == 2:
        try:
            seed = int(args.rest[0])
        except ValueError:
            raise UsageError(f"seed must be an integer, got {args.rest[0]!r}") from None
        out = args.rest[1]
    else:
        raise UsageError("expected [SEED] OUT after GAMMA")
    if args.n < 1 or args.m < 1:
        raise UsageError("n and m must be at least 1")
    if not 0.0 < args.gamma < 1.0:
        raise UsageError("gamma must lie in (0, 1)")
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    data = save_mdp(random_mdp(args.n, args.m, args.gamma, seed)).encode("utf-8")
    try:
        with open(out, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc.strerror}") from exc
    digest = hashlib.sha256(data).hexdigest()
    print(f"n={args.n} m={args.m} gamma={args.gamma!r} seed={seed} sha256={digest}")
    return EXIT_OK


def cmd_solve(args) -> int:
    if args.method == "alpha-vi" and args.alpha is None:
        raise UsageError("--alpha is required for alpha-vi")
    if args.method != "alpha-vi" and args.alpha is not None:
        raise UsageError("--alpha only applies to alpha-vi")
    mdp = read_mdp(args.mdp)
    reference = reference_solution(mdp) if args.with_error else None
    cfg = SolverConfig(
        tol=args.tol,
        max_iters=args.max_iters,
        record_trace=args.trace_out is not None,
        reference_solution=reference,
        relative_tol=args.relative_tol,
        record_kappa=args.with_kappa,
    )
    if args.method == "pi":
        res = policy_iteration(mdp, config=cfg)
    elif args.method == "vi":
        res = value_iteration(mdp, config=cfg)
    else:
        if args.alpha == 0:
            raise UsageError("alpha must be nonzero")
        threshold = (1.0 + mdp.gamma) / 2.0
        if args.alpha <= threshold and not args.force:
            raise UsageError(
                f"alpha={args.alpha!r} <= (1+gamma)/2 = {threshold!r}; pass --force to run anyway"
            )
        res = alpha_value_iteration(mdp, args.alpha, config=cfg, force=args.force)

    if args.trace_out is not None:
        rows = [
            {
                "k": rec.k,
                "residual_inf": rec.residual_inf,
                "error_inf": rec.error_inf,
                "kappa_k": rec.kappa,
                "wall_time_us": None if args.no_timing else rec.wall_time * 1e6,
            }
            for rec in res.trace
        ]
        write_csv(args.trace_out, TRACE_COLUMNS, rows)

    wall = "" if args.no_timing else f" wall_time_s={res.wall_time:.6f}"
    print(
        f"method={args.method} status={res.status} converged={_fmt(res.converged)} "
        f"iterations={res.iterations} residual_inf={res.residual_inf!r}{wall}"
    )
    if mdp.n <= 20:
        print("theta=[" + ", ".join(repr(float(x)) for x in res.theta) + "]")
        print("policy=[" + ", ".join(str(int(a)) for a in res.policy) + "]")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_sweep(args) -> int:
    if args.alpha_min <= 0 <= args.alpha_max:
        raise UsageError("alpha range must exclude 0")
    try:
        alphas = sweep_alphas(args.alpha_min, args.alpha_max, args.steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    mdp = read_mdp(args.mdp)
    rows = alpha_sweep(mdp, alphas, tol=args.tol, max_iters=args.max_iters, jobs=args.jobs)
    write_csv(args.out, SWEEP_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            spec = BenchmarkSpec.from_json(fh.read(), base_dir=os.path.dirname(os.path.abspath(args.spec)))
    except OSError as exc:
        raise DataError(f"cannot read {args.spec}: {exc.strerror}") from exc
    except ValueError as exc:
        raise DataError(f"{args.spec}: {exc}") from exc
    try:
        mdp = spec.build_mdp()
    except (MdpFormatError, MdpValidationError, OSError) as exc:
        raise DataError(f"{args.spec}: instance: {exc}") from exc
    rows = run_benchmark(spec, mdp=mdp, jobs=args.jobs)
    if args.no_timing:
        for row in rows:
            row["wall_time_us"] = None
    write_csv(args.out, BENCHMARK_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_graph(args) -> int:
    if args.samples < 2:
        raise UsageError("need at least 2 samples")
    mdp = read_mdp(args.mdp)
    if mdp.n > 1 and args.state is None:
        raise UsageError(f"graph needs a scalar MDP (n=1), got n={mdp.n}; use --state to slice")
    thetas = np.linspace(args.theta_min, args.theta_max, args.samples)
    try:
        columns, rows = bellman_graph(mdp, thetas, alphas=args.alpha, state=args.state)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_csv(args.out, columns, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="newtondp",
        description="Solve discounted MDPs with policy iteration, value iteration and alpha-VI.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser(
        "gen",
        help="generate a random MDP file",
        description=f"Write a random dense MDP. SEED defaults to ${SEED_ENV} (or 0).",
    )
    g.add_argument("n", type=int, help="number of states")
    g.add_argument("m", type=int, help="number of actions")
    g.add_argument("gamma", type=float, help="discount factor in (0, 1)")
    g.add_argument("rest", nargs="+", metavar="[SEED] OUT", help="optional seed, then output path")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an MDP file")
    s.add_argument("mdp", help="MDP file")
    s.add_argument("--method", choices=["pi", "vi", "alpha-vi"], required=True)
    s.add_argument("--alpha", type=float, help="alpha for alpha-vi")
    s.add_argument("--force", action="store_true", help="allow alpha <= (1+gamma)/2")
    s.add_argument("--tol", type=float, default=1e-10, help="residual sup-norm tolerance (default 1e-10)")
    s.add_argument("--relative-tol", action="store_true", help="use tol * (1 + ||theta||) as threshold")
    s.add_argument("--max-iters", type=int, default=None, help="iteration cap (default 10000 for pi, 100000 otherwise)")
    s.add_argument("--trace-out", help="write a per-iteration CSV trace here")
    s.add_argument("--with-error", action="store_true", help="fill error_inf against a PI reference")
    s.add_argument("--with-kappa", action="store_true", help="fill kappa_k in the trace")
    s.add_argument("--no-timing", action="store_true", help="leave wall-time fields empty (byte-reproducible output)")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="alpha-VI iteration counts and rates over a range of alpha")
    w.add_argument("mdp", help="MDP file")
    w.add_argument("--alpha-min", type=float, default=0.5)
    w.add_argument("--alpha-max", type=float, default=1.2)
    w.add_argument("--steps", type=int, default=15)
    w.add_argument("--tol", type=float, default=1e-10)
    w.add_argument("--max-iters", type=int, default=5000)
    w.add_argument("--jobs", type=int, default=1, help="concurrent solves")
    w.add_argument("-o", "--out", required=True, help="output CSV")
    w.set_defaults(func=cmd_sweep)

    b = sub.add_parser("benchmark", help="error-versus-iteration curves for the runs in a JSON spec")
    b.add_argument("spec", help="benchmark spec (JSON)")
    b.add_argument("-o", "--out", required=True, help="output CSV")
    b.add_argument("--jobs", type=int, default=1, help="concurrent solves")
    b.add_argument("--no-timing", action="store_true", help="leave wall-time fields empty")
    b.set_defaults(func=cmd_benchmark)

    r = sub.add_parser("graph", help="sample the scalar Bellman operator of a one-state MDP")
    r.add_argument("mdp", help="MDP file")
    r.add_argument("--theta-min", type=float, required=True)
    r.add_argument("--theta-max", type=float, required=True)
    r.add_argument("--samples", type=int, default=101)
    r.add_argument("--alpha", type=float, action="append", default=[], help="also sample T_alpha (repeatable)")
    r.add_argument("--state", type=int, help="for n > 1: slice along this state, others fixed at V*")
    r.add_argument("-o", "--out", required=True, help="output CSV")
    r.set_defaults(func=cmd_graph)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"newtondp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"newtondp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"newtondp {args.command}: solver error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
