"""Command-line entry point: ``rkas generate | solve | bench | verify``.

Exit codes: 0 success (including runs that stop at max iterations),
1 failed property check, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    FIGURE_FIELDS,
    SUMMARY_FIELDS,
    TRIAL_FIELDS,
    ExperimentPlan,
    aligned_table,
    run_metadata,
    run_plan,
    run_sweep,
    to_csv,
    write_bench,
)
from .oracle import analyze
from .problems import ProblemFileError, ProblemSpec, generate, load_problem, save_problem
from .solvers import SolverConfig, run

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _add_problem_flags(p, required):
    kind = p.add_mutually_exclusive_group(required=required)
    kind.add_argument("--dense", action="store_true", help="A = U D V^T with cond <= kappa")
    kind.add_argument("--sparse", action="store_true", help="random sparse matrix")
    kind.add_argument("--file", metavar="MTX", help="Matrix Market file")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int, help="rank of the dense factorization")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--rc", type=float, help="reciprocal condition number (sparse)")
    p.add_argument("--residual-scale", type=float, default=0.5,
                   help="||r|| / ||A x|| for inconsistent systems (default 0.5)")
    cons = p.add_mutually_exclusive_group()
    cons.add_argument("--inconsistent", dest="consistent", action="store_false")
    cons.add_argument("--consistent", dest="consistent", action="store_true")
    p.set_defaults(consistent=False)


def _spec_from_args(args, parser):
    if args.file:
        return ProblemSpec(kind="from_file", path=args.file, seed=args.seed,
                           consistent=args.consistent, residual_scale=args.residual_scale)
    if args.m is None or args.n is None:
        parser.error("--m and --n are required for generated problems")
    if args.dense:
        return ProblemSpec(kind="dense_udv", m=args.m, n=args.n, r=args.r, kappa=args.kappa,
                           seed=args.seed, consistent=args.consistent,
                           residual_scale=args.residual_scale)
    return ProblemSpec(kind="sparse_random", m=args.m, n=args.n, density=args.density,
                       rc=args.rc, seed=args.seed, consistent=args.consistent,
                       residual_scale=args.residual_scale)


def _add_solver_flags(p):
    p.add_argument("--tol", type=float, default=1e-12, help="RSE stopping tolerance")
    p.add_argument("--max-iters", type=int, default=1_000_000)
    p.add_argument("--check-every", type=int, default=1)
    p.add_argument("--record-every", type=int, help="checkpoint interval (default: check-every)")
    gram = p.add_mutually_exclusive_group()
    gram.add_argument("--store-gram", dest="store_gram", action="store_true")
    gram.add_argument("--no-store-gram", dest="store_gram", action="store_false")
    p.set_defaults(store_gram=True)


def build_parser():
    parser = argparse.ArgumentParser(prog="rkas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate and save a problem")
    _add_problem_flags(g, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output problem file (.npz)")

    s = sub.add_parser("solve", help="run one solver on a saved problem")
    s.add_argument("problem")
    s.add_argument("--method", choices=["rkas", "rk", "rek"], default="rkas")
    s.add_argument("--lam", type=float, default=1.0, help="RK stepsize in (0, 2)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--refresh-every", type=int, help="recompute r = Ax - b every N steps")
    s.add_argument("--out", help="CSV path (default: stdout)")
    _add_solver_flags(s)

    b = sub.add_parser("bench", help="multi-trial comparison")
    b.add_argument("--plan", help="JSON plan file; problem flags are ignored when given")
    _add_problem_flags(b, required=False)
    b.add_argument("--methods", default="rkas,rek",
                   help="comma list of rkas, rkas-unstored, rek, rk:<lam>")
    b.add_argument("--trials", type=int, default=50)
    b.add_argument("--seed", type=int, default=0, help="master seed")
    b.add_argument("--record-flops", action="store_true")
    b.add_argument("--sweep-m", help="comma list of m values")
    b.add_argument("--sweep-n", help="comma list of n values")
    b.add_argument("--out", required=True, help="output directory")
    _add_solver_flags(b)

    v = sub.add_parser("verify", help="run property checks on a saved problem")
    v.add_argument("problem")
    v.add_argument("--steps", type=int, default=2000)
    v.add_argument("--seed", type=int, default=0)
    return parser


def _parse_methods(text, args):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        common = dict(rse_tol=args.tol, max_iters=args.max_iters, check_every=args.check_every,
                      record_every=args.record_every or args.max_iters)
        if tok == "rkas":
            out.append(SolverConfig(method="rkas", store_gram=args.store_gram, **common))
        elif tok == "rkas-unstored":
            out.append(SolverConfig(method="rkas", store_gram=False, **common))
        elif tok == "rek":
            out.append(SolverConfig(method="rek", **common))
        elif tok.startswith("rk"):
            lam = float(tok.split(":", 1)[1]) if ":" in tok else 1.0
            out.append(SolverConfig(method="rk", lam=lam, **common))
        else:
            raise UsageError(f"unknown method {tok!r}")
    return out


def cmd_generate(args, parser):
    spec = _spec_from_args(args, parser)
    system = generate(spec)
    save_problem(system, args.out)
    gt = analyze(system.A, system.b)
    print(f"wrote {args.out}")
    print(f"shape {system.A.rows}x{system.A.cols}  nnz {system.A.nnz}  rank {gt.rank}")
    print(f"sigma_max {gt.sigma_max:.6g}  sigma_min {gt.sigma_min:.6g}  "
          f"sigma_max/sigma_min {gt.cond:.6g}")
    print(f"||e|| {gt.e_sq ** 0.5:.6g}  ||x*|| {gt.x_star_sq ** 0.5:.6g}")
    return EXIT_OK


RECORD_FIELDS = ["iter", "rse", "residual_err_sq", "elapsed", "flops"]


def cmd_solve(args, parser):
    system = load_problem(args.problem)
    gt = analyze(system.A, system.b)
    cfg = SolverConfig(
        method=args.method, lam=args.lam, store_gram=args.store_gram, seed=args.seed,
        max_iters=args.max_iters, rse_tol=args.tol, check_every=args.check_every,
        record_every=args.record_every, residual_refresh_every=args.refresh_every,
    )
    res = run(system, gt, cfg)
    text = to_csv(res.records, RECORD_FIELDS)
    text += (f"# status={res.status} iters={res.iters} final_rse={res.final.rse!r} "
             f"flops={res.state.flops.total}\n")
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"status={res.status} iters={res.iters} rse={res.final.rse:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args, parser):
    if args.plan:
        plan = ExperimentPlan.from_file(args.plan)
        plan.out = args.out
    else:
        if not (args.dense or args.sparse or args.file):
            parser.error("bench needs --plan or one of --dense/--sparse/--file")
        spec = _spec_from_args(args, parser)
        sweep = None
        if args.sweep_m:
            sweep = {"param": "m", "values": [int(v) for v in args.sweep_m.split(",")]}
        elif args.sweep_n:
            sweep = {"param": "n", "values": [int(v) for v in args.sweep_n.split(",")]}
        plan = ExperimentPlan(problem=spec, methods=_parse_methods(args.methods, args),
                              trials=args.trials, master_seed=args.seed,
                              record_flops=args.record_flops, out=args.out, sweep=sweep)
    out = Path(args.out)
    if plan.sweep:
        figure, everything = run_sweep(plan)
        out.mkdir(parents=True, exist_ok=True)
        (out / "figure.csv").write_text(to_csv(figure, FIGURE_FIELDS))
        param = plan.sweep["param"]
        (out / "trials.csv").write_text(to_csv(everything, [param] + TRIAL_FIELDS))
        (out / "meta.json").write_text(json.dumps(run_metadata(plan), indent=2, sort_keys=True) + "\n")
        sys.stdout.write(aligned_table(figure, FIGURE_FIELDS))
        return EXIT_OK
    results = run_plan(plan)
    rows = write_bench(plan, results, out)
    sys.stdout.write(aligned_table(rows, SUMMARY_FIELDS))
    return EXIT_OK


def cmd_verify(args, parser):
    from .verify import run_checks

    system = load_problem(args.problem)
    checks = run_checks(system, steps=args.steps, seed=args.seed)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{c.status:4}  {c.name.ljust(width)}  {c.detail}".rstrip())
    return EXIT_CHECK_FAILED if any(c.failed for c in checks) else EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, parser)
    except (ProblemFileError, UsageError, ValueError, FileNotFoundError) as exc:
        print(f"rkas {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
