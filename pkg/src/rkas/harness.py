"""Multi-trial experiments: plans, interleaved timing, summaries and CSV output."""
from __future__ import annotations

import csv
import io
import json
import platform
import statistics
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from . import __version__
from .oracle import analyze
from .problems import LinearSystem, ProblemSpec, generate, make_rhs, read_matrix_market
from .sampling import PRNG_NAME, spawn_seeds
from .solvers import SolverConfig, run, warmup

TRIAL_FIELDS = [
    "trial", "method", "seed", "iters", "converged", "final_rse", "cpu_seconds",
    "init_seconds", "flops", "m", "n", "rank", "sigma_ratio", "error",
]
SUMMARY_FIELDS = [
    "method", "trials", "mean_iters", "median_iters", "mean_cpu_seconds", "mean_flops",
    "success_rate", "m", "n", "rank", "sigma_ratio",
]
#: columns whose values depend on the clock and are excluded from byte-level
#: reproducibility comparisons
TIMING_FIELDS = ("cpu_seconds", "init_seconds", "mean_cpu_seconds", "elapsed")


@dataclass
class ExperimentPlan:
    problem: ProblemSpec
    methods: list
    trials: int = 50
    master_seed: int = 0
    record_flops: bool = True
    out: str | None = None
    #: rebuild the matrix each trial (synthetic kinds); from_file always
    #: keeps the matrix and redraws only the right-hand side
    fresh_matrix: bool = True
    sweep: dict | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.methods:
            raise ValueError("plan needs at least one method")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["problem"] = ProblemSpec(**d["problem"])
        d["methods"] = [m if isinstance(m, SolverConfig) else SolverConfig(**m) for m in d["methods"]]
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return {
            "problem": asdict(self.problem),
            "methods": [asdict(m) for m in self.methods],
            "trials": self.trials,
            "master_seed": self.master_seed,
            "record_flops": self.record_flops,
            "out": self.out,
            "fresh_matrix": self.fresh_matrix,
            "sweep": self.sweep,
        }


@dataclass
class TrialResult:
    trial: int
    method: str
    seed: int
    iters: int
    converged: bool
    final_rse: float
    cpu_seconds: float
    init_seconds: float
    flops: int
    m: int
    n: int
    rank: int
    sigma_ratio: float
    error: str = ""


@dataclass
class SummaryRow:
    method: str
    trials: int
    mean_iters: float
    median_iters: float
    mean_cpu_seconds: float
    mean_flops: float
    success_rate: float
    m: int
    n: int
    rank: float
    sigma_ratio: float


def method_label(cfg):
    if cfg.method == "rk":
        return f"rk(lam={cfg.lam:g})"
    if cfg.method == "rkas" and not cfg.store_gram:
        return "rkas-unstored"
    return cfg.method


def _trial_problem(plan, trial_seed, cached):
    spec = plan.problem
    if spec.kind == "from_file":
        if "A" not in cached:
            cached["A"] = read_matrix_market(spec.path)
        A = cached["A"]
        b, x, r = make_rhs(A, seed=trial_seed, consistent=spec.consistent,
                           residual_scale=spec.residual_scale)
        return LinearSystem(A, b, planted_x=x, planted_r=r,
                            spec=replace(spec, m=A.rows, n=A.cols, seed=trial_seed))
    if not plan.fresh_matrix:
        if "sys" not in cached:
            cached["sys"] = generate(spec)
        base = cached["sys"]
        b, x, r = make_rhs(base.A, seed=trial_seed, consistent=spec.consistent,
                           residual_scale=spec.residual_scale)
        return LinearSystem(base.A, b, planted_x=x, planted_r=r, spec=spec)
    return generate(replace(spec, seed=trial_seed))


def run_plan(plan, progress=None):
    """Execute every (trial, method) pair.

    Methods are interleaved within each trial (A, B, A, B, ...) and all runs
    happen serially in this process so their wall-clock times are comparable.
    Within a trial every method receives the same solver seed.
    Failures are recorded in the ``error`` column instead of aborting.
    """
    warmup()
    seeds = spawn_seeds(plan.master_seed, plan.trials)
    cached = {}
    results = []
    for t, seed in enumerate(seeds):
        try:
            sys_ = _trial_problem(plan, seed, cached)
            gt = analyze(sys_.A, sys_.b)
        except Exception as exc:
            for cfg in plan.methods:
                results.append(_failed(t, cfg, seed, exc, plan.problem))
            continue
        # common random numbers: every method in a trial gets the same stream
        sseed = spawn_seeds(seed, 1)[0]
        for cfg in plan.methods:
            cfg = replace(cfg, seed=sseed, track_flops=plan.record_flops)
            try:
                res = run(sys_, gt, cfg)
            except Exception as exc:
                results.append(_failed(t, cfg, sseed, exc, plan.problem))
                continue
            results.append(TrialResult(
                trial=t, method=method_label(cfg), seed=sseed, iters=res.iters,
                converged=res.converged, final_rse=res.final.rse,
                cpu_seconds=res.init_seconds + res.solve_seconds,
                init_seconds=res.init_seconds,
                flops=res.state.flops.total if plan.record_flops else 0,
                m=sys_.A.rows, n=sys_.A.cols, rank=gt.rank, sigma_ratio=gt.cond,
            ))
            if progress:
                progress(results[-1])
    return results


def _failed(t, cfg, seed, exc, spec):
    return TrialResult(
        trial=t, method=method_label(cfg), seed=seed, iters=0, converged=False,
        final_rse=float("nan"), cpu_seconds=float("nan"), init_seconds=float("nan"),
        flops=0, m=spec.m, n=spec.n, rank=0, sigma_ratio=float("nan"),
        error=f"{type(exc).__name__}: {exc}",
    )


def summarize(results, record_flops=True):
    """One :class:`SummaryRow` per method, in first-seen order."""
    order = []
    groups = {}
    for r in results:
        if r.method not in groups:
            order.append(r.method)
            groups[r.method] = []
        groups[r.method].append(r)
    rows = []
    for name in order:
        rs = groups[name]
        ok = [r for r in rs if not r.error]
        pick = ok or rs
        rows.append(SummaryRow(
            method=name,
            trials=len(rs),
            mean_iters=_mean(r.iters for r in ok),
            median_iters=statistics.median(r.iters for r in ok) if ok else float("nan"),
            mean_cpu_seconds=_mean(r.cpu_seconds for r in ok),
            mean_flops=_mean(r.flops for r in ok) if record_flops else float("nan"),
            success_rate=sum(r.converged for r in rs) / len(rs),
            m=pick[0].m,
            n=pick[0].n,
            rank=_mean(r.rank for r in ok),
            sigma_ratio=_mean(r.sigma_ratio for r in ok),
        ))
    return rows


def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else float("nan")


# -- output ------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        d = asdict(row) if not isinstance(row, dict) else row
        w.writerow([_fmt(d[c]) for c in columns])
    return buf.getvalue()


def aligned_table(rows, columns):
    cells = [columns]
    for row in rows:
        d = asdict(row) if not isinstance(row, dict) else row
        cells.append([f"{d[c]:.6g}" if isinstance(d[c], float) else str(d[c]) for c in columns])
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def timer_resolution():
    return time.get_clock_info("perf_counter").resolution


def run_metadata(plan):
    return {
        "plan": plan.to_dict(),
        "library": "rkas",
        "library_version": __version__,
        "prng": PRNG_NAME,
        "trial_seeds": spawn_seeds(plan.master_seed, plan.trials),
        "timer": "time.perf_counter",
        "timer_resolution_seconds": timer_resolution(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "machine": platform.machine(),
    }


def write_bench(plan, results, out_dir):
    """Write summary.csv, summary.txt, trials.csv and meta.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = summarize(results, plan.record_flops)
    (out / "summary.csv").write_text(to_csv(rows, SUMMARY_FIELDS))
    (out / "summary.txt").write_text(aligned_table(rows, SUMMARY_FIELDS))
    (out / "trials.csv").write_text(to_csv(results, TRIAL_FIELDS))
    (out / "meta.json").write_text(json.dumps(run_metadata(plan), indent=2, sort_keys=True) + "\n")
    return rows


def run_sweep(plan, progress=None):
    """Repeat the plan over ``plan.sweep = {"param": name, "values": [...]}``.

    Returns ``(figure_rows, all_results)`` where each figure row holds the
    swept value and per-method means, ready for plotting CPU or iterations
    against m or n.
    """
    param = plan.sweep["param"]
    values = plan.sweep["values"]
    if param not in {f.name for f in fields(ProblemSpec)}:
        raise ValueError(f"cannot sweep unknown problem field {param!r}")
    figure = []
    everything = []
    for v in values:
        sub = replace(plan, problem=replace(plan.problem, **{param: v}), sweep=None)
        results = run_plan(sub, progress)
        for r in results:
            everything.append({param: v, **asdict(r)})
        for row in summarize(results, plan.record_flops):
            figure.append({
                "x": v, "param": param, "method": row.method,
                "mean_cpu_seconds": row.mean_cpu_seconds, "mean_iters": row.mean_iters,
                "mean_flops": row.mean_flops, "success_rate": row.success_rate,
            })
    return figure, everything


FIGURE_FIELDS = ["param", "x", "method", "mean_cpu_seconds", "mean_iters", "mean_flops", "success_rate"]


def spearman(x, y):
    """Spearman rank correlation (average ranks for ties)."""
    return float(spearmanr(x, y).statistic)
