"""
A small multi-trial benchmark
=============================

Trials run serially with methods interleaved; every method in a trial
shares one seed.  Results land in CSV files next to a JSON record of the
plan, the seeds and the timer resolution.
"""
import sys
import tempfile

from rkas import ProblemSpec, SolverConfig
from rkas.harness import SUMMARY_FIELDS, ExperimentPlan, aligned_table, run_plan, write_bench

out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="rkas-bench-")

plan = ExperimentPlan(
    problem=ProblemSpec("sparse_random", m=1000, n=100, density=0.1, rc=0.5, seed=0),
    methods=[
        SolverConfig("rkas", check_every=100),
        SolverConfig("rkas", store_gram=False, check_every=100),
        SolverConfig("rek", check_every=100),
    ],
    trials=5,
    master_seed=42,
)
results = run_plan(plan, progress=lambda r: print(f"  trial {r.trial} {r.method:14s} {r.iters} iters"))
rows = write_bench(plan, results, out)
print()
print(aligned_table(rows, SUMMARY_FIELDS))
print("written to", out)
