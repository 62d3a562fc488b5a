"""
Counting flops on sparse matrices
=================================

The per-step cost of the adaptive method depends on how many rows share a
column with the sampled row; REK pays for one row and one column instead.
Closed-form counts are checked here against an instrumented run.
"""
import numpy as np

from rkas import flops
from rkas.problems import ProblemSpec, gen_sparse_random

A = gen_sparse_random(ProblemSpec("sparse_random", m=40, n=20, density=0.1, seed=2))
p = flops.profile(A)
print(f"{A.rows}x{A.cols}, nnz {A.nnz}, overlapping row pairs |T| = {p.t_total}")

stored = flops.rkas_flops_stored(p)
unstored = flops.rkas_flops_unstored(p)
rek = flops.rek_flops(p)
print(f"init flops: RKAS stored {stored.init}, RKAS unstored {unstored.init}, REK {rek.init}")

rng = np.random.default_rng(0)
rows, cols = rng.integers(0, A.rows, 100), rng.integers(0, A.cols, 100)
b = rng.standard_normal(A.rows)

ledger, _, _ = flops.instrumented_rkas(A, b, rows, store_gram=True)
predicted = [stored.step(int(i)) for i in rows]
print("RKAS stored, measured == formula:", ledger.steps == predicted,
      f"(mean {np.mean(ledger.steps):.1f} flops/step)")

ledger, _, _ = flops.instrumented_rek(A, b, rows, cols)
predicted = [rek.step(int(i), int(j)) for i, j in zip(rows, cols)]
print("REK,         measured == formula:", ledger.steps == predicted,
      f"(mean {np.mean(ledger.steps):.1f} flops/step)")
