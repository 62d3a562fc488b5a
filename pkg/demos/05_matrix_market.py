"""
Reading a Matrix Market file
============================

Real-world test matrices usually ship as .mtx files.  Here one is written,
read back, given a fresh inconsistent right-hand side and solved.
"""
import tempfile
from pathlib import Path

import numpy as np

from rkas import LinearSystem, SolverConfig, analyze, run
from rkas.problems import make_rhs, read_matrix_market, write_matrix_market

rng = np.random.default_rng(5)
dense = np.where(rng.random((120, 30)) < 0.2, rng.standard_normal((120, 30)), 0.0)
dense[np.arange(30), np.arange(30)] += 1.0  # no empty columns

path = Path(tempfile.mkdtemp()) / "demo.mtx"
write_matrix_market(dense, path, comment="demo matrix")
print(path.read_text().splitlines()[:4])

A = read_matrix_market(path)
print(f"read {A.rows}x{A.cols} with {A.nnz} nonzeros; identical: {np.array_equal(A.to_dense(), dense)}")

b, _, _ = make_rhs(A, seed=1, consistent=False)
system = LinearSystem(A, b)
gt = analyze(A, b)
for method in ("rkas", "rek"):
    res = run(system, gt, SolverConfig(method, seed=0, max_iters=10**6))
    print(f"{method}: {res.status} after {res.iters} iterations, rse {res.final.rse:.1e}")
