"""
Why the adaptive step works
===========================

Each step picks the point on the line A x + t * A A_i^T that is closest to
A A^+ b.  Afterwards the error A x - A A^+ b is orthogonal to the search
direction, and the expected squared error shrinks by a fixed factor.
"""
import numpy as np

from rkas import LinearSystem, analyze, init_state, rkas_step
from rkas.solvers import expected_next_residual_err, rkas_contraction_factor

rng = np.random.default_rng(0)
A = rng.standard_normal((30, 6)) @ rng.standard_normal((6, 12))  # rank 6
b = rng.standard_normal(30)
system = LinearSystem(A, b)
gt = analyze(A, b)
target = A @ gt.x_star

state = init_state(system, "rkas", seed=3)
for i in state.sampler_rows.draw_many(5):
    rkas_step(state, system, int(i))
    d = A @ state.x - target
    g = A @ A[i]
    print(f"row {i:2d}: ||Ax - AA+b|| = {np.linalg.norm(d):.4f}   <g, d> = {g @ d:+.1e}")

# exact one-step expectation over all rows, against the contraction factor
factor = rkas_contraction_factor(gt)
expected, current = expected_next_residual_err(A, b, state.x, gt)
print(f"\nE[next] / current = {expected / current:.4f}  <=  factor {factor:.4f}")

# with orthonormal rows all singular values are 1 and the bound is attained
Q = np.linalg.qr(rng.standard_normal((12, 8)))[0].T
gq = analyze(Q, np.ones(8))
expected, current = expected_next_residual_err(Q, np.ones(8), rng.standard_normal(12), gq)
print(f"orthonormal rows: E[next] / current = {expected / current:.12f}, "
      f"factor = {rkas_contraction_factor(gq):.12f}")
