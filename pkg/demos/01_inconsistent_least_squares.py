"""
Solving an inconsistent least-squares problem
=============================================

Plain randomized Kaczmarz stalls at a noise floor when b is not in the
range of A.  The adaptive-stepsize variant keeps converging to the
pseudoinverse solution, and so does the extended method (REK).
"""
import numpy as np

from rkas import ProblemSpec, SolverConfig, analyze, generate, run
from rkas.solvers import predict_iters_rkas, rk_error_bound

# a 500 x 50 matrix of rank 40 with singular values in [1, 2]
spec = ProblemSpec("dense_udv", m=500, n=50, r=40, kappa=2.0, seed=1, consistent=False)
system = generate(spec)
gt = analyze(system.A, system.b)
print(f"rank {gt.rank}, sigma ratio {gt.cond:.3f}, ||e|| = {np.sqrt(gt.e_sq):.3f}")

# run each method with the same seed and a common iteration cap
for cfg in (
    SolverConfig("rkas", seed=0, max_iters=200_000),
    SolverConfig("rek", seed=0, max_iters=200_000),
    SolverConfig("rk", lam=0.5, seed=0, max_iters=200_000, check_every=100),
):
    res = run(system, gt, cfg)
    print(f"{cfg.method:5s} {res.status:10s} iters={res.iters:7d}  rse={res.final.rse:.2e}  "
          f"cpu={res.init_seconds + res.solve_seconds:.3f}s")

# the closed-form predictions behind those numbers
eps = 1e-12 * gt.x_star_sq
eps1 = float(np.sum((system.A.data @ gt.x_star) ** 2))
print("predicted RKAS iterations:", predict_iters_rkas(eps, eps1, gt))
print("RK(0.5) error floor      :", rk_error_bound(10**9, 0.5, gt, gt.x_star_sq) / gt.x_star_sq,
      "(relative)")
