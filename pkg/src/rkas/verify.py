"""Property checks run by ``rkas verify`` on a single problem instance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import flops
from .oracle import analyze, range_projector_residual
from .solvers import (
    expected_next_residual_err,
    init_state,
    residual_drift,
    rkas_contraction_factor,
    rkas_step,
)

#: instrumented flop counting is pure Python; skip it above this many rows
FLOP_CHECK_MAX_ROWS = 400


@dataclass
class Check:
    name: str
    status: str  # PASS, FAIL or SKIP
    detail: str = ""

    @property
    def failed(self):
        return self.status == "FAIL"


def _status(ok):
    return "PASS" if ok else "FAIL"


def run_checks(sys_, steps=2000, seed=0, flop_steps=100):
    A, b = sys_.A, sys_.b
    dense = A.to_dense()
    gt = analyze(A, b)
    out = []

    normal = np.linalg.norm(dense.T @ (dense @ gt.x_star - b))
    tol = 1e-10 * gt.frob_norm * max(np.linalg.norm(b), 1.0)
    out.append(Check("oracle normal equations", _status(normal <= tol),
                     f"||A^T(Ax*-b)|| = {normal:.3e} (tol {tol:.1e})"))

    target = dense @ gt.x_star
    frob_sq = gt.frob_sq
    stored = init_state(sys_, "rkas", seed=seed, store_gram=True)
    onfly = init_state(sys_, "rkas", seed=seed, store_gram=False)
    draws = stored.sampler_rows.draw_many(steps)
    worst_orth = 0.0
    mono_ok = True
    identical = True
    worst_range = 0.0
    prev = np.linalg.norm(dense @ stored.x - target)
    scale = np.linalg.norm(target)
    for i in draws:
        rkas_step(stored, sys_, int(i), store_gram=True)
        rkas_step(onfly, sys_, int(i), store_gram=False)
        identical &= np.array_equal(stored.x, onfly.x) and np.array_equal(stored.r, onfly.r)
        d = dense @ stored.x - target
        nd = np.linalg.norm(d)
        g = dense @ dense[int(i)]
        # once converged, d is rounding noise and the ratio is meaningless
        if nd > 1e-12 * scale:
            worst_orth = max(worst_orth, abs(g @ d) / (frob_sq * nd))
        mono_ok &= nd <= prev * (1 + 1e-10) + 1e-14 * scale
        prev = nd
        xs = stored.x
        worst_range = max(
            worst_range,
            np.linalg.norm(range_projector_residual(dense, xs)) / (1 + np.linalg.norm(xs)),
        )
    out.append(Check("orthogonality <g_i, Ax+ - AA+b> = 0", _status(worst_orth <= 1e-8),
                     f"max relative inner product {worst_orth:.3e} over {steps} steps"))
    out.append(Check("residual-space monotonicity", _status(mono_ok)))
    out.append(Check("range invariance x^k in Range(A^T)", _status(worst_range <= 1e-8),
                     f"max ||(I - A+A)x|| / (1+||x||) = {worst_range:.3e}"))
    out.append(Check("stored/unstored Gram bit-identical", _status(identical)))
    drift = residual_drift(stored, sys_)
    drift_tol = 1e-8 * (1 + np.linalg.norm(b))
    out.append(Check("maintained residual drift", _status(drift <= drift_tol),
                     f"{drift:.3e} (tol {drift_tol:.1e})"))

    factor = rkas_contraction_factor(gt)
    rng = np.random.default_rng(seed)
    probes = [np.zeros(A.cols), rng.standard_normal(A.cols), stored.x]
    worst = -np.inf
    tight_err = 0.0
    equal_spectrum = np.isclose(gt.sigma_max, gt.sigma_min, rtol=1e-12)
    # a converged probe sits at rounding level, where the ratio is noise
    floor = (1e-12 * np.linalg.norm(b)) ** 2
    for x in probes:
        expected, current = expected_next_residual_err(dense, b, x, gt)
        bound = factor * current
        if current > floor:
            worst = max(worst, (expected - bound) / current)
            tight_err = max(tight_err, abs(expected - bound) / bound if bound else 0.0)
    out.append(Check("exact conditional contraction", _status(worst <= 1e-12),
                     f"max (E - bound)/current = {worst:.3e}, factor {factor:.6f}"))
    if equal_spectrum:
        out.append(Check("tightness (equal singular values)", _status(tight_err <= 1e-10),
                         f"equality case: relative gap {tight_err:.3e}"))
    else:
        out.append(Check("tightness (equal singular values)", "SKIP",
                         f"singular values not all equal (ratio {gt.cond:.3g})"))

    if A.rows <= FLOP_CHECK_MAX_ROWS:
        out.extend(_flop_checks(sys_, draws[:flop_steps], seed))
    else:
        out.append(Check("flop formulas", "SKIP", f"m={A.rows} > {FLOP_CHECK_MAX_ROWS}"))
    return out


def _flop_checks(sys_, draws, seed):
    A, b = sys_.A, sys_.b
    prof = flops.profile(A)
    res = []
    for store in (True, False):
        model = flops.rkas_flops_stored(prof) if store else flops.rkas_flops_unstored(prof)
        ledger, _, _ = flops.instrumented_rkas(A, b, draws, store_gram=store)
        ok = ledger.init_flops == model.init and ledger.steps == [model.step(int(i)) for i in draws]
        label = "stored" if store else "unstored"
        res.append(Check(f"flop formulas RKAS {label}", _status(ok),
                         f"init {ledger.init_flops} vs {model.init}"))
    cols = np.random.default_rng(seed).integers(0, A.cols, size=len(draws))
    model = flops.rek_flops(prof)
    ledger, _, _ = flops.instrumented_rek(A, b, draws, cols)
    ok = ledger.init_flops == model.init and ledger.steps == [
        model.step(int(i), int(j)) for i, j in zip(draws, cols)
    ]
    res.append(Check("flop formulas REK", _status(ok), f"init {ledger.init_flops} vs {model.init}"))
    return res
