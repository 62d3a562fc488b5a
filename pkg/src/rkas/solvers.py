"""RKAS (adaptive-stepsize randomized Kaczmarz), relaxed RK and REK, plus the
closed-form error bounds and iteration-count predictors.

The stepping kernels live in :mod:`rkas._kernels`; this module owns solver
state, configuration, checkpointing and the single-step public API.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .flops import FlopLedger, cost_table
from .linalg import GramWorkspace, as_matrix, col_sq_norms, gram_matrix, matvec
from .oracle import rse as _rse
from .sampling import DiscreteSampler

METHODS = ("rkas", "rk", "rek")
#: indices drawn per kernel call; results do not depend on it
DRAW_BLOCK = 8192


@dataclass(frozen=True)
class SolverConfig:
    method: str = "rkas"
    lam: float = 1.0
    store_gram: bool = True
    seed: int = 0
    max_iters: int = 100_000
    rse_tol: float = 1e-12
    check_every: int = 1
    #: None -> same as check_every
    record_every: int | None = None
    #: None disables the periodic exact recompute of r = Ax - b
    residual_refresh_every: int | None = None
    track_flops: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "rk" and not 0 < self.lam < 2:
            raise ValueError(f"RK stepsize must lie in (0, 2), got {self.lam}")
        if not self.rse_tol > 0:
            raise ValueError("rse_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.check_every < 1:
            raise ValueError("check_every must be >= 1")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.residual_refresh_every is not None and self.residual_refresh_every < 1:
            raise ValueError("residual_refresh_every must be >= 1")

    @property
    def record_interval(self):
        return self.check_every if self.record_every is None else self.record_every


@dataclass
class ConvergenceRecord:
    iter: int
    rse: float
    residual_err_sq: float
    elapsed: float
    flops: int


@dataclass
class SolverState:
    x: np.ndarray
    r: np.ndarray | None
    z: np.ndarray | None
    k: int
    sampler_rows: DiscreteSampler
    sampler_cols: DiscreteSampler | None = None
    flops: FlopLedger = field(default_factory=FlopLedger)


@dataclass
class RunResult:
    records: list
    state: SolverState
    converged: bool
    status: str
    init_seconds: float
    solve_seconds: float

    @property
    def iters(self):
        return self.state.k

    @property
    def final(self):
        return self.records[-1]


class Engine:
    """Per-system precomputation shared by the step functions.

    Building one is the solver initialization: row (and column) norms, the
    Gram matrix and its column norms when stored, and the flop-cost table.
    """

    def __init__(self, A, b, method="rkas", store_gram=True, track_flops=True):
        A = as_matrix(A)
        self.A = A.to_csr()
        self.b = np.ascontiguousarray(b, dtype=np.float64)
        self.method = method
        self.store_gram = bool(store_gram) and method == "rkas"
        csr = self.A
        ws = GramWorkspace(csr)
        self.ws = ws
        self.row_sq = _kernels.csr_row_sq_norms(csr.indptr, csr.data)
        if np.any(self.row_sq == 0.0):
            raise ValueError("system matrix has a zero row")
        self.col_sq = col_sq_norms(csr) if method == "rek" else None
        if self.store_gram:
            self.gram = gram_matrix(csr)
            self.gnorm_sq = _kernels.gram_col_sq_norms(self.gram.indptr, self.gram.data, csr.rows)
        else:
            self.gram = None
            self.gnorm_sq = np.zeros(0)
        self.costs = cost_table(csr, method, store_gram=self.store_gram) if track_flops else None
        m, n = csr.shape
        self.row_cost = (
            self.costs.row_cost if self.costs is not None else np.zeros(m, dtype=np.int64)
        )
        self.col_cost = (
            self.costs.col_cost
            if self.costs is not None and self.costs.col_cost is not None
            else np.zeros(n, dtype=np.int64)
        )

    @property
    def init_flops(self):
        return self.costs.init if self.costs is not None else 0

    def gram_arrays(self):
        if self.gram is None:
            empty_i = np.zeros(1, dtype=np.int64)
            return empty_i, np.zeros(0, dtype=np.int64), np.zeros(0)
        return self.gram.indptr, self.gram.indices, self.gram.data

    def new_state(self, seed, x0=None):
        csr = self.A
        rng_seed = np.random.SeedSequence(seed)
        row_seed, col_seed = rng_seed.spawn(2)
        x = np.zeros(csr.cols) if x0 is None else np.array(x0, dtype=np.float64)
        state = SolverState(
            x=x,
            r=None,
            z=None,
            k=0,
            sampler_rows=DiscreteSampler(self.row_sq, row_seed),
        )
        if self.method == "rkas":
            state.r = -self.b.copy() if x0 is None else matvec(csr, x) - self.b
        if self.method == "rek":
            state.z = self.b.copy()
            state.sampler_cols = DiscreteSampler(self.col_sq, col_seed)
        state.flops.init_flops = self.init_flops
        return state

    def advance(self, state, draws, check_every=1, x_star=None, tol_abs=-1.0,
                col_draws=None, lam=1.0):
        """Run the kernel over pre-drawn indices; returns ``(steps, converged, last_sq_err)``."""
        csr, ws = self.A, self.ws
        draws = np.ascontiguousarray(draws, dtype=np.int64)
        if x_star is None:
            x_star = np.zeros(csr.cols)
        if self.method == "rkas":
            gptr, gidx, gval = self.gram_arrays()
            steps, conv, fl, last = _kernels.rkas_steps(
                csr.indptr, csr.indices, csr.data, ws.cptr, ws.cidx, ws.cval,
                self.store_gram, gptr, gidx, gval, self.gnorm_sq,
                state.x, state.r, draws, state.k, check_every, x_star, tol_abs, self.row_cost,
                ws.mark, ws.acc, ws.out_idx, ws.out_val,
            )
        elif self.method == "rk":
            steps, conv, fl, last = _kernels.rk_steps(
                csr.indptr, csr.indices, csr.data, self.b, self.row_sq, float(lam),
                state.x, draws, state.k, check_every, x_star, tol_abs, self.row_cost,
            )
        else:
            if state.z is None:
                raise ValueError("state has no z vector; it was not initialized for REK")
            col_draws = np.ascontiguousarray(col_draws, dtype=np.int64)
            if col_draws.shape != draws.shape:
                raise ValueError("REK needs one column index per row index")
            steps, conv, fl, last = _kernels.rek_steps(
                csr.indptr, csr.indices, csr.data, ws.cptr, ws.cidx, ws.cval,
                self.b, self.row_sq, self.col_sq,
                state.x, state.z, draws, col_draws, state.k, check_every, x_star, tol_abs,
                self.row_cost, self.col_cost,
            )
        state.k += int(steps)
        state.flops.iter_flops += int(fl)
        return int(steps), bool(conv), float(last)


def _engine_for(sys, method, store_gram=True):
    cache = sys.__dict__.setdefault("_engines", {})
    key = (method, bool(store_gram) and method == "rkas")
    if key not in cache:
        cache[key] = Engine(sys.A, sys.b, method, store_gram=store_gram)
    return cache[key]


def init_state(sys, method="rkas", seed=0, store_gram=True, x0=None):
    """Fresh :class:`SolverState` for ``sys`` (x0 = 0 unless injected)."""
    return _engine_for(sys, method, store_gram).new_state(seed, x0)


def _check_index(i, size, what):
    if not 0 <= int(i) < size:
        raise IndexError(f"{what} index {i} out of range [0, {size})")


def rkas_step(state, sys, i, store_gram=True):
    """One adaptive-stepsize step along row ``i`` (mutates and returns ``state``)."""
    _check_index(i, sys.A.rows, "row")
    if state.r is None:
        raise ValueError("state has no residual; it was not initialized for RKAS")
    _engine_for(sys, "rkas", store_gram).advance(state, [i])
    return state


def rk_step(state, sys, i, lam):
    """One relaxed Kaczmarz projection along row ``i`` with stepsize ``lam``."""
    if not 0 < lam < 2:
        raise ValueError(f"RK stepsize must lie in (0, 2), got {lam}")
    _check_index(i, sys.A.rows, "row")
    _engine_for(sys, "rk").advance(state, [i], lam=lam)
    return state


def rek_step(state, sys, i, j):
    """One REK step: project z along column ``j``, then x along row ``i``."""
    _check_index(i, sys.A.rows, "row")
    _check_index(j, sys.A.cols, "column")
    _engine_for(sys, "rek").advance(state, [i], col_draws=[j])
    return state


def residual_drift(state, sys):
    """``||r - (Ax - b)||`` for the maintained RKAS residual."""
    return float(np.linalg.norm(state.r - (matvec(sys.A, state.x) - sys.b)))


def _residual_err_sq(engine, state, gt, Ax_star):
    if state.r is not None:
        # r - e = Ax - b - (Ax* - b)
        d = state.r - gt.e
    else:
        d = matvec(engine.A, state.x) - Ax_star
    return float(d @ d)


def run(sys, gt, cfg, x0=None):
    """Iterate until ``rse <= cfg.rse_tol`` or ``cfg.max_iters`` steps.

    Stopping is tested every ``check_every`` iterations inside the kernel;
    a :class:`ConvergenceRecord` is emitted at k = 0, every
    ``record_interval`` iterations and at termination.  ``x0`` is a test
    hook; the methods are defined from x0 = 0.
    """
    t0 = time.perf_counter()
    engine = Engine(sys.A, sys.b, cfg.method, store_gram=cfg.store_gram,
                    track_flops=cfg.track_flops)
    state = engine.new_state(cfg.seed, x0)
    init_seconds = time.perf_counter() - t0

    x_star = np.ascontiguousarray(gt.x_star)
    xs_sq = gt.x_star_sq
    if xs_sq == 0.0:
        raise ValueError("pseudoinverse solution is zero; RSE undefined")
    tol_abs = cfg.rse_tol * xs_sq
    Ax_star = matvec(engine.A, x_star)

    records = []
    t_start = time.perf_counter()

    def record():
        records.append(ConvergenceRecord(
            iter=state.k,
            rse=_rse(state.x, gt),
            residual_err_sq=_residual_err_sq(engine, state, gt, Ax_star),
            elapsed=time.perf_counter() - t_start,
            flops=state.flops.total,
        ))

    record()
    converged = records[-1].rse <= cfg.rse_tol
    interval = cfg.record_interval
    refresh = cfg.residual_refresh_every if cfg.method == "rkas" else None
    while not converged and state.k < cfg.max_iters:
        stop = min(cfg.max_iters, (state.k // interval + 1) * interval, state.k + DRAW_BLOCK)
        if refresh:
            stop = min(stop, (state.k // refresh + 1) * refresh)
        count = stop - state.k
        rows = state.sampler_rows.draw_many(count)
        cols = state.sampler_cols.draw_many(count) if cfg.method == "rek" else None
        _, converged, _ = engine.advance(
            state, rows, cfg.check_every, x_star, tol_abs, col_draws=cols, lam=cfg.lam,
        )
        if refresh and state.k % refresh == 0:
            state.r = matvec(engine.A, state.x) - engine.b
        if converged or state.k % interval == 0 or state.k >= cfg.max_iters:
            record()
    if records[-1].iter != state.k:
        record()
    solve_seconds = time.perf_counter() - t_start
    converged = records[-1].rse <= cfg.rse_tol
    return RunResult(
        records=records,
        state=state,
        converged=converged,
        status="converged" if converged else "maxiters",
        init_seconds=init_seconds,
        solve_seconds=solve_seconds,
    )


# -- bounds and predictors -------------------------------------------------------


def rk_error_bound(k, lam, gt, x0_err_sq):
    """Expected ``||x^k - A^+ b||^2`` bound for relaxed RK, valid for lam in (0, 1)."""
    if not 0 < lam < 1:
        raise ValueError(f"the RK error bound needs lam in (0, 1), got {lam}")
    s2 = gt.sigma_min**2
    rate = 1.0 - 2.0 * lam * (1.0 - lam) * s2 / gt.frob_sq
    horizon = lam * gt.a_max_sq * gt.e_sq / ((1.0 - lam) * gt.a_min_sq * s2)
    return rate**k * x0_err_sq + horizon


def rkas_contraction_factor(gt):
    """Per-step expected contraction of ``||Ax - AA^+b||^2`` for RKAS."""
    # rank one gives exactly 0; rounding can push it slightly negative
    return max(0.0, 1.0 - gt.sigma_min**4 / (gt.sigma_max**2 * gt.frob_sq))


def predict_iters_rk(eps, eps0, gt):
    """Iterations and stepsize for RK to reach expected error ``eps``.

    Returns ``(count, lam)``; ``eps0`` is ``||x^0 - A^+ b||^2``.
    """
    if not (eps > 0 and eps0 > 0):
        raise ValueError("eps and eps0 must be positive")
    s2 = gt.sigma_min**2
    lam = eps * s2 * gt.a_min_sq / (2 * eps * s2 * gt.a_min_sq + 2 * gt.e_sq * gt.a_max_sq)
    log_term = math.log(2 * eps0 / eps)
    if log_term <= 0:
        return 0, lam
    k = 2 * log_term * (
        gt.frob_sq / s2 + gt.frob_sq * gt.e_sq * gt.a_max_sq / (eps * s2**2 * gt.a_min_sq)
    )
    return int(math.ceil(k)), lam


def predict_iters_rkas(eps, eps1, gt):
    """Iterations for RKAS to reach expected error ``eps`` from ``eps1 = ||Ax^0 - AA^+b||^2``."""
    if not (eps > 0 and eps1 > 0):
        raise ValueError("eps and eps1 must be positive")
    s2 = gt.sigma_min**2
    log_term = math.log(eps1 / (eps * s2))
    if log_term <= 0:
        return 0
    return int(math.ceil(log_term * gt.frob_sq * gt.sigma_max**2 / s2**2))


def expected_next_residual_err(A, b, x, gt):
    """Exact conditional expectation of ``||Ax^+ - AA^+b||^2`` given ``x``.

    Applies the RKAS update for every row and weights the outcomes by the
    row-sampling probabilities; no randomness.  Returns
    ``(expectation, current)`` where ``current = ||Ax - AA^+b||^2``.
    """
    dense = as_matrix(A).to_dense()
    x = np.asarray(x, dtype=np.float64)
    target = dense @ gt.x_star
    r = dense @ x - np.asarray(b, dtype=np.float64)
    row_sq = np.einsum("ij,ij->i", dense, dense)
    probs = row_sq / row_sq.sum()
    total = 0.0
    for i in range(dense.shape[0]):
        g = dense @ dense[i]
        alpha = (g @ r) / (g @ g)
        nd = dense @ (x - alpha * dense[i]) - target
        total += probs[i] * (nd @ nd)
    d = dense @ x - target
    return float(total), float(d @ d)


_warm = False


def warmup():
    """Compile every kernel once so later timings exclude JIT cost."""
    global _warm
    if _warm:
        return
    from .oracle import analyze
    from .problems import LinearSystem

    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    sys_ = LinearSystem(A, np.array([1.0, 1.0, 1.0]))
    gt = analyze(A, sys_.b)
    for cfg in (
        SolverConfig("rkas", store_gram=True, max_iters=5),
        SolverConfig("rkas", store_gram=False, max_iters=5),
        SolverConfig("rk", lam=1.0, max_iters=5),
        SolverConfig("rek", max_iters=5),
    ):
        run(sys_, gt, cfg)
    _warm = True
