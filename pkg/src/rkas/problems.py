"""Test-problem generation, Matrix Market I/O and problem-file serialization."""
from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import __version__
from .linalg import CsrMatrix, DenseMatrix, as_matrix, frobenius_sq, matvec, row_sq_norms
from .oracle import nullspace_residual
from .sampling import make_rng

KINDS = ("dense_udv", "sparse_random", "from_file")


@dataclass
class ProblemSpec:
    kind: str
    m: int = 0
    n: int = 0
    r: int | None = None
    kappa: float = 1.0
    density: float = 1.0
    rc: float | None = None
    path: str | None = None
    seed: int = 0
    consistent: bool = False
    #: ||r|| / ||A x_planted|| for inconsistent right-hand sides
    residual_scale: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "from_file":
            if not self.path:
                raise ValueError("from_file problems need a path")
            return
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if self.kind == "dense_udv":
            if self.r is None:
                self.r = min(self.m, self.n)
            if not 1 <= self.r <= min(self.m, self.n):
                raise ValueError(f"rank r={self.r} must lie in [1, min(m, n)]")
            if self.kappa < 1:
                raise ValueError("kappa must be >= 1")
        if self.kind == "sparse_random":
            if not 0 < self.density <= 1:
                raise ValueError("density must lie in (0, 1]")
            if self.rc is not None and not 0 < self.rc <= 1:
                raise ValueError("rc must lie in (0, 1]")
        if self.residual_scale < 0:
            raise ValueError("residual_scale must be nonnegative")


@dataclass(eq=False)
class LinearSystem:
    A: DenseMatrix | CsrMatrix
    b: np.ndarray
    planted_x: np.ndarray | None = None
    planted_r: np.ndarray | None = None
    spec: ProblemSpec | None = None
    _row_sq: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.A = as_matrix(self.A)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.b.shape != (self.A.rows,):
            raise ValueError(f"b has shape {self.b.shape}, expected ({self.A.rows},)")

    @property
    def shape(self):
        return self.A.shape

    @property
    def row_sq_norms(self):
        if self._row_sq is None:
            self._row_sq = row_sq_norms(self.A)
        return self._row_sq


# -- generators --------------------------------------------------------------


def _orthonormal_columns(rng, rows, cols):
    q, rfac = np.linalg.qr(rng.standard_normal((rows, cols)))
    # sign fix so the factor is a deterministic function of the Gaussian draw
    return q * np.sign(np.diag(rfac))


def gen_dense_udv(spec, rng=None):
    """``A = U diag(d) V^T`` with orthonormal U, V and d uniform on [1, kappa]."""
    if spec.kind != "dense_udv":
        raise ValueError("spec.kind must be 'dense_udv'")
    rng = make_rng(spec.seed) if rng is None else rng
    U = _orthonormal_columns(rng, spec.m, spec.r)
    V = _orthonormal_columns(rng, spec.n, spec.r)
    d = 1.0 + (spec.kappa - 1.0) * rng.random(spec.r)
    return DenseMatrix((U * d) @ V.T)


def _rotate(M, p, q, c, s, axis):
    if axis == 0:
        a, b = M[p].copy(), M[q].copy()
        M[p], M[q] = c * a + s * b, -s * a + c * b
    else:
        a, b = M[:, p].copy(), M[:, q].copy()
        M[:, p], M[:, q] = c * a + s * b, -s * a + c * b


def gen_sparse_random(spec, rng=None, max_retries=100):
    """Random sparse matrix at roughly the requested density.

    Without ``rc`` the pattern is uniform and the values standard normal.
    With ``rc`` the matrix starts as a diagonal of singular values spaced
    geometrically from 1 down to ``rc`` and is filled in by random plane
    rotations of rows and columns until the density is reached.  Rotations
    are orthogonal, so the condition number stays ``1/rc`` up to rounding.
    """
    if spec.kind != "sparse_random":
        raise ValueError("spec.kind must be 'sparse_random'")
    m, n, density = spec.m, spec.n, spec.density
    if density * m * n < max(m, n):
        raise ValueError("density too low for every row and column to be nonzero")
    rng = make_rng(spec.seed) if rng is None else rng
    target = int(round(density * m * n))

    if spec.rc is None:
        mat = sp.random(m, n, density=density, format="coo", random_state=rng,
                        data_rvs=rng.standard_normal)
        rows, cols = [mat.row.astype(np.int64)], [mat.col.astype(np.int64)]
        # resample empty rows, then empty columns; both only add entries
        for axis, size, other in ((0, m, n), (1, n, m)):
            hit = np.zeros(size, dtype=bool)
            hit[np.concatenate(rows if axis == 0 else cols)] = True
            for line in np.flatnonzero(~hit):
                for _ in range(max_retries):
                    pos = np.flatnonzero(rng.random(other) < density)
                    if pos.size:
                        break
                else:
                    raise ValueError("could not draw a matrix without zero rows/columns")
                fixed = np.full(pos.size, line, dtype=np.int64)
                rows.append(fixed if axis == 0 else pos)
                cols.append(pos if axis == 0 else fixed)
        r, c = np.concatenate(rows), np.concatenate(cols)
        vals = np.concatenate([mat.data, rng.standard_normal(r.size - mat.nnz)])
        return CsrMatrix.from_scipy(sp.coo_matrix((vals, (r, c)), shape=(m, n)).tocsr())

    k = min(m, n)
    svals = spec.rc ** (np.arange(k) / max(k - 1, 1))
    M = np.zeros((m, n))
    M[np.arange(k), np.arange(k)] = svals
    # give every empty row/column some support first
    for q in range(k, m):
        p = int(rng.integers(0, q))
        _rotate(M, p, q, *_random_cs(rng), axis=0)
    for q in range(k, n):
        p = int(rng.integers(0, q))
        _rotate(M, p, q, *_random_cs(rng), axis=1)
    nnz = np.count_nonzero(M)
    while nnz < target:
        axis = int(rng.integers(0, 2))
        size = m if axis == 0 else n
        p, q = rng.choice(size, size=2, replace=False)
        before = np.count_nonzero(M[[p, q]] if axis == 0 else M[:, [p, q]])
        _rotate(M, p, q, *_random_cs(rng), axis=axis)
        after = np.count_nonzero(M[[p, q]] if axis == 0 else M[:, [p, q]])
        nnz += after - before
    A = CsrMatrix.from_dense(M)
    if not _no_empty_lines(A):
        raise ValueError("rotation fill left an empty row or column")
    return A


def _random_cs(rng):
    theta = rng.uniform(0.0, 2.0 * np.pi)
    return np.cos(theta), np.sin(theta)


def _no_empty_lines(A):
    rows = np.diff(A.indptr) > 0
    cols = np.zeros(A.cols, dtype=bool)
    cols[A.indices] = True
    return bool(rows.all() and cols.all())


def make_rhs(A, seed=None, consistent=False, residual_scale=0.5, rng=None):
    """``b = A x + r`` with Gaussian planted ``x`` and ``r`` in Null(A^T).

    ``||r|| = residual_scale * ||A x||`` for inconsistent systems and
    ``r = 0`` for consistent ones.  The planted ``x`` is only the
    pseudoinverse solution when A has full column rank.
    """
    A = as_matrix(A)
    rng = make_rng(seed) if rng is None else rng
    x = rng.standard_normal(A.cols)
    Ax = matvec(A, x)
    if consistent:
        r = np.zeros(A.rows)
    else:
        r = nullspace_residual(A, rng.standard_normal(A.rows))
        norm = np.linalg.norm(r)
        tol = 1e-10 * np.sqrt(frobenius_sq(A)) * np.sqrt(A.rows)
        if norm <= tol:
            raise ValueError("Null(A^T) is trivial (full row rank); no inconsistent rhs exists")
        r *= residual_scale * np.linalg.norm(Ax) / norm
    return Ax + r, x, r


def generate(spec):
    """Build a :class:`LinearSystem` from a spec, deterministically in its seed."""
    rng = make_rng(spec.seed)
    if spec.kind == "dense_udv":
        A = gen_dense_udv(spec, rng)
    elif spec.kind == "sparse_random":
        A = gen_sparse_random(spec, rng)
    else:
        A = read_matrix_market(spec.path)
        spec = replace(spec, m=A.rows, n=A.cols)
    b, x, r = make_rhs(A, consistent=spec.consistent, residual_scale=spec.residual_scale, rng=rng)
    return LinearSystem(A, b, planted_x=x, planted_r=r, spec=spec)


# -- Matrix Market -------------------------------------------------------------

_SYMMETRIES = ("general", "symmetric", "skew-symmetric")


class MatrixMarketError(ValueError):
    pass


def _data_lines(lines):
    for raw in lines:
        line = raw.strip()
        if line and not line.startswith("%"):
            yield line


def read_matrix_market(path):
    """Parse a real Matrix Market file into canonical CSR."""
    with open(path, "r") as fh:
        text = fh.read()
    return parse_matrix_market(text)


def parse_matrix_market(text):
    lines = text.splitlines()
    if not lines:
        raise MatrixMarketError("empty file")
    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket" or header[1].lower() != "matrix":
        raise MatrixMarketError(f"malformed header: {lines[0]!r}")
    layout, field_, symmetry = (h.lower() for h in header[2:])
    if layout not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported layout {layout!r}")
    if field_ != "real":
        raise MatrixMarketError(f"only real matrices are supported, got field {field_!r}")
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}")

    body = _data_lines(lines[1:])
    try:
        size = next(body).split()
    except StopIteration:
        raise MatrixMarketError("missing size line") from None
    try:
        dims = [int(t) for t in size]
    except ValueError:
        raise MatrixMarketError(f"bad size line {size!r}") from None

    if layout == "coordinate":
        if len(dims) != 3:
            raise MatrixMarketError("coordinate size line needs rows, cols, entries")
        m, n, nnz = dims
        rows, cols, vals = _read_coordinate(body, m, n, nnz)
    else:
        if len(dims) != 2:
            raise MatrixMarketError("array size line needs rows, cols")
        m, n = dims
        rows, cols, vals = _read_array(body, m, n, symmetry)

    if symmetry != "general":
        if m != n:
            raise MatrixMarketError(f"{symmetry} matrix must be square")
        off = rows != cols
        if symmetry == "skew-symmetric" and np.any(~off & (vals != 0)):
            raise MatrixMarketError("skew-symmetric matrix has a nonzero diagonal entry")
        sign = -1.0 if symmetry == "skew-symmetric" else 1.0
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, sign * vals[off]]),
        )
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(m, n))
    return CsrMatrix.from_scipy(mat.tocsr())


def _read_coordinate(body, m, n, nnz):
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    k = 0
    for line in body:
        if k >= nnz:
            raise MatrixMarketError("more entries than declared")
        parts = line.split()
        if len(parts) == 2:
            raise MatrixMarketError("pattern entries are not supported")
        if len(parts) != 3:
            raise MatrixMarketError(f"bad entry line {line!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"bad entry line {line!r}") from None
        if not (1 <= i <= m and 1 <= j <= n):
            raise MatrixMarketError(f"entry ({i}, {j}) outside declared {m}x{n}")
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {k}")
    return rows, cols, vals


def _read_array(body, m, n, symmetry):
    try:
        values = np.array([float(line) for line in body])
    except ValueError:
        raise MatrixMarketError("bad value in array body") from None
    # column-major; symmetric variants list the lower triangle only
    if symmetry == "general":
        pos = [(i, j) for j in range(n) for i in range(m)]
    elif symmetry == "symmetric":
        pos = [(i, j) for j in range(n) for i in range(j, m)]
    else:
        pos = [(i, j) for j in range(n) for i in range(j + 1, m)]
    if values.size != len(pos):
        raise MatrixMarketError(f"expected {len(pos)} values, found {values.size}")
    rows = np.array([p[0] for p in pos], dtype=np.int64)
    cols = np.array([p[1] for p in pos], dtype=np.int64)
    return rows, cols, values


def write_matrix_market(A, path, comment=None):
    """Write ``A`` as a general real coordinate file (shortest round-trip floats)."""
    A = as_matrix(A).to_csr()
    buf = io.StringIO()
    buf.write("%%MatrixMarket matrix coordinate real general\n")
    if comment:
        for line in comment.splitlines():
            buf.write(f"% {line}\n")
    buf.write(f"{A.rows} {A.cols} {A.nnz}\n")
    for i in range(A.rows):
        idx, val = A.row(i)
        for j, v in zip(idx.tolist(), val.tolist()):
            buf.write(f"{i + 1} {j + 1} {v!r}\n")
    Path(path).write_text(buf.getvalue())


# -- problem container ---------------------------------------------------------

FORMAT_TAG = "rkas-problem/1"


class ProblemFileError(ValueError):
    pass


def save_problem(system, path):
    """Write a self-describing ``.npz`` holding spec, matrix arrays and rhs."""
    A = system.A
    meta = {
        "format": FORMAT_TAG,
        "library_version": __version__,
        "storage": "dense" if isinstance(A, DenseMatrix) else "csr",
        "shape": list(A.shape),
        "spec": asdict(system.spec) if system.spec is not None else None,
    }
    arrays = {"b": system.b}
    if isinstance(A, DenseMatrix):
        arrays["dense"] = A.data
    else:
        arrays.update(indptr=A.indptr, indices=A.indices, data=A.data)
    if system.planted_x is not None:
        arrays["planted_x"] = system.planted_x
    if system.planted_r is not None:
        arrays["planted_r"] = system.planted_r
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_problem(path):
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("format") != FORMAT_TAG:
                raise ProblemFileError(f"not an rkas problem file (format={meta.get('format')!r})")
            shape = tuple(meta["shape"])
            if meta["storage"] == "dense":
                A = DenseMatrix(z["dense"])
            else:
                A = CsrMatrix(shape[0], shape[1], z["indptr"], z["indices"], z["data"])
            spec = ProblemSpec(**meta["spec"]) if meta.get("spec") else None
            return LinearSystem(
                A, z["b"],
                planted_x=z["planted_x"] if "planted_x" in z.files else None,
                planted_r=z["planted_r"] if "planted_r" in z.files else None,
                spec=spec,
            )
    except ProblemFileError:
        raise
    except Exception as exc:  # zip, json, key and validation errors alike
        raise ProblemFileError(f"cannot read problem file {path}: {exc}") from exc
