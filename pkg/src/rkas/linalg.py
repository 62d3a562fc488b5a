"""Dense and CSR matrix containers plus the handful of kernels the solvers use.

Both containers are immutable once built: their arrays are flagged read-only
so several solver runs can share one matrix.  Everything is float64.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    """Row-major dense matrix."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"expected a 2-d array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "data", _frozen(data, np.float64))

    @property
    def shape(self):
        return self.data.shape

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    @property
    def nnz(self):
        return int(np.count_nonzero(self.data))

    def to_dense(self):
        return np.array(self.data)

    def to_csr(self):
        return CsrMatrix.from_dense(self.data)


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Canonical CSR matrix: sorted column indices, no duplicates, no stored zeros.

    Use :meth:`from_arrays`, :meth:`from_dense` or :meth:`from_scipy` rather
    than the raw constructor; they canonicalize before validating.
    """

    rows: int
    cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indptr", _frozen(self.indptr, np.int64))
        object.__setattr__(self, "indices", _frozen(self.indices, np.int64))
        object.__setattr__(self, "data", _frozen(self.data, np.float64))
        self._validate()

    def _validate(self):
        m, n = self.rows, self.cols
        ptr, idx, val = self.indptr, self.indices, self.data
        if m < 0 or n < 0:
            raise ValueError("negative dimensions")
        if ptr.shape != (m + 1,) or ptr[0] != 0:
            raise ValueError("row_ptr must have length rows+1 and start at 0")
        if np.any(np.diff(ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing")
        if ptr[-1] != idx.size or idx.size != val.size:
            raise ValueError("row_ptr[-1] must equal the number of stored entries")
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError("column index out of range")
        if not np.all(np.isfinite(val)):
            raise ValueError("matrix entries must be finite")
        if np.any(val == 0.0):
            raise ValueError("explicit zeros are not allowed in canonical CSR")
        # strictly increasing within each row
        d = np.diff(idx)
        row_start = np.zeros(idx.size, dtype=bool)
        row_start[ptr[:-1][ptr[:-1] < idx.size]] = True
        if np.any((d <= 0) & ~row_start[1:]):
            raise ValueError("column indices must be strictly increasing within a row")

    @classmethod
    def from_scipy(cls, mat):
        mat = sp.csr_matrix(mat, dtype=np.float64, copy=True)
        mat.sum_duplicates()
        mat.eliminate_zeros()
        mat.sort_indices()
        return cls(mat.shape[0], mat.shape[1], mat.indptr, mat.indices, mat.data)

    @classmethod
    def from_dense(cls, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        return cls.from_scipy(sp.csr_matrix(arr))

    @classmethod
    def from_arrays(cls, shape, indptr, indices, data):
        """Build from raw CSR arrays, summing duplicates and dropping zeros."""
        mat = sp.csr_matrix(
            (np.asarray(data, dtype=np.float64), np.asarray(indices), np.asarray(indptr)),
            shape=shape,
        )
        return cls.from_scipy(mat)

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def nnz(self):
        return int(self.indptr[-1])

    def row(self, i):
        """Column indices and values of row ``i`` (read-only views)."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def to_scipy(self):
        return sp.csr_matrix(
            (self.data.copy(), self.indices.copy(), self.indptr.copy()), shape=self.shape
        )

    def to_dense(self):
        return self.to_scipy().toarray()

    def to_csr(self):
        return self

    def transpose(self):
        """CSR storage of the transpose, i.e. the CSC arrays of this matrix."""
        return CsrMatrix.from_scipy(self.to_scipy().T)


Matrix = DenseMatrix | CsrMatrix


def as_matrix(A):
    """Wrap a numpy array, scipy sparse matrix or existing container."""
    if isinstance(A, (DenseMatrix, CsrMatrix)):
        return A
    if sp.issparse(A):
        return CsrMatrix.from_scipy(A)
    return DenseMatrix(np.asarray(A, dtype=np.float64))


def as_vector(v, length=None, name="vector"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} entries must be finite")
    return v


def to_dense(A):
    return as_matrix(A).to_dense()


def row_sq_norms(A, allow_zero_rows=False):
    """Squared Euclidean norm of every row.

    Raises ``ValueError`` on an all-zero row unless ``allow_zero_rows``; a
    zero row has zero sampling probability and zero Gram column.
    """
    A = as_matrix(A)
    if isinstance(A, DenseMatrix):
        out = np.einsum("ij,ij->i", A.data, A.data)
    else:
        out = _kernels.csr_row_sq_norms(A.indptr, A.data)
    if not allow_zero_rows and np.any(out == 0.0):
        bad = int(np.flatnonzero(out == 0.0)[0])
        raise ValueError(f"row {bad} is identically zero")
    return out


def col_sq_norms(A, allow_zero_cols=False):
    A = as_matrix(A)
    if isinstance(A, DenseMatrix):
        out = np.einsum("ij,ij->j", A.data, A.data)
    else:
        out = np.zeros(A.cols)
        np.add.at(out, A.indices, A.data * A.data)
    if not allow_zero_cols and np.any(out == 0.0):
        bad = int(np.flatnonzero(out == 0.0)[0])
        raise ValueError(f"column {bad} is identically zero")
    return out


def frobenius_sq(A):
    A = as_matrix(A)
    return float(np.dot(A.data.ravel(), A.data.ravel()))


def matvec(A, x):
    A = as_matrix(A)
    x = as_vector(x, A.cols, "x")
    if isinstance(A, DenseMatrix):
        return A.data @ x
    return _kernels.csr_matvec(A.indptr, A.indices, A.data, x, A.rows)


def rmatvec(A, y):
    """Transpose product ``A.T @ y``."""
    A = as_matrix(A)
    y = as_vector(y, A.rows, "y")
    if isinstance(A, DenseMatrix):
        return A.data.T @ y
    return A.to_scipy().T @ y


class GramWorkspace:
    """Scratch buffers and column adjacency for computing ``A @ A[i].T``.

    Every Gram column is produced by one routine that sums row products in
    ascending column order, so the stored Gram matrix and the on-the-fly
    columns agree bit for bit.
    """

    def __init__(self, A):
        csr = as_matrix(A).to_csr()
        self.A = csr
        At = csr.transpose()
        self.cptr, self.cidx, self.cval = At.indptr, At.indices, At.data
        m = csr.rows
        self.mark = np.full(m, -1, dtype=np.int64)
        self.acc = np.zeros(m)
        self.out_idx = np.empty(m, dtype=np.int64)
        self.out_val = np.empty(m)

    def column(self, i):
        A = self.A
        cnt = _kernels.gram_col(
            A.indptr, A.indices, A.data, self.cptr, self.cidx, self.cval, i,
            self.mark, self.acc, self.out_idx, self.out_val,
        )
        return self.out_idx[:cnt].copy(), self.out_val[:cnt].copy()


def gram_column(A, i, sparse=False):
    """The vector ``A @ A[i, :].T`` of row inner products with row ``i``.

    With ``sparse=True`` return ``(indices, values)`` over the rows whose
    support overlaps row ``i``; otherwise a dense length-m vector.
    """
    A = as_matrix(A)
    if not 0 <= i < A.rows:
        raise IndexError(f"row index {i} out of range for {A.rows} rows")
    idx, val = GramWorkspace(A).column(i)
    if sparse:
        return idx, val
    out = np.zeros(A.rows)
    out[idx] = val
    return out


def gram_matrix(A):
    """``A @ A.T`` as a CSR matrix whose pattern is every overlapping row pair.

    Entries that cancel to exactly zero are kept, so the stored pattern is the
    structural overlap pattern regardless of values.  The result is symmetric
    bit for bit.
    """
    csr = as_matrix(A).to_csr()
    ws = GramWorkspace(csr)
    ptr, idx, val = _kernels.build_gram(
        csr.indptr, csr.indices, csr.data, ws.cptr, ws.cidx, ws.cval, csr.rows
    )
    return GramMatrix(csr.rows, ptr, idx, val)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Symmetric m-by-m Gram matrix in CSR layout (row i == column i)."""

    size: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        for name, dt in (("indptr", np.int64), ("indices", np.int64), ("data", np.float64)):
            object.__setattr__(self, name, _frozen(getattr(self, name), dt))

    @property
    def nnz(self):
        return int(self.indptr[-1])

    def column(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def to_dense(self):
        out = np.zeros((self.size, self.size))
        rows = np.repeat(np.arange(self.size), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out
