"""Ground truth by dense SVD: the pseudoinverse solution and every quantity the
convergence bounds are stated in.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, as_vector, matvec

#: Largest densified matrix (rows * cols) the oracle will factor.
MAX_DENSE_ENTRIES = 20_000 * 20_000


@dataclass(frozen=True)
class GroundTruth:
    x_star: np.ndarray
    e: np.ndarray
    sigma_min: float
    sigma_max: float
    frob_sq: float
    rank: int
    a_min_sq: float
    a_max_sq: float
    singular_values: np.ndarray
    #: smallest singular value overall, zero-level ones included
    sigma_min_all: float = 0.0

    @property
    def frob_norm(self):
        return float(np.sqrt(self.frob_sq))

    @property
    def cond(self):
        """sigma_max over the smallest nonzero singular value."""
        return self.sigma_max / self.sigma_min

    @property
    def cond_all(self):
        """sigma_max over the smallest singular value of the full spectrum."""
        return self.sigma_max / self.sigma_min_all if self.sigma_min_all > 0 else np.inf

    @property
    def x_star_sq(self):
        return float(self.x_star @ self.x_star)

    @property
    def e_sq(self):
        return float(self.e @ self.e)


def _dense(A):
    A = as_matrix(A)
    if A.rows * A.cols > MAX_DENSE_ENTRIES:
        raise ValueError(
            f"{A.rows}x{A.cols} exceeds the direct-oracle cap of {MAX_DENSE_ENTRIES} entries"
        )
    if A.rows == 0 or A.cols == 0:
        raise ValueError("matrix must be nonempty")
    return A.to_dense()


def rank_cutoff(svals, shape):
    """Singular values at or below this are treated as zero."""
    smax = svals[0] if svals.size else 0.0
    return max(shape) * np.spacing(smax)


def _thin_svd(dense):
    U, s, Vt = np.linalg.svd(dense, full_matrices=False)
    rank = int(np.sum(s > rank_cutoff(s, dense.shape)))
    return U, s, Vt, rank


def analyze(A, b):
    """Pseudoinverse solution, residual and spectral data of ``Ax = b``."""
    dense = _dense(A)
    m, n = dense.shape
    b = as_vector(b, m, "b")
    U, s, Vt, rank = _thin_svd(dense)
    if rank == 0:
        raise ValueError("matrix is zero")
    Ur, sr, Vr = U[:, :rank], s[:rank], Vt[:rank].T
    coef = Ur.T @ b
    # b orthogonal to Range(A) up to rounding: the exact solution is zero
    if np.linalg.norm(coef) <= max(m, n) * np.finfo(float).eps * np.linalg.norm(b):
        coef = np.zeros_like(coef)
    x_star = Vr @ (coef / sr)
    e = dense @ x_star - b
    row_sq = np.einsum("ij,ij->i", dense, dense)
    return GroundTruth(
        x_star=x_star,
        e=e,
        sigma_min=float(sr[-1]),
        sigma_max=float(s[0]),
        frob_sq=float(row_sq.sum()),
        rank=rank,
        a_min_sq=float(row_sq.min()),
        a_max_sq=float(row_sq.max()),
        singular_values=s,
        sigma_min_all=float(s[-1]),
    )


def nullspace_residual(A, g):
    """Component of ``g`` orthogonal to Range(A), i.e. lying in Null(A^T)."""
    dense = _dense(A)
    g = as_vector(g, dense.shape[0], "g")
    U, _, _, rank = _thin_svd(dense)
    Ur = U[:, :rank]
    r = g - Ur @ (Ur.T @ g)
    # one re-orthogonalization pass keeps ||A^T r|| at rounding level
    return r - Ur @ (Ur.T @ r)


def range_projector_residual(A, x):
    """``(I - pinv(A) A) x``: the part of ``x`` outside Range(A^T)."""
    dense = _dense(A)
    _, _, Vt, rank = _thin_svd(dense)
    Vr = Vt[:rank].T
    return x - Vr @ (Vr.T @ x)


def rse(x, gt):
    """Relative solution error ``||x - x*||^2 / ||x*||^2``."""
    denom = gt.x_star_sq
    if denom == 0.0:
        raise ValueError("pseudoinverse solution is zero; relative error undefined")
    d = np.asarray(x, dtype=np.float64) - gt.x_star
    return float(d @ d) / denom


def residual_err_sq(A, x, gt):
    """``||Ax - A x*||^2``, the quantity the adaptive method contracts."""
    Ax_star = matvec(A, gt.x_star)
    d = matvec(A, x) - Ax_star
    return float(d @ d)
