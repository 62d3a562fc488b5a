import numpy as np
import pytest

from rkas.linalg import CsrMatrix
from rkas.problems import LinearSystem, make_rhs


@pytest.fixture
def tall3x2():
    """[[1,0],[0,1],[1,1]] with b = ones: inconsistent, x* = [2/3, 2/3]."""
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return LinearSystem(A, np.ones(3))


def random_sparse(m, n, density, seed):
    """Random CSR with no empty rows or columns."""
    rng = np.random.default_rng(seed)
    mask = rng.random((m, n)) < density
    # one guaranteed entry per row and per column
    k = max(m, n)
    mask[np.arange(k) % m, rng.permutation(k) % n] = True
    vals = np.where(mask, rng.standard_normal((m, n)), 0.0)
    return CsrMatrix.from_dense(vals)


def rank_deficient(m, n, rank, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))


def inconsistent_system(A, seed):
    b, x, r = make_rhs(A, seed=seed, consistent=False)
    return LinearSystem(A, b, planted_x=x, planted_r=r)
