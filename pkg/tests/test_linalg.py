import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rkas.linalg import (
    CsrMatrix,
    DenseMatrix,
    as_matrix,
    gram_column,
    gram_matrix,
    matvec,
    rmatvec,
    row_sq_norms,
)
from rkas.oracle import analyze

from .conftest import random_sparse

FIXTURE = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


def naive_row_sq(dense):
    out = []
    for row in dense:
        s = 0.0
        for v in row:
            s += v * v
        out.append(s)
    return np.array(out)


class TestContainers:
    def test_dense_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            DenseMatrix(np.array([[1.0, np.nan]]))
        with pytest.raises(ValueError):
            CsrMatrix.from_dense(np.array([[np.inf, 1.0]]))

    def test_csr_canonicalizes(self):
        A = CsrMatrix.from_arrays((2, 3), [0, 3, 4], [2, 0, 2, 1], [1.0, 2.0, 3.0, 0.0])
        # duplicate (0, 2) summed, stored zero in row 1 dropped
        assert A.indptr.tolist() == [0, 2, 2]
        assert A.indices.tolist() == [0, 2]
        assert A.data.tolist() == [2.0, 4.0]

    def test_csr_raw_validation(self):
        with pytest.raises(ValueError, match="increasing"):
            CsrMatrix(1, 3, [0, 2], [2, 0], [1.0, 1.0])
        with pytest.raises(ValueError, match="zeros"):
            CsrMatrix(1, 3, [0, 1], [0], [0.0])
        with pytest.raises(ValueError, match="out of range"):
            CsrMatrix(1, 3, [0, 1], [3], [1.0])
        with pytest.raises(ValueError):
            CsrMatrix(2, 3, [1, 1, 1], [0], [1.0])

    def test_immutable(self):
        A = CsrMatrix.from_dense(FIXTURE)
        with pytest.raises(ValueError):
            A.data[0] = 5.0

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
                  elements=st.floats(-1e6, 1e6, allow_subnormal=False)))
    def test_dense_csr_roundtrip_bit_exact(self, dense):
        back = CsrMatrix.from_dense(dense).to_dense()
        assert np.array_equal(back, dense + 0.0)


class TestRowSqNorms:
    def test_small(self):
        assert row_sq_norms(np.array([[3.0, 4.0], [0.0, 5.0]])).tolist() == [25.0, 25.0]
        assert row_sq_norms(np.eye(3)).tolist() == [1.0, 1.0, 1.0]

    def test_sparse_matches_naive_loop(self):
        A = random_sparse(10, 8, 0.3, seed=4)
        got = row_sq_norms(A)
        np.testing.assert_allclose(got, naive_row_sq(A.to_dense()), rtol=1e-15)
        assert got.sum() == pytest.approx(np.sum(A.to_dense() ** 2), rel=1e-14)

    def test_zero_row_rejected(self):
        with pytest.raises(ValueError, match="row 1"):
            row_sq_norms(np.array([[1.0, 0.0], [0.0, 0.0]]))


class TestMatvec:
    def test_identity(self):
        assert matvec(np.eye(2), [5.0, 7.0]).tolist() == [5.0, 7.0]

    def test_fixture(self):
        got = matvec(CsrMatrix.from_dense(FIXTURE), [2 / 3, 2 / 3])
        np.testing.assert_allclose(got, [2 / 3, 2 / 3, 4 / 3], rtol=1e-15)

    def test_zero_matrix(self):
        assert matvec(np.zeros((3, 2)), [1.0, -4.0]).tolist() == [0.0, 0.0, 0.0]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            matvec(np.eye(2), [1.0, 2.0, 3.0])

    def test_sparse_and_transpose(self):
        A = random_sparse(12, 7, 0.3, seed=1)
        x = np.arange(7.0)
        y = np.arange(12.0)
        np.testing.assert_allclose(matvec(A, x), A.to_dense() @ x, rtol=1e-13)
        np.testing.assert_allclose(rmatvec(A, y), A.to_dense().T @ y, rtol=1e-13)


class TestGram:
    def test_gram_column_small(self):
        assert gram_column(np.eye(2), 0).tolist() == [1.0, 0.0]
        assert gram_column(FIXTURE, 2).tolist() == [1.0, 1.0, 2.0]

    def test_gram_column_sparse_matches_dense(self):
        A = random_sparse(15, 9, 0.25, seed=7)
        dense = A.to_dense()
        for i in range(A.rows):
            np.testing.assert_allclose(gram_column(A, i), dense @ dense[i], rtol=1e-13, atol=1e-14)
            idx, _ = gram_column(A, i, sparse=True)
            assert np.all(np.diff(idx) > 0)

    def test_gram_column_out_of_range(self):
        with pytest.raises(IndexError):
            gram_column(FIXTURE, 3)

    def test_gram_matrix_small(self):
        assert np.array_equal(gram_matrix(np.eye(4)).to_dense(), np.eye(4))
        expected = [[1, 0, 1], [0, 1, 1], [1, 1, 2]]
        assert gram_matrix(FIXTURE).to_dense().tolist() == expected

    def test_gram_matrix_columns_equal_gram_column(self):
        A = np.random.default_rng(3).standard_normal((20, 6))
        B = gram_matrix(A)
        for i in range(20):
            assert np.array_equal(B.to_dense()[:, i], gram_column(A, i))

    def test_gram_matrix_exactly_symmetric(self):
        A = random_sparse(30, 12, 0.2, seed=11)
        B = gram_matrix(A).to_dense()
        assert np.array_equal(B, B.T)

    def test_pattern_is_structural_overlap(self):
        # rows 0 and 1 overlap in two columns whose products cancel
        A = np.array([[1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 0.0, 1.0]])
        B = gram_matrix(A)
        idx, val = B.column(0)
        assert idx.tolist() == [0, 1]
        assert val.tolist() == [2.0, 0.0]

    def test_positive_diagonal_and_norm_inequality(self):
        A = random_sparse(25, 10, 0.3, seed=5)
        dense = A.to_dense()
        gt = analyze(A, np.ones(25))
        row_norms = np.sqrt(row_sq_norms(A))
        for i in range(25):
            g = gram_column(A, i)
            assert g[i] > 0
            assert np.linalg.norm(g) <= gt.sigma_max * row_norms[i] * (1 + 1e-12)
        assert as_matrix(dense).shape == (25, 10)
