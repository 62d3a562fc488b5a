import numpy as np
import pytest
import scipy.linalg

from rkas.oracle import analyze, nullspace_residual, range_projector_residual, rse

from .conftest import rank_deficient


def test_identity():
    gt = analyze(np.eye(2), [5.0, 7.0])
    np.testing.assert_allclose(gt.x_star, [5.0, 7.0])
    np.testing.assert_allclose(gt.e, [0.0, 0.0], atol=1e-15)
    assert gt.sigma_min == pytest.approx(1.0) and gt.sigma_max == pytest.approx(1.0)
    assert gt.rank == 2


def test_tall_fixture():
    # normal equations [[2,1],[1,2]] x = [2,2]  ->  x = [2/3, 2/3]
    gt = analyze(np.array([[1.0, 0], [0, 1], [1, 1]]), np.ones(3))
    np.testing.assert_allclose(gt.x_star, [2 / 3, 2 / 3], rtol=1e-14)
    np.testing.assert_allclose(gt.e, [-1 / 3, -1 / 3, 1 / 3], rtol=1e-14)
    assert gt.sigma_min == pytest.approx(1.0, rel=1e-14)
    assert gt.sigma_max == pytest.approx(np.sqrt(3.0), rel=1e-14)
    assert gt.frob_sq == pytest.approx(4.0)
    assert (gt.a_min_sq, gt.a_max_sq) == (1.0, 2.0)


def test_rank_one_minimum_norm():
    # normal equations 4(x1+x2) = 2 on the line; minimum norm point is [1/2, 1/2]
    gt = analyze(np.array([[1.0, 1.0], [1.0, 1.0]]), [2.0, 0.0])
    np.testing.assert_allclose(gt.x_star, [0.5, 0.5], rtol=1e-14)
    np.testing.assert_allclose(gt.e, [-1.0, 1.0], rtol=1e-14)
    assert gt.rank == 1
    assert gt.sigma_min == pytest.approx(2.0)


@pytest.mark.parametrize("consistent", [True, False])
@pytest.mark.parametrize("rank", [8, 5])
def test_four_table_cases(consistent, rank):
    """Consistent/inconsistent x full/deficient column rank."""
    rng = np.random.default_rng(rank + 10 * consistent)
    A = rank_deficient(12, 8, rank, seed=rank)
    b = A @ rng.standard_normal(8)
    if not consistent:
        b = b + nullspace_residual(A, rng.standard_normal(12))
    gt = analyze(A, b)
    assert gt.rank == rank
    fro, nb = np.linalg.norm(A), np.linalg.norm(b)
    assert np.linalg.norm(A.T @ (A @ gt.x_star - b)) <= 1e-10 * fro * nb
    assert np.linalg.norm(range_projector_residual(A, gt.x_star)) <= 1e-10 * np.linalg.norm(gt.x_star)
    assert np.linalg.norm(A.T @ gt.e) <= 1e-10 * fro * nb
    if consistent:
        assert np.linalg.norm(gt.e) <= 1e-10 * nb
    else:
        assert np.linalg.norm(gt.e) > 1e-3
    # independent route: rank-revealing QR least squares (gelsy)
    x_qr = scipy.linalg.lstsq(A, b, lapack_driver="gelsy")[0]
    np.testing.assert_allclose(gt.x_star, x_qr, rtol=1e-8, atol=1e-10)


def test_row_permutation_invariance():
    rng = np.random.default_rng(0)
    A = rank_deficient(15, 6, 4, seed=2)
    b = rng.standard_normal(15)
    perm = rng.permutation(15)
    g1, g2 = analyze(A, b), analyze(A[perm], b[perm])
    np.testing.assert_allclose(g1.x_star, g2.x_star, rtol=1e-8)
    assert g1.sigma_min == pytest.approx(g2.sigma_min, rel=1e-8)
    assert g1.sigma_max == pytest.approx(g2.sigma_max, rel=1e-8)


def test_sigma_min_is_smallest_nonzero():
    A = rank_deficient(10, 6, 3, seed=1)
    gt = analyze(A, np.ones(10))
    assert gt.sigma_min == pytest.approx(np.linalg.svd(A, compute_uv=False)[2], rel=1e-10)
    assert gt.sigma_min_all < 1e-10
    assert gt.cond_all > 1e10 and gt.cond < 1e3


class TestNullspaceResidual:
    def test_full_row_rank_gives_zero(self):
        np.testing.assert_allclose(nullspace_residual(np.eye(4), [1.0, 2, 3, 4]), 0.0, atol=1e-15)

    def test_hand_projection(self):
        np.testing.assert_allclose(nullspace_residual(np.ones((2, 1)), [1.0, 0.0]), [0.5, -0.5])

    def test_orthogonal_to_columns(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((50, 10))
        g = rng.standard_normal(50)
        r = nullspace_residual(A, g)
        assert np.linalg.norm(A.T @ r) <= 1e-10 * np.linalg.norm(A) * np.linalg.norm(g)


class TestRse:
    def setup_method(self):
        self.gt = analyze(np.array([[1.0, 0], [0, 1], [1, 1]]), np.ones(3))

    def test_values(self):
        assert rse(self.gt.x_star, self.gt) == 0.0
        assert rse(np.zeros(2), self.gt) == pytest.approx(1.0)
        assert rse(1.001 * self.gt.x_star, self.gt) == pytest.approx(1e-6, rel=1e-9)

    def test_zero_solution_rejected(self):
        gt = analyze(np.array([[1.0], [1.0]]), [1.0, -1.0])
        with pytest.raises(ValueError):
            rse(np.ones(1), gt)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        analyze(np.eye(3), [1.0, 2.0])
