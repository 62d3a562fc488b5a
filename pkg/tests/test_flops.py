import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rkas.flops import (
    Tally,
    cost_table,
    instrumented_rek,
    instrumented_rk,
    instrumented_rkas,
    profile,
    rek_flops,
    rk_flops,
    rkas_flops_stored,
    rkas_flops_unstored,
)
from rkas.linalg import CsrMatrix
from rkas.problems import LinearSystem
from rkas.solvers import init_state, rek_step, rk_step, rkas_step

from .conftest import random_sparse

TALL = np.array([[1.0, 0], [0, 1], [1, 1]])


class TestProfile:
    def test_identity(self):
        p = profile(np.eye(5))
        assert p.t_total == 5
        assert p.s == {(i, i): 1 for i in range(5)}
        assert list(p.col_nnz) == [1] * 5

    def test_tall_fixture(self):
        p = profile(TALL)
        assert list(p.t_sizes) == [2, 2, 3] and p.t_total == 7
        assert p.overlap(0, 2) == p.overlap(2, 0) == 1
        assert p.overlap(2, 2) == 2 and p.overlap(0, 1) == 0
        assert list(p.col_nnz) == [2, 2]

    def test_dense(self):
        p = profile(np.ones((4, 3)))
        assert p.t_total == 16
        assert all(v == 3 for v in p.s.values())
        assert list(p.col_nnz) == [4, 4, 4]


class TestFormulas:
    @pytest.mark.parametrize("m", [1, 4, 9])
    def test_identity(self, m):
        p = profile(np.eye(m))
        assert rek_flops(p).init == 2 * m and rek_flops(p).step(0, 0) == 10
        assert rkas_flops_stored(p).init == 3 * m and rkas_flops_stored(p).step(0) == 6
        assert rkas_flops_unstored(p).init == m and rkas_flops_unstored(p).step(0) == 8

    def test_tall_fixture(self):
        p = profile(TALL)
        assert rek_flops(p).init == 11
        assert rek_flops(p).step(2, 0) == 18
        assert rkas_flops_stored(p).init == 21
        assert rkas_flops_stored(p).step(2) == 16
        assert rkas_flops_unstored(p).init == 5
        assert rkas_flops_unstored(p).step(2) == 26

    def test_dense_closed_forms(self):
        m, n = 5, 3
        p = profile(np.arange(1.0, 16.0).reshape(m, n))
        assert rek_flops(p).init == 2 * m * n + 2 * m * n - m - n
        assert rkas_flops_stored(p).step(1) == 2 * n + 4 * m
        assert rkas_flops_unstored(p).step(1) == 2 * n + 5 * m + 2 * m * n - 1


def _check_all(A, seed, steps=40):
    rng = np.random.default_rng(seed)
    m, n = A.shape
    b = rng.standard_normal(m)
    p = profile(A)
    assert int(p.t_sizes.sum()) == p.t_total
    rows = rng.integers(0, m, steps)
    cols = rng.integers(0, n, steps)

    for store, model in ((True, rkas_flops_stored(p)), (False, rkas_flops_unstored(p))):
        led, _, _ = instrumented_rkas(A, b, rows, store_gram=store)
        assert led.init_flops == model.init
        assert led.steps == [model.step(int(i)) for i in rows]
        table = cost_table(A, "rkas", store_gram=store)
        assert table.init == model.init
        assert list(table.row_cost) == [model.step(i) for i in range(m)]

    model = rek_flops(p)
    led, _, _ = instrumented_rek(A, b, rows, cols)
    assert led.init_flops == model.init
    assert led.steps == [model.step(int(i), int(j)) for i, j in zip(rows, cols)]
    table = cost_table(A, "rek")
    assert table.init == model.init
    assert [table.row_cost[i] + table.col_cost[j] for i, j in zip(rows, cols)] == led.steps

    model = rk_flops(p)
    led, _ = instrumented_rk(A, b, rows, lam=0.7)
    assert led.init_flops == model.init
    assert led.steps == [model.step(int(i)) for i in rows]
    assert cost_table(A, "rk").init == model.init


@pytest.mark.parametrize("A", [np.eye(4), TALL, np.ones((3, 5)), np.array([[2.0, 0, 1], [0, 3, 0]])])
def test_fixtures(A):
    _check_all(CsrMatrix.from_dense(A), 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 25), st.integers(1, 25), st.floats(0.05, 1.0))
def test_instrumented_equals_formulas(seed, m, n, density):
    _check_all(random_sparse(m, n, density, seed), seed)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 15), st.integers(1, 15))
def test_profile_symmetry(seed, m, n):
    p = profile(random_sparse(m, n, 0.3, seed))
    for (i, ell), c in p.s.items():
        assert i <= ell and c >= 1
        assert p.overlap(ell, i) == c
    for i in range(m):
        assert p.overlap(i, i) == len(random_sparse(m, n, 0.3, seed).row(i)[0])


def test_instrumented_iterates_match_fast_solvers():
    A = random_sparse(20, 8, 0.3, 5)
    b = np.random.default_rng(1).standard_normal(20)
    sys_ = LinearSystem(A, b)
    rng = np.random.default_rng(2)
    rows, cols = rng.integers(0, 20, 50), rng.integers(0, 8, 50)

    _, x_slow, r_slow = instrumented_rkas(A, b, rows)
    st_ = init_state(sys_, "rkas")
    for i in rows:
        rkas_step(st_, sys_, int(i))
    np.testing.assert_allclose(st_.x, x_slow, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(st_.r, r_slow, rtol=1e-10, atol=1e-12)
    assert st_.flops.iter_flops == sum(rkas_flops_stored(profile(A)).step(int(i)) for i in rows)

    _, x_slow, z_slow = instrumented_rek(A, b, rows, cols)
    st_ = init_state(sys_, "rek")
    for i, j in zip(rows, cols):
        rek_step(st_, sys_, int(i), int(j))
    np.testing.assert_allclose(st_.x, x_slow, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(st_.z, z_slow, rtol=1e-10, atol=1e-12)

    _, x_slow = instrumented_rk(A, b, rows, lam=0.5)
    st_ = init_state(sys_, "rk")
    for i in rows:
        rk_step(st_, sys_, int(i), 0.5)
    np.testing.assert_allclose(st_.x, x_slow, rtol=1e-10, atol=1e-12)


def test_ledger_monotone():
    A = random_sparse(10, 6, 0.4, 3)
    sys_ = LinearSystem(A, np.ones(10))
    st_ = init_state(sys_, "rkas", store_gram=False)
    seen = [st_.flops.total]
    for i in st_.sampler_rows.draw_many(30):
        rkas_step(st_, sys_, int(i), store_gram=False)
        seen.append(st_.flops.total)
    assert seen == sorted(seen)


def test_tally_dot_convention():
    t = Tally()
    assert t.dot([(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]) == 44.0
    assert t.count == 5  # 2s - 1
    with pytest.raises(ValueError):
        t.dot([])
