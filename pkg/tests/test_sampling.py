import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from rkas.sampling import DiscreteSampler, alias_table, build, spawn_seeds


def test_two_equal_weights_uniform():
    s = build([1.0, 1.0], seed=9)
    np.testing.assert_allclose(s.alias_probabilities(), [0.5, 0.5])


def test_equal_row_norms_uniform():
    s = build([25.0, 25.0], seed=1)
    np.testing.assert_allclose(s.probabilities, [0.5, 0.5])
    np.testing.assert_allclose(s.alias_probabilities(), [0.5, 0.5])


def test_law_of_large_numbers_1_3():
    draws = build([1.0, 3.0], seed=2024).draw_many(10**6)
    assert abs(draws.mean() - 0.75) <= 0.005


def test_single_weight_always_zero():
    s = build([4.2], seed=3)
    assert set(s.draw_many(1000).tolist()) == {0}
    assert s.draw() == 0


def test_fixed_seed_reproducible():
    a = build([1, 1, 1, 1], seed=42).draw_many(500)
    b = build([1, 1, 1, 1], seed=42).draw_many(500)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, build([1, 1, 1, 1], seed=43).draw_many(500))


def test_chi_square_goodness_of_fit():
    w = np.array([1.0, 2.0, 3.0, 4.0])
    draws = build(w, seed=7).draw_many(10**6)
    counts = np.bincount(draws, minlength=4)
    expected = w / w.sum() * draws.size
    assert chisquare(counts, expected).pvalue > 1e-3


def test_chunking_does_not_change_stream():
    w = np.arange(1.0, 11.0)
    whole = build(w, seed=5).draw_many(1000)
    s = build(w, seed=5)
    parts = np.concatenate([s.draw_many(1), s.draw_many(333), s.draw_many(666)])
    assert np.array_equal(whole, parts)


def test_samplers_are_independent_objects():
    a1 = build([1.0, 2.0, 3.0], seed=11)
    b = build([5.0, 1.0], seed=11)
    ref = build([1.0, 2.0, 3.0], seed=11).draw_many(100)
    b.draw_many(1000)
    assert np.array_equal(a1.draw_many(100), ref)


@pytest.mark.parametrize("weights", [[0.0, 0.0], [1.0, -1.0], [], [np.nan, 1.0]])
def test_invalid_weights(weights):
    with pytest.raises(ValueError):
        DiscreteSampler(weights)


def test_zero_weight_never_drawn():
    draws = build([0.0, 1.0, 0.0, 2.0], seed=0).draw_many(20000)
    assert set(np.unique(draws).tolist()) <= {1, 3}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1e6, allow_subnormal=False), min_size=1, max_size=40)
       .filter(lambda w: sum(w) > 0))
def test_alias_table_exact_distribution(weights):
    w = np.array(weights)
    s = DiscreteSampler(w)
    np.testing.assert_allclose(s.alias_probabilities(), w / w.sum(), atol=1e-12)
    prob, alias = alias_table(w)
    assert np.all((prob >= 0) & (prob <= 1))
    assert np.all((alias >= 0) & (alias < w.size))


def test_spawned_seeds_distinct_and_deterministic():
    a = spawn_seeds(123, 50)
    assert a == spawn_seeds(123, 50)
    assert len(set(a)) == 50
