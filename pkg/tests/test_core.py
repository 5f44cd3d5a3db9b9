import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from doubletrunc import TruncatedSample, make_weighted_cdf, sup_distance, validate_sample
from doubletrunc.exceptions import (AllRowsInvalid, EmptyInput, NegativeWeight,
                                    TruncationViolation)


def test_single_valid_row():
    s = validate_sample([(5, 0, 10)])
    assert s.n == 1
    assert s.n_dropped == 0
    assert s.observations[0] == (5.0, 0.0, 10.0)


def test_u_above_x_aborts():
    with pytest.raises(TruncationViolation) as err:
        validate_sample([(1, 0, 2), (5, 6, 10)])
    assert err.value.row == 1


def test_x_above_v_aborts():
    with pytest.raises(TruncationViolation):
        validate_sample([(11, 0, 10)])


def test_missing_rows_dropped_and_counted():
    # 409 records, three without x, as in an interval-sampling registry
    rng = np.random.default_rng(3)
    u = rng.uniform(-1825, 5000, 409)
    x = u + rng.uniform(0, 1825, 409)
    rows = [(xi, ui, ui + 1825) for xi, ui in zip(x, u)]
    for i in (4, 100, 300):
        rows[i] = ("NA" if i == 4 else None if i == 100 else float("nan"), rows[i][1], rows[i][2])
    s = validate_sample(rows)
    assert s.n == 406
    assert s.n_dropped == 3


def test_all_missing_rows():
    with pytest.raises(AllRowsInvalid):
        validate_sample([(None, 0, 1), ("", 0, 1)])


def test_empty_rows():
    with pytest.raises(EmptyInput):
        validate_sample([])


def test_infinite_value_is_corruption():
    with pytest.raises(TruncationViolation):
        validate_sample([(1.0, -math.inf, 2.0)])


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(0, 10), st.floats(0, 10),
                          st.booleans()), min_size=1, max_size=30))
def test_validation_keeps_order(raw):
    rows = [(None if miss else x, x - a, x + b) for x, a, b, miss in raw]
    if all(miss for *_, miss in raw):
        with pytest.raises(AllRowsInvalid):
            validate_sample(rows)
        return
    s = validate_sample(rows)
    kept = [x for x, a, b, miss in raw if not miss]
    assert_array_equal(s.x, kept)
    assert s.n_dropped == sum(miss for *_, miss in raw)


def test_sample_arrays_are_read_only():
    s = validate_sample([(1, 0, 2)])
    with pytest.raises(ValueError):
        s.x[0] = 3.0


def test_uniform_weights():
    w = make_weighted_cdf([1, 2, 3], [1, 1, 1])
    assert w(2) == pytest.approx(2 / 3)


def test_points_sorted():
    w = make_weighted_cdf([2, 1], [0.5, 0.5])
    assert_array_equal(w.points, [1, 2])


def test_ties_merged():
    w = make_weighted_cdf([1, 1, 2], [1, 1, 2])
    assert_array_equal(w.points, [1, 2])
    assert_allclose(w.weights, [0.5, 0.5])


def test_cdf_errors():
    with pytest.raises(EmptyInput):
        make_weighted_cdf([], [])
    with pytest.raises(NegativeWeight):
        make_weighted_cdf([1, 2], [1, -1])
    with pytest.raises(EmptyInput):
        make_weighted_cdf([1, 2], [0, 0])


def test_sup_distance_examples():
    a = make_weighted_cdf([1, 2], [1, 1])
    b = make_weighted_cdf([1], [1])
    assert sup_distance(a, a, [1, 2]) == 0
    assert sup_distance(a, b, [1, 2]) == pytest.approx(0.5)
    with pytest.raises(EmptyInput):
        sup_distance(a, b, [])


cdf_inputs = st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(0, 10)), min_size=1, max_size=40).filter(
    lambda pw: sum(w for _, w in pw) > 1e-6)


@settings(max_examples=200)
@given(cdf_inputs, st.lists(st.floats(-2e3, 2e3), min_size=1, max_size=50))
def test_cdf_is_a_distribution_function(pw, grid):
    pts, wts = zip(*pw)
    w = make_weighted_cdf(pts, wts)
    assert abs(w.weights.sum() - 1) <= 1e-10
    assert np.all(np.diff(w.points) > 0)
    grid = np.sort(grid)
    vals = w(grid)
    assert np.all(np.diff(vals) >= 0)
    assert np.all((vals >= 0) & (vals <= 1))
    assert w(w.points.min() - 1.0) == 0.0
    assert w(w.points.max()) == 1.0
    assert w(w.points.max() + 1.0) == 1.0


@given(cdf_inputs, cdf_inputs, st.lists(st.floats(-2e3, 2e3), min_size=1, max_size=20))
def test_sup_distance_symmetric(pa, pb, grid):
    a = make_weighted_cdf(*zip(*pa))
    b = make_weighted_cdf(*zip(*pb))
    assert sup_distance(a, b, grid) == sup_distance(b, a, grid)
    assert sup_distance(a, a, grid) == 0


def test_take_resamples_rows():
    s = TruncatedSample.from_arrays([1, 2, 3], [0, 0, 0], [5, 5, 5])
    r = s.take([2, 2, 0])
    assert_array_equal(r.x, [3, 3, 1])
