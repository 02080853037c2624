import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smpsde import catalog
from smpsde.layout import Interval, MarkResolution, check_layout
from smpsde.rates import Constant, LinearCapped, RateModel


def three_state():
    # pair order (1,2) < (1,3) < (2,1) < (2,3) < (3,1) < (3,2)
    rates = {(1, 2): Constant(2.0), (1, 3): Constant(1.0), (2, 1): Constant(3.0), (3, 1): Constant(1.0)}
    return MarkResolution(RateModel(3, rates))


def test_interval_layout_example():
    res = three_state()
    assert res.interval_of(2, 1, 0.3, 0) == Interval(3.0, 3.0)
    assert res.interval_of(2, 1, 0.3, 0).hi == 6.0
    assert res.interval_of(1, 2, 5.0, 1) == Interval(0.0, 2.0)


def test_zero_rate_interval_is_empty():
    res = MarkResolution(catalog.agelinear())
    iv = res.interval_of(1, 2, 0.0, 0)
    assert iv.lo == 0.0 and iv.empty
    assert 0.0 not in iv


def test_resolve_mark_examples():
    res = three_state()
    assert res.resolve_mark(1, 0.0, 0, 2.5) == 3
    assert res.resolve_mark(1, 0.0, 0, 6.5) is None
    assert res.resolve_mark(1, 0.0, 0, 2.0) == 3  # right end of [0,2) is the left end of [2,3)
    assert res.resolve_mark(1, 0.0, 0, 1.9999999) == 2
    assert res.resolve_mark(2, 0.0, 0, 6.0) is None
    assert res.resolve_mark(2, 0.0, 0, 5.99) == 1


def test_half_open_right_endpoint():
    res = MarkResolution(catalog.agelinear())
    # Lambda_12(1.5) = [0, 1.5)
    assert res.resolve_mark(1, 1.5, 0, 1.5) is None
    assert res.resolve_mark(1, 1.5, 0, np.nextafter(1.5, 0)) == 2


def test_containment_and_strip():
    res = three_state()
    assert res.containment == (3.0, 6.0, 7.0)
    assert res.strip_height == 7.0
    assert res.offsets[(3, 1)] == 6.0


def test_overlap_lengths_examples():
    model = RateModel(2, {(1, 2): LinearCapped(1.0, 2.0), (2, 1): Constant(1.0)})
    res = MarkResolution(model)
    assert res.overlap_lengths(1, 3.0, 0, 2.5, 0)[2] == (0.0, 0.0, 2.0)
    assert res.overlap_lengths(1, 2.0, 0, 0.5, 0)[2] == (1.5, 0.0, 0.5)
    assert res.overlap_lengths(1, 0.0, 0, 0.7, 0)[2] == (0.0, 0.7, 0.0)


@pytest.mark.parametrize("name", sorted(catalog.CATALOG))
def test_check_layout_clean(name):
    audit = check_layout(MarkResolution(catalog.build(name)), 500, seed=3)
    assert audit["checks"] > 0
    assert all(audit[k] == 0 for k in ("disjoint", "length", "containment", "overlap"))


def test_check_layout_catches_understated_sup():
    model = RateModel(2, {(1, 2): Constant(2.0), (2, 1): Constant(3.0)}, [[0, 1], [3, 0]])
    audit = check_layout(MarkResolution(model), 200, seed=0)
    assert audit["disjoint"] > 0 and audit["containment"] > 0


def test_single_state_rejected():
    with pytest.raises(ValueError):
        MarkResolution(RateModel(1, {}))


@settings(max_examples=200, deadline=None)
@given(
    st.sampled_from(sorted(catalog.CATALOG)),
    st.floats(0.0, 10.0),
    st.integers(0, 6),
    st.floats(0.0, 1.0, exclude_max=True),
)
def test_resolution_agrees_with_literal_indicators(name, y, n, frac):
    res = MarkResolution(catalog.build(name))
    v = frac * res.strip_height
    for i in res.model.states:
        j = res.resolve_mark(i, y, n, v)
        assert res.g_lambda(i, y, n, v) == (0 if j is None else 1)
        assert res.h_lambda(i, y, n, v) == (0 if j is None else j - i)
        vec = res.resolve_marks(np.array([i]), y, n, np.array([v]))[0]
        assert vec == (0 if j is None else j)
