from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from littlecarleson.dyadic import (NU_MAX, ROOT, TORUS, DyadicInterval, SmoothingInterval, cell_midpoint,
                                   cell_range, dyadic_containing, freq_index, grandsons, middle_half_contains,
                                   midpoint_cell, smoothing_extensions, smoothing_from_interval)
from littlecarleson.errors import AlignmentError, CapacityError

dyadics = st.integers(0, 10).flatmap(lambda nu: st.builds(DyadicInterval, st.just(nu),
                                                          st.integers(-2**nu, 2**nu - 1)))


@given(dyadics)
def test_sons_tile_father(w):
    a, b = w.sons()
    assert a.lo == w.lo and a.hi == b.lo and b.hi == w.hi
    assert a.father() == w and b.father() == w


@given(dyadics)
def test_extensions_contain_and_double(w):
    for ext in smoothing_extensions(w):
        assert ext.contains(w)
        assert ext.length == 2 * w.length
    left, right = smoothing_extensions(w)
    assert left.hi == w.hi and right.lo == w.lo


@given(st.integers(0, 8).flatmap(lambda nu: st.builds(SmoothingInterval, st.just(nu),
                                                      st.integers(-2**nu, 2**nu - 2))))
def test_grandsons_tile_smoothing_interval(ws):
    g = grandsons(ws)
    assert len(g) == 4
    assert g[0].lo == ws.lo and g[-1].hi == ws.hi
    assert all(g[i].hi == g[i + 1].lo for i in range(3))
    assert all(x.length * 4 == ws.length for x in g)
    assert smoothing_from_interval(ws.as_interval()) == ws


def test_root_is_minus_two_to_two():
    assert (ROOT.lo, ROOT.hi) == (-2, 2)
    assert ROOT.is_root
    assert [(g.lo, g.hi) for g in grandsons(ROOT)] == [(-2, -1), (-1, 0), (0, 1), (1, 2)]


def test_middle_half_is_open():
    w = DyadicInterval(0, 0)
    assert middle_half_contains(w, F(1, 2))
    assert not middle_half_contains(w, F(1, 4))
    assert not middle_half_contains(w, F(3, 4))
    assert middle_half_contains(w, F(1, 4) + F(1, 10**9))


@pytest.mark.parametrize("k,w,expected", [(5, DyadicInterval(1, 0), 2), (7, SmoothingInterval(0, 0), 3),
                                          (16, ROOT, 16), (3, DyadicInterval(2, 1), 0)])
def test_freq_index(k, w, expected):
    assert freq_index(k, w) == expected


def test_capacity_limits():
    with pytest.raises(CapacityError):
        DyadicInterval(NU_MAX + 1, 0)
    with pytest.raises(CapacityError):
        SmoothingInterval(NU_MAX, 0)


def test_cell_range_and_midpoints():
    assert cell_range(TORUS, 16) == (6, 10)
    assert cell_range(ROOT, 16) == (0, 16)
    with pytest.raises(AlignmentError):
        cell_range(DyadicInterval(4, 0), 16)
    for i in range(16):
        assert midpoint_cell(cell_midpoint(i, 16), 16) == i
        assert midpoint_cell(float(cell_midpoint(i, 16)), 16) == i
    with pytest.raises(AlignmentError):
        midpoint_cell(F(0), 16)


@given(st.fractions(-2, F(199, 100)), st.integers(-1, 12))
def test_dyadic_containing(x, nu):
    w = dyadic_containing(x, nu)
    assert w.contains_point(x) and w.nu == nu


def test_smoothing_from_misaligned_interval():
    from littlecarleson.dyadic import Interval
    with pytest.raises(AlignmentError):
        smoothing_from_interval(Interval(F(1, 8), F(5, 8)))
