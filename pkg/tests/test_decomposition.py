from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import SPACES, random_function
from littlecarleson.decomposition import (SIZE_FLOOR, amplified_upper, build_partition, carleson_upper,
                                          excluded_members, good_bad_split, good_part_bound_check,
                                          select_wstar_x, size_floor, whitney_ok)
from littlecarleson.dyadic import (ROOT, SmoothingInterval, cell_midpoint, grandsons, middle_half_contains,
                                   smoothing_extensions)
from littlecarleson.errors import CapacityError, ContractError
from littlecarleson.fourier import zero_function
from littlecarleson.values import Space

N = 1024


@pytest.mark.parametrize("n,expected", [(1, F(1, 4)), (3, F(1, 8)), (2.5, F(1, 8)), (16, F(1, 64)),
                                        (31.9, F(1, 64)), (32, F(1, 128))])
def test_size_floor(n, expected):
    assert size_floor(n) == expected


def make_partition(seed, k=5, n=16, factor=1.3, space=SPACES[0], wstar=ROOT):
    f = random_function(seed, N, space)
    top = amplified_upper(f, wstar, k)
    return f, build_partition(f, wstar, k, factor * top, n)


@pytest.mark.parametrize("seed,k,factor", [(0, 0, 1.0), (1, 5, 1.3), (2, 40, 2.0), (3, 11, 1.05)])
def test_partition_conditions_brute_force(seed, k, factor):
    f, part = make_partition(seed, k, factor=factor)
    lam = part.lam
    assert part.covers_parent()
    gs = grandsons(part.parent)
    for w, why in zip(part.members, part.accepted_by):
        assert carleson_upper(f, w, k)[1] <= lam
        assert any(g.contains(w) for g in gs)
        if why == SIZE_FLOOR:
            assert w.length <= part.floor
        else:
            assert any(carleson_upper(f, s, k)[1] > lam for s in w.sons())
        if w not in gs:
            dad = w.father()
            assert dad.length > part.floor
            assert all(carleson_upper(f, s, k)[1] <= lam for s in dad.sons())


def test_zero_function_tiles_at_the_floor():
    f = zero_function(Space(), N)
    part = build_partition(f, ROOT, 3, 1.0, 16)
    assert all(w.length == size_floor(16) for w in part.members)
    assert len(part) == ROOT.length / size_floor(16)


def test_lambda_below_amplified_average_is_refused():
    f = random_function(5, N)
    top = amplified_upper(f, ROOT, 2)
    with pytest.raises(ContractError):
        build_partition(f, ROOT, 2, 0.5 * top, 16)


def test_floor_below_two_cells_is_refused():
    f = random_function(6, 256)
    with pytest.raises(CapacityError):
        build_partition(f, ROOT, 2, 1e9, 64)


def select_reference(part, x):
    """Longest extension (ties: leftmost) with x in its open middle half, straight from the definition."""
    cands = []
    for w in part.members:
        for e in smoothing_extensions(w):
            if part.parent.contains(e) and middle_half_contains(e, x):
                cands.append(e)
    if not cands:
        return None
    return min(cands, key=lambda e: (-e.length, e.lo))


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_selection_matches_definition(seed):
    _, part = make_partition(seed, k=9, factor=1.1)
    for cell in range(0, N, 7):
        x = cell_midpoint(cell, N)
        ref = select_reference(part, x)
        if ref is None:
            with pytest.raises(ContractError):
                select_wstar_x(part, x)
        else:
            assert select_wstar_x(part, x) == ref


def test_selection_inside_a_smaller_parent():
    ws = SmoothingInterval(1, 0)
    _, part = make_partition(8, k=4, factor=1.2, wstar=ws)
    x = cell_midpoint(600, N)
    sel = select_wstar_x(part, x)
    assert ws.contains(sel) and middle_half_contains(sel, x)


def test_excluded_and_whitney_brute_force():
    _, part = make_partition(9, k=3, factor=1.1)
    x = cell_midpoint(300, N)
    sel = select_wstar_x(part, x)
    out, partial = excluded_members(part, sel)
    for i, w in enumerate(part.members):
        disjoint = w.hi <= sel.lo or w.lo >= sel.hi
        inside = sel.lo <= w.lo and w.hi <= sel.hi
        assert (i in out) == disjoint
        assert (i in partial) == (not disjoint and not inside)
    want = all(max(w.lo - x, x - w.hi, 0) >= w.length / 2 for w in (part.members[i] for i in out))
    assert whitney_ok(part, out, x) == want


@pytest.mark.parametrize("si", range(3))
def test_good_bad_split(si):
    f, part = make_partition(10 + si, k=6, factor=1.2, space=SPACES[si])
    split = good_bad_split(f, part)
    for (a, b), mean in zip(split.bounds, split.member_means):
        assert np.allclose(split.bad.values[a:b].mean(axis=0), 0, atol=1e-12)
        assert np.allclose(split.good.values[a:b], mean)
    chk = good_part_bound_check(f, part, split)
    # a zero-frequency member mean is a Carleson-average term, so it is at most gamma times C
    assert chk["K_integer"] <= chk["gamma"] + 1e-9


@given(st.integers(0, 10**6))
def test_partition_members_are_disjoint(seed):
    _, part = make_partition(seed % 50, k=seed % 30, factor=1.0 + (seed % 7) / 10)
    ms = sorted(part.members, key=lambda w: w.lo)
    assert all(a.hi == b.lo for a, b in zip(ms, ms[1:]))
