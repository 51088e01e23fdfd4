import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import SPACES, random_function
from littlecarleson.decomposition import amplified_upper
from littlecarleson.dyadic import TORUS, SmoothingInterval, cell_midpoint
from littlecarleson.errors import ContractError
from littlecarleson.exceptional import (ExceptionalSet, c_lambda_delta, empty_set, exceptional_sets, jlevel,
                                        m_range, maximal_dyadic_blocks, pair_family, r_lambda, sigma1, sigma2,
                                        smoothing_intervals_meeting_torus, threshold, torus_hstar_profile,
                                        total_measure, union)
from littlecarleson.fourier import loglog_modular, phi_density, zero_function
from littlecarleson.operators import dyadic_maximal_profile
from littlecarleson.values import Space


@pytest.mark.parametrize("frac,j", [(1.0, 1), (0.3, 2), (0.5, 2), (0.25, 3), (1.5 * 2**-10, 10)])
def test_jlevel_examples(frac, j):
    assert jlevel(frac * 7.0, 7.0) == j


@given(st.floats(1e-12, 1.0), st.floats(1e-3, 1e6))
def test_jlevel_defining_inequality(frac, lam):
    c = frac * lam
    j = jlevel(c, lam)
    assert j >= 1 and math.ldexp(lam, -j) < c <= math.ldexp(lam, 1 - j)


def test_jlevel_rejects_degenerate_inputs():
    with pytest.raises(ContractError):
        jlevel(0.0, 1.0)
    with pytest.raises(ContractError):
        jlevel(2.0, 1.0)


def test_r_lambda_value():
    assert r_lambda(1.0, 1.0, 2.0, 1.0) == pytest.approx(3 + 2 * 2 ** (2 / 3))


def test_c_lambda_delta_brute_force():
    lam, delta, b, B = 50.0, 1.0, 3.0, 2.0
    s = b * lam ** (-1 / (1 + delta))
    j = np.arange(1, 200, dtype=float)
    want = B * np.exp(s * (2 ** (j / (1 + delta)) - 2 ** (j / (1 + delta / 2)))).sum()
    assert c_lambda_delta(lam, delta, b, B) == pytest.approx(want, rel=1e-12)


def test_threshold_is_modular_over_eps():
    f = random_function(50)
    assert threshold(f, 0.2, 1.0) == pytest.approx(loglog_modular(f, TORUS, 2.0) / 0.2)
    with pytest.raises(ValueError):
        threshold(f, 0.0, 1.0)


def test_maximal_blocks_brute_force(rng):
    d = rng.random(64) ** 4 * 10
    lam = 2.0
    blocks = maximal_dyadic_blocks(d, lam, 32)
    cover = np.zeros(64, bool)
    for a, b in blocks:
        size = b - a
        assert a % size == 0 and d[a:b].mean() > lam
        if size < 32:
            pa = (a // (2 * size)) * 2 * size
            assert d[pa:pa + 2 * size].mean() <= lam
        assert not cover[a:b].any()
        cover[a:b] = True
    np.testing.assert_array_equal(cover, dyadic_maximal_profile(d, 32) > lam)


@given(st.integers(0, 10**6), st.sampled_from([0.05, 0.1, 0.3]))
def test_sigma1_within_seven_eps(seed, eps):
    f = random_function(seed % 1000, space=SPACES[seed % 3], scale=float(1 + seed % 40))
    s = sigma1(f, eps, 1.0)
    assert s.measure <= 7 * eps + 1e-12


def test_sigma1_is_the_sevenfold_dilation():
    f = random_function(51, scale=30.0)
    lam = threshold(f, 0.1, 1.0)
    blocks = maximal_dyadic_blocks(phi_density(f.cell_norms(), 2.0), lam, f.n_cells // 2)
    s = sigma1(f, 0.1, 1.0)
    i0, i1 = f.cells(TORUS)
    for i in range(i0, i1):
        x = cell_midpoint(i, f.n_cells)
        inside = False
        for a, b in blocks:
            lo, hi = cell_midpoint(a, f.n_cells) - F(1, 2) * f.h, cell_midpoint(b - 1, f.n_cells) + F(1, 2) * f.h
            lo, hi = F(lo).limit_denominator(10**6), F(hi).limit_denominator(10**6)
            c, L = (lo + hi) / 2, hi - lo
            inside |= abs(x - c) < F(7, 2) * L
        assert s.contains_cell(i) == inside


def test_sigma2_profile_and_scaling():
    f = random_function(52)
    prof = torus_hstar_profile(f)
    lam = threshold(f, 0.1, 1.0)
    assert np.array_equal(sigma2(f, 0.1, 1.0).mask, prof > lam)
    g = f.scaled(2.0)
    np.testing.assert_allclose(torus_hstar_profile(g), 2 * prof, rtol=1e-12)


def test_smoothing_intervals_meeting_torus_brute_force():
    got = set(smoothing_intervals_meeting_torus(F(1, 4)))
    want = set()
    for nu in range(-1, 4):
        step = F(2) ** -nu
        for m in range(-64, 64):
            w = SmoothingInterval(nu, m)
            if w.length >= F(1, 4) and -2 <= w.lo and w.hi <= 2 and w.hi > -F(1, 2) and w.lo < F(1, 2):
                want.add(w)
    assert got == want


def test_pair_family_invariants():
    f = random_function(53, n_cells=1024)
    lam = 3 * amplified_upper(f, SmoothingInterval(-1, -1), 0)
    pairs, viol = pair_family(f, 8, lam, empty_set("S1", 1024))
    assert pairs
    for p in pairs:
        assert 1 <= p.k <= 8
        assert (p.k * p.wstar.length / 4).denominator == 1
        assert p.cstar <= lam and jlevel(p.cstar, lam) == p.j
    for v in viol:
        assert v["C_star_upper"] > lam


def test_pair_family_of_zero_function_is_empty():
    f = zero_function(Space(), 1024)
    assert pair_family(f, 8, 1.0, empty_set("S1", 1024)) == ([], [])


def test_m_range():
    assert m_range(0.05, 0.1, math.exp(4)) == [1, 2, 3, 4]
    assert m_range(0.35, 0.1, math.exp(4)) == [4]
    assert m_range(10, 0.1, 100) == []
    assert m_range(10, 0.1, 100, m_floor=2) == [2, 3, 4]


def test_set_bookkeeping():
    a = empty_set("S1", 256)
    b = empty_set("S2", 256)
    a.mask[3:7] = True
    b.mask[5:9] = True
    assert a.runs() == [(99, 103)]
    assert union([a, b], 256).measure == pytest.approx(6 * 4 / 256)
    tm = total_measure([a, b])
    assert tm["union"] <= tm["S1"] + tm["S2"]
    rec = json.loads(a.to_json())
    assert rec["runs"] == [[99, 103]] and a.contains_cell(100) and not a.contains_cell(50)


def test_exceptional_sets_of_zero_function_are_empty():
    run = exceptional_sets(zero_function(Space(), 256), 0.1, 1.0, 64, 1.0, 1.0, 1.0)
    assert run.lam == 0 and run.measures()["union"] == 0
