import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from helpers import SPACES, random_function
from littlecarleson.dyadic import DOMAIN, TORUS, DyadicInterval, cell_midpoint
from littlecarleson.errors import ContractError, ResolutionError
from littlecarleson.operators import (admissible_pairs, centered_maximal_hilbert, delta_function,
                                      distribution, dyadic_maximal_profile, fit_exponential_tail, hilbert,
                                      hl_maximal, log_kernel, maximal_hilbert, modified_partial_sum,
                                      phase_means, weak_type_constant)

N = 256
H = 4 / N


def quad_kernel(xi, c):
    """Principal value of int over cell c of dy / (x - y), x the midpoint of cell xi."""
    x = -2 + (xi + 0.5) * H
    a = -2 + c * H
    # quad's cauchy weight integrates g(y) / (y - x)
    return -integrate.quad(lambda y: 1.0, a, a + H, weight="cauchy", wvar=x)[0] if c == xi else \
        integrate.quad(lambda y: 1.0 / (x - y), a, a + H, epsabs=1e-15)[0]


@pytest.mark.parametrize("xi", [0, 17, 128, 255])
def test_log_kernel_matches_quadrature(xi):
    got = log_kernel(xi, 0, N)
    for c in [0, 5, xi - 1, xi, xi + 1, 200, 255]:
        if 0 <= c < N:
            assert got[c] == pytest.approx(quad_kernel(xi, c), abs=1e-12)


def test_hilbert_of_indicator_is_log_ratio():
    vals = np.zeros(N, complex)
    vals[96:160] = 1.0  # the torus
    from littlecarleson.fourier import SampledFunction
    from littlecarleson.values import Space
    f = SampledFunction(Space(), vals)
    x = cell_midpoint(140, N)
    expected = math.log(abs(float(x) + 0.5)) - math.log(abs(float(x) - 0.5))
    assert complex(hilbert(f, TORUS, x).payload) == pytest.approx(expected, abs=1e-12)


def middle_half(a, b, xi):
    x2 = 2 * xi + 1  # twice the midpoint, in cells
    return abs(x2 - (a + b)) * 2 < (b - a)


@given(st.integers(0, 63), st.integers(1, 64))
def test_admissible_pairs_brute_force(xi, m):
    if xi >= m:
        return
    a, b = admissible_pairs(xi, m)
    got = set(zip(a.tolist(), b.tolist()))
    want = {(p, q) for p in range(m) for q in range(p + 1, m + 1) if middle_half(p, q, xi)}
    assert got == want


@pytest.mark.parametrize("si", range(3))
def test_maximal_hilbert_brute_force(si):
    f = random_function(10 + si, space=SPACES[si])
    w = DyadicInterval(2, 1)  # cells 144..159
    i0, i1 = f.cells(w)
    for xi in (i0, i0 + 5, i1 - 1):
        best = 0.0
        for a in range(i0, i1):
            for b in range(a + 1, i1 + 1):
                if middle_half(a - i0, b - i0, xi - i0):
                    k = np.array([quad_kernel(xi, c) for c in range(a, b)])
                    v = np.tensordot(k, f.values[a:b], axes=(0, 0))
                    best = max(best, float(f.space.norms(v)))
        got, flag = maximal_hilbert(f, w, cell_midpoint(xi, N))
        assert not flag
        assert got == pytest.approx(best, rel=1e-10)


def test_hl_and_centered_maximal_brute_force():
    f = random_function(20, space=SPACES[1])
    norms = f.cell_norms()
    xi = 120
    x = cell_midpoint(xi, N)
    hl = max(norms[a:b].mean() for a in range(0, xi + 1) for b in range(xi + 1, N + 1))
    assert hl_maximal(f, x) == pytest.approx(hl, rel=1e-12)
    k = log_kernel(xi, 0, N)
    best = 0.0
    for r in range(N):
        keep = np.abs(np.arange(N) - xi) > r
        v = np.tensordot(k * keep, f.values, axes=(0, 0))
        best = max(best, float(f.space.norms(v)))
    assert centered_maximal_hilbert(f, x, DOMAIN) == pytest.approx(best, rel=1e-12)


def test_dyadic_maximal_brute_force(rng):
    d = rng.random(64)
    got = dyadic_maximal_profile(d)
    for i in range(64):
        want = max(d[(i // s) * s:(i // s) * s + s].mean() for s in (1, 2, 4, 8, 16, 32))
        assert got[i] == pytest.approx(want)


def test_partial_sum_at_zero_frequency_is_hilbert():
    f = random_function(30, space=SPACES[2])
    x = cell_midpoint(130, N)
    s, ind = modified_partial_sum(f, 0, TORUS, x)
    assert ind == 0
    assert s.allclose(hilbert(f, TORUS, x), atol=1e-13)


def test_phase_means_are_exact_cell_averages():
    k = 7.0
    got = phase_means(k, N, 100, 104)
    for n, c in enumerate(range(100, 104)):
        a = -2 + c * H
        re = integrate.quad(lambda t: math.cos(2 * math.pi * k * t), a, a + H)[0] / H
        im = integrate.quad(lambda t: -math.sin(2 * math.pi * k * t), a, a + H)[0] / H
        assert got[n] == pytest.approx(complex(re, im), abs=1e-13)


def test_partial_sum_refuses_underresolved_frequency():
    f = random_function(31)
    with pytest.raises(ResolutionError):
        modified_partial_sum(f, N, TORUS, cell_midpoint(128, N))


def test_delta_single_member_at_center():
    w = DyadicInterval(3, 2)
    assert delta_function([w], w.center) == 1.0
    assert delta_function([w], w.center + w.length) == pytest.approx(0.5)
    with pytest.raises(ContractError):
        delta_function([], F(0))


def test_exponential_fit_recovers_exact_tail():
    t = np.linspace(0, 5, 20)
    fit = fit_exponential_tail(t, 3.0 * np.exp(-1.7 * t))
    assert fit.K == pytest.approx(3.0) and fit.c == pytest.approx(1.7) and fit.r2 == pytest.approx(1.0)


def test_weak_type_constant_brute_force(rng):
    v = rng.random(50)
    cell, length, mean = 0.01, 2.0, 0.3
    levels = np.concatenate([v - 1e-12, v])
    best = max(length * distribution(v, [t], cell)[0] * t / mean for t in levels if t > 0)
    assert weak_type_constant(v, cell, length, mean) == pytest.approx(best, rel=1e-9)
