import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import zeta

from helpers import SPACES, random_function
from littlecarleson.dyadic import TORUS, DyadicInterval
from littlecarleson.errors import ContractError, StructuralError
from littlecarleson.fourier import carleson_average, gamma_constant, zero_function
from littlecarleson.hausdorff_young import (A_constant, bridge_constant_bound, check_permutation, decay_k0,
                                            holder_constant, holder_exponent, identity, inclusion_holds,
                                            lambda_sigma, lemma22_split, lemma22_sum, lemma41_sum, lp_norm_mean,
                                            measured_bridge, poisson_counterexample_demo, poisson_function,
                                            random_permutation, stretched_exp_series, strong_lp_norm,
                                            theorem_b_certificate, weak_bound_constant, weak_l1_quotient)
from littlecarleson.values import Space

K = 128


def test_permutation_validation():
    assert check_permutation(identity(3), 3).tolist() == [-3, -2, -1, 0, 1, 2, 3]
    with pytest.raises(StructuralError):
        check_permutation([0, 0, 1], 1)
    with pytest.raises(StructuralError):
        check_permutation(identity(2), 3)


def test_weak_quotient_brute_force(rng):
    f = random_function(40, space=SPACES[1])
    seq = lambda_sigma(f, TORUS, random_permutation(K, rng), 1.5, K)
    assert seq.norms[K] == 0  # the k = 0 entry
    l1 = f.mean_norm(TORUS)
    nrm, w = seq.norms, seq.weights
    best = max(t * w[nrm > t * (1 - 1e-15)].sum() for t in nrm if t > 0)
    assert weak_l1_quotient(seq, l1) == pytest.approx(best / l1, rel=1e-12)


@given(st.integers(0, 10**6), st.sampled_from([1.2, 1.5, 1.9]), st.sampled_from(range(3)))
def test_weak_inequality_and_inclusion(seed, alpha, si):
    f = random_function(seed, space=SPACES[si])
    r = np.random.default_rng(seed)
    seq = lambda_sigma(f, TORUS, random_permutation(K, r), alpha, K)
    l1 = f.mean_norm(TORUS)
    assert weak_l1_quotient(seq, l1) <= weak_bound_constant(alpha)
    for level in np.quantile(seq.norms, [0.5, 0.9, 0.99]):
        if level > 0:
            assert inclusion_holds(seq, l1, level)


def test_weak_constant_value():
    assert weak_bound_constant(1.5) == 6.0
    assert weak_bound_constant(1.1) == pytest.approx(max(22.0, 2 * zeta(1.1)))


def test_strong_p2_for_scalar_is_at_most_l2():
    f = random_function(41)
    seq = lambda_sigma(f, TORUS, identity(K), 1.5, K)
    assert strong_lp_norm(seq, 2.0) <= lp_norm_mean(f, TORUS, 2.0)


def test_holder_constants():
    assert holder_exponent(1.5, 1.5) == pytest.approx(1.5)
    assert holder_constant(1.5, 1.5) == pytest.approx((2 * zeta(1.5)) ** (1 / 3))
    assert holder_constant(2.0, 1.5) == math.inf
    vals = [holder_constant(a) for a in (1.5, 1.9, 1.99)]
    assert vals == sorted(vals)
    with pytest.raises(ValueError):
        holder_constant(1.5, 2.0)


@pytest.mark.parametrize("k0", [1, 2, 10])
def test_A_constant_brute_force(k0):
    k = np.arange(k0, 2_000_000, dtype=float)
    assert A_constant(k0) == pytest.approx(2 + 2 * (1 / k**2).sum(), abs=2e-6)
    assert A_constant(1) == pytest.approx(2 + math.pi**2 / 3)


def test_decay_k0_brute_force():
    norms = np.array([5, 3, 2, 1.0, 0.9, 0.5, 0.01, 0.0, 0.0])
    beta = 1.5
    r = np.arange(norms.size)
    absk = (r + 1) // 2
    bad = [a for a, v in zip(absk, norms) if a >= 2 and v * math.log(a) ** beta > 1]
    assert decay_k0(norms, beta) == (max(bad) + 1 if bad else 1)


def test_certificate_for_constant_function():
    f = random_function(0).with_values(np.where(np.abs(np.arange(256) - 127.5) < 32, 3.0, 0.0))
    cert = theorem_b_certificate(f, TORUS, 2.0, 3.0 * math.log(3.0) ** 2, K)
    assert cert.k0 == 1 and cert.valid
    assert cert.measured_sum == pytest.approx(math.exp(-cert.a / math.sqrt(3.0)), rel=1e-9)


def test_certificate_refuses_small_rho():
    f = random_function(42)
    with pytest.raises(ContractError):
        theorem_b_certificate(f, TORUS, 1.5, 1e-3, K)


def test_stretched_series_bounds_the_sum():
    for c, q in [(0.3, 0.25), (1.0, 0.5), (2.0, 1.0)]:
        mu = np.arange(1, 10**6, dtype=float)
        assert 1 + 2 * np.exp(-c * mu**q).sum() <= stretched_exp_series(c, q)


def test_bridge_bound_dominates_measurement():
    mu = np.arange(1, 10**5, dtype=float)
    partial = (1 + 2 * (np.sqrt(1 + mu) / (1 + mu * mu)).sum()) / gamma_constant()
    bound = bridge_constant_bound()
    assert partial <= bound <= partial * 1.05
    f = random_function(43, space=SPACES[2])
    assert measured_bridge(f, DyadicInterval(1, 1), 64, 100) <= bound


def test_lemma41_sum_within_bound():
    f = random_function(44, scale=1.0)
    w = DyadicInterval(1, 1)
    lam = 1.05 * max(carleson_average(f, w, k).upper for k in range(-K, K + 1))
    lam = max(lam, 4 * f.mean_norm(w) * math.log(max(math.e, f.cell_norms().max())) ** 2)
    res = lemma41_sum(f, w, 1.0, lam, K)
    assert res.valid and res.measured_sum <= res.B
    assert len(res.certificates) == 3


def test_lemma22_split_adds_up():
    f = random_function(45)
    sigma = random_permutation(K, np.random.default_rng(1))
    parts = lemma22_split(f, TORUS, sigma, 2.0, K)
    assert sum(parts.values()) == pytest.approx(lemma22_sum(f, TORUS, sigma, 2.0, K))


def test_zero_function_has_trivial_sequences():
    f = zero_function(Space(), 256)
    seq = lambda_sigma(f, TORUS, identity(K), 1.5, K)
    assert weak_l1_quotient(seq, 0.0) == 0.0 and strong_lp_norm(seq, 2) == 0.0


def test_poisson_fibres_have_unit_norm_and_ratio_grows():
    f = poisson_function(0.9, 256)
    i0, i1 = f.cells(TORUS)
    np.testing.assert_allclose(f.cell_norms()[i0:i1], 1.0, atol=1e-14)
    rows = poisson_counterexample_demo((0.5, 0.9, 0.99), K=K, n_cells=256)
    ratios = [r["ratio"] for r in rows]
    assert ratios == sorted(ratios)
