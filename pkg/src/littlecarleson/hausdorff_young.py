"""Hausdorff-Young type estimates in L(log L)^beta for sampled functions.

Sums over the integers are truncated to |k| <= K. Coefficients come from the
cached interval FFT, so frequencies k + 1/3 and k - 1/3 (the two modulations
used to pass from plain coefficients to Carleson averages) are exact as well.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import polygamma, zeta

from .dyadic import TORUS, cell_range
from .errors import ContractError, ResolutionError, StructuralError
from .fourier import M_TRUNC, SampledFunction, gamma_constant, loglog_modular
from .values import LP, Space

DEFAULT_ALPHA = 1.5
DEFAULT_K = 2048


@dataclass(frozen=True)
class WeightedSequence:
    alpha: float
    ks: np.ndarray
    payloads: np.ndarray
    space: Space

    def __post_init__(self):
        if not 1 < self.alpha < 2:
            raise ValueError("alpha must lie in (1, 2)")

    @property
    def weights(self) -> np.ndarray:
        absk = np.abs(self.ks).astype(float)
        with np.errstate(divide="ignore"):
            w = absk ** (-self.alpha)
        w[self.ks == 0] = 1.0
        return w

    @property
    def norms(self) -> np.ndarray:
        return self.space.norms(self.payloads)


def check_permutation(sigma, K: int) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.int64)
    if sigma.shape != (2 * K + 1,) or not np.array_equal(np.sort(sigma), np.arange(-K, K + 1)):
        raise StructuralError("sigma must be a bijection of [-K, K]")
    return sigma


def random_permutation(K: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(np.arange(-K, K + 1))


def integer_coeffs(f: SampledFunction, w, K: int, offset: int = 0) -> np.ndarray:
    """Payloads of fhat_w(k + offset/3) for k = -K..K."""
    ks = np.arange(-K, K + 1)
    return f.spectrum(w).coeffs_at_thirds(3 * ks + offset)


def integer_norms(f: SampledFunction, w, K: int, offset: int = 0) -> np.ndarray:
    ks = np.arange(-K, K + 1)
    return f.spectrum(w).norms_at_thirds(3 * ks + offset)


def lambda_sigma(f: SampledFunction, w, sigma, alpha: float = DEFAULT_ALPHA, K: int = DEFAULT_K) -> WeightedSequence:
    """(|k|^(alpha-1) fhat_w(sigma(k)))_k over |k| <= K; the k = 0 entry is zero."""
    if not 1 < alpha < 2:
        raise ValueError("alpha must lie in (1, 2)")
    sigma = check_permutation(sigma, K)
    ks = np.arange(-K, K + 1)
    coeffs = integer_coeffs(f, w, K)
    picked = coeffs[sigma + K]
    factor = np.abs(ks).astype(float) ** (alpha - 1)
    return WeightedSequence(alpha, ks, factor.reshape((-1,) + (1,) * len(f.space.shape)) * picked, f.space)


def weak_l1_quotient(seq: WeightedSequence, f_l1: float) -> float:
    """sup_t t * nu({k : ||entry_k|| > t}) / ||f||_1 over the sampled entry norms."""
    nrm = seq.norms
    if f_l1 == 0:
        if np.any(nrm > 0):
            raise ContractError("zero L1 norm with a nonzero sequence")
        return 0.0
    order = np.argsort(-nrm, kind="stable")
    sn, sw = nrm[order], seq.weights[order]
    pos = sn > 0
    if not pos.any():
        return 0.0
    sn, sw = sn[pos], sw[pos]
    cum = np.cumsum(sw)
    # for t just below sn[i], the level set is every entry with norm >= sn[i]
    last = np.searchsorted(-sn, -sn, side="right") - 1
    return float((sn * cum[last]).max() / f_l1)


def strong_lp_norm(seq: WeightedSequence, p: float) -> float:
    return float(((seq.norms**p) * seq.weights).sum() ** (1.0 / p))


def weak_bound_constant(alpha: float) -> float:
    """Explicit c_alpha with sum_{|k| > T} |k|^-alpha * t <= c_alpha ||f||_1."""
    return max(2 * alpha / (alpha - 1), 2 * float(zeta(alpha)))


def inclusion_holds(seq: WeightedSequence, f_l1: float, level: float) -> bool:
    """Every k with entry norm > level has |k| > (level/||f||_1)^(1/(alpha-1))."""
    if f_l1 == 0:
        return True
    bound = (level / f_l1) ** (1.0 / (seq.alpha - 1))
    hit = seq.norms > level
    return bool(np.all(np.abs(seq.ks[hit]) > bound))


def holder_exponent(alpha: float, p: float) -> float:
    q = p / (p - 1)
    return q * (alpha - (alpha - 1) * p) / (q - p)


def holder_constant(alpha: float, p: float = 1.5) -> float:
    """(sum_{k != 0} |k|^(-q[alpha - (alpha-1)p]/(q-p)))^((q-p)/(pq)); infinite unless alpha < 2."""
    if not 1 < p < 2:
        raise ValueError("the Holder step needs 1 < p < 2")
    q = p / (p - 1)
    e = holder_exponent(alpha, p)
    if e <= 1:
        return math.inf
    return float((2 * zeta(e)) ** ((q - p) / (p * q)))


def lp_norm_mean(f: SampledFunction, w, p: float) -> float:
    i0, i1 = f.cells(w)
    return float((f.cell_norms()[i0:i1] ** p).mean() ** (1.0 / p))


# logarithmic coefficient sum ------------------------------------------------------------------------


def lemma22_sum(f: SampledFunction, w, sigma, beta: float, K: int = DEFAULT_K) -> float:
    """sum_{2 <= |k| <= K} ||fhat_w(sigma(k))|| / |k| (log |k|)^(beta - 1)."""
    if K < 2:
        raise ValueError("K must be >= 2")
    sigma = check_permutation(sigma, K)
    ks = np.arange(-K, K + 1)
    nrm = integer_norms(f, w, K)[sigma + K]
    sel = np.abs(ks) >= 2
    absk = np.abs(ks[sel]).astype(float)
    return float((nrm[sel] / absk * np.log(absk) ** (beta - 1)).sum())


def lemma22_split(f: SampledFunction, w, sigma, beta: float, K: int = DEFAULT_K) -> dict:
    """Diagnostic three-way split of the logarithmic coefficient sum by |k|^(-1/4) <= ||fhat|| <= |k|^(1/4)."""
    sigma = check_permutation(sigma, K)
    ks = np.arange(-K, K + 1)
    nrm = integer_norms(f, w, K)[sigma + K]
    sel = np.abs(ks) >= 2
    absk = np.abs(ks[sel]).astype(float)
    terms = nrm[sel] / absk * np.log(absk) ** (beta - 1)
    small = nrm[sel] < absk**-0.25
    large = nrm[sel] > absk**0.25
    return {"small": float(terms[small].sum()), "large": float(terms[large].sum()),
            "main": float(terms[~small & ~large].sum())}


def identity(K: int) -> np.ndarray:
    return np.arange(-K, K + 1)


# exponential coefficient sums --------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoremBCertificate:
    rho: float
    beta: float
    k0: int
    a: float
    A: float
    measured_sum: float
    K: int
    offset: int = 0
    corpus_id: str = ""

    @property
    def valid(self) -> bool:
        return self.measured_sum <= self.A

    def to_record(self) -> dict:
        d = asdict(self)
        d["valid"] = self.valid
        return d


def a_constant(rho: float, beta: float, k0: int) -> float:
    return max(2.0, rho ** (1.0 / beta) * math.log(k0))


def A_constant(k0: int) -> float:
    """2 + 2 sum_{k >= k0} k^-2 (sum over both signs of k)."""
    return 2.0 + 2.0 * float(polygamma(1, k0))


def decay_k0(sorted_norms: np.ndarray, beta: float) -> int:
    """Smallest k0 >= 1 with ||f*(k)|| (log|k|)^beta <= 1 for all sampled |k| >= k0."""
    r = np.arange(sorted_norms.size)
    absk = (r + 1) // 2
    with np.errstate(divide="ignore"):
        lg = np.where(absk >= 2, np.log(np.maximum(absk, 1)), 0.0)
    bad = sorted_norms * lg**beta > 1.0
    return int(absk[bad].max()) + 1 if bad.any() else 1


def exp_sum(norms: np.ndarray, a: float, beta: float) -> float:
    pos = norms[norms > 0]
    return float(np.exp(-a * pos ** (-1.0 / beta)).sum())


def theorem_b_certificate(f: SampledFunction, w, beta: float, rho: float, K: int = DEFAULT_K,
                          offset: int = 0, corpus_id: str = "") -> TheoremBCertificate:
    """Build the constants a, A from the decreasing rearrangement and check the exponential sum.

    ``offset`` in {-1, 0, 1} shifts all frequencies by offset/3 (exact modulation).
    """
    mod = loglog_modular(f, w, beta)
    if mod > rho * (1 + 1e-12):
        raise ContractError(f"modular {mod:.6g} exceeds rho={rho:.6g}", {"modular": mod, "rho": rho})
    nrm = integer_norms(f, w, K, offset)
    sorted_norms = np.sort(nrm)[::-1]
    k0 = decay_k0(sorted_norms, beta)
    if k0 > K // 2:
        raise ResolutionError(f"no k0 <= K/2 = {K // 2} satisfies the decay condition (got {k0}); increase K")
    a = a_constant(rho, beta, k0)
    A = A_constant(k0)
    total = exp_sum(nrm, a, beta)
    cert = TheoremBCertificate(rho, beta, k0, a, A, total, K, offset, corpus_id or f.name)
    if not cert.valid:
        raise ContractError(f"exponential sum {total:.6g} exceeds A = {A:.6g}", cert.to_record())
    return cert


def heldout_decay(f: SampledFunction, w, beta: float, K: int, offset: int = 0) -> float:
    """max of ||f*(k)|| (log|k|)^beta over rearranged positions K/2 < |k| <= K."""
    sorted_norms = np.sort(integer_norms(f, w, K, offset))[::-1]
    r = np.arange(sorted_norms.size)
    absk = (r + 1) // 2
    sel = absk > K // 2
    return float((sorted_norms[sel] * np.log(absk[sel]) ** beta).max())


# Carleson-average exponential sums ----------------------------------------------------------------------------


def bridge_constant_bound(tol: float = 1e-9) -> float:
    """Upper bound for (1/gamma) sum_mu sqrt(1+|mu|)/(1+mu^2).

    Then C_k <= this * sup_mu ||fhat(k + mu/3)|| / sqrt(1 + |mu|).
    """
    m = 1_000_000
    mu = np.arange(1, m + 1, dtype=float)
    partial = 1.0 + 2.0 * math.fsum(np.sqrt(1 + mu) / (1 + mu * mu))
    tail = 2 * 2 * math.sqrt(2) / math.sqrt(m)
    return (partial + tail) / gamma_constant()


def measured_bridge(f: SampledFunction, w, K: int, m_trunc: int = M_TRUNC) -> float:
    """max_k C_k / sup_mu ||fhat(k + mu/3)|| / sqrt(1 + |mu|) over |k| <= K."""
    spectrum = f.spectrum(w)
    ks = np.arange(-K, K + 1)
    c, _ = spectrum.carleson(ks, m_trunc)
    mu = np.arange(-m_trunc, m_trunc + 1)
    sup = np.empty(ks.size)
    for s in range(0, ks.size, 256):
        j = 3 * ks[s : s + 256, None] + mu[None, :]
        sup[s : s + 256] = (spectrum.norms_at_thirds(j) / np.sqrt(1 + np.abs(mu))).max(axis=1)
    ratio = np.where(sup > 0, c / np.where(sup > 0, sup, 1), 0.0)
    return float(ratio.max())


@dataclass(frozen=True)
class CarlesonExpSum:
    measured_sum: float
    b: float
    B: float
    a: float
    A: float
    k_bridge: float
    certificates: tuple

    @property
    def valid(self) -> bool:
        return self.measured_sum <= self.B


def stretched_exp_series(c: float, q: float) -> float:
    """Upper bound of sum_{mu in Z} exp(-c |mu|^q): 1 + 2 Gamma(1 + 1/q) c^(-1/q)."""
    return 1.0 + 2.0 * math.exp(math.lgamma(1 + 1 / q) - math.log(c) / q)


def lemma41_sum(f: SampledFunction, w, delta: float, lam: float, K: int = DEFAULT_K,
                m_trunc: int = M_TRUNC, k_bridge: float | None = None) -> CarlesonExpSum:
    """sum_k exp(-b C_k^(-1/(1+delta))) over |k| <= K, with b and B built from the certificates at beta = 1 + delta.

    b = 2 a K_bridge^(1/(1+delta)) and B = 3 A sum_mu exp(-a lam^(-1/(1+delta)) |mu|^(1/(2(1+delta)))),
    where a, A are the largest constants among the three certificates (offsets 0, +1, -1).
    """
    beta = 1.0 + delta
    certs = tuple(theorem_b_certificate(f, w, beta, lam, K, off) for off in (0, 1, -1))
    a = max(c.a for c in certs)
    A = max(c.A for c in certs)
    kb = bridge_constant_bound() if k_bridge is None else k_bridge
    p = 1.0 / beta
    b = 2.0 * a * kb**p
    if lam > 0:
        B = 3.0 * A * stretched_exp_series(a * lam ** (-p), p / 2)
    else:
        B = 3.0 * A
    c, tail = f.spectrum(w).carleson(np.arange(-K, K + 1), m_trunc)
    upper = c + tail
    pos = upper[c > 0]
    total = float(np.exp(-b * pos ** (-p)).sum())
    res = CarlesonExpSum(total, b, B, a, A, kb, certs)
    if not res.valid:
        raise ContractError(f"Carleson exponential sum {total:.6g} exceeds B = {B:.6g}")
    return res


# Poisson counterexample -----------------------------------------------------------------


def poisson_kernel(r: float, t: np.ndarray) -> np.ndarray:
    return (1 - r * r) / (1 - 2 * r * np.cos(2 * np.pi * t) + r * r)


def poisson_function(r: float, n_cells: int, name: str = "") -> SampledFunction:
    """f_r(x) = P_r(x + .) as an l_1^d-valued function, d = number of cells in the torus.

    The fibre grid is offset so that x + y runs over the same lattice for every x;
    each fibre is normalised to unit l_1 norm, which is then exact at every x.
    """
    i0, i1 = cell_range(TORUS, n_cells)
    d = i1 - i0
    x = -0.5 + (np.arange(d) + 0.5) / d
    y = (np.arange(d) + 0.5) / d
    vals = poisson_kernel(r, x[:, None] + y[None, :])
    vals = vals / vals.sum(axis=1, keepdims=True)
    full = np.zeros((n_cells, d), dtype=complex)
    full[i0:i1] = vals
    return SampledFunction(Space(LP, d, 1.0), full, name or f"poisson(r={r})")


def poisson_counterexample_demo(r_values=(0.5, 0.9, 0.99, 0.999), p: float = 2.0, K: int = DEFAULT_K,
                                n_cells: int = 2048, alpha: float = DEFAULT_ALPHA) -> list[dict]:
    rows = []
    for r in r_values:
        f = poisson_function(r, n_cells)
        i0, i1 = cell_range(TORUS, n_cells)
        fib = f.cell_norms()[i0:i1]
        seq = lambda_sigma(f, TORUS, identity(K), alpha, K)
        ratio = strong_lp_norm(seq, p) / lp_norm_mean(f, TORUS, p)
        rows.append({"r": r, "ratio": ratio, "max_fibre_deviation": float(np.abs(fib - 1).max())})
    return rows


def sweep_alpha(alphas=(1.5, 1.9, 1.99), p: float = 1.5) -> list[float]:
    return [holder_constant(a, p) for a in alphas]
