"""Sampled functions and their generalized Fourier coefficients.

A :class:`SampledFunction` is piecewise constant on the ``N`` uniform cells of
(-2, 2). Coefficients integrate the character exactly over every cell, so the
only error left is the sampling of ``f`` itself.

For an interval ``w`` made of ``M`` cells the coefficient at frequency
``alpha`` factors as::

    fhat_w(alpha) = (1/M) sinc(alpha/M) exp(-i omega (lo + h/2)) * sum_c f_c exp(-2 pi i c alpha / M)

with ``omega = 2 pi alpha / |w|``. At ``alpha = j/3`` the sum is entry
``j mod 3M`` of a zero-padded FFT of length ``3M``, which makes Carleson
averages at arbitrary integer ``k`` cheap once the FFT of ``w`` is cached.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache
from typing import Callable, Sequence

import numpy as np

from .dyadic import (
    DOMAIN_LO,
    TORUS,
    Interval,
    cell_range,
    cell_width,
    grandsons,
)
from .errors import StructuralError
from .values import NormedValue, Space

M_TRUNC = 200
MIN_CELLS = 256


@cache
def gamma_constant(tol: float = 1e-9) -> float:
    """sum over all integers mu of 1/(1 + mu^2), to absolute error ``tol``.

    Partial sum up to ``M`` plus the midpoint of the arctan bracket for the tail;
    the bracket width ``2(arctan(M+1) - arctan(M))`` bounds the error.
    """
    m = 1000
    while 2 * (math.atan(m + 1) - math.atan(m)) > 2 * tol:
        m *= 2
    mu = np.arange(1, m + 1, dtype=float)
    partial = 1.0 + 2.0 * math.fsum(1.0 / (1.0 + mu * mu))
    upper = 2 * (math.pi / 2 - math.atan(m))
    lower = 2 * (math.pi / 2 - math.atan(m + 1))
    return partial + 0.5 * (upper + lower)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Piecewise-constant ``f: (-2, 2) -> X`` on ``N`` uniform cells."""

    space: Space
    values: np.ndarray
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=complex)
        n = arr.shape[0]
        if n < MIN_CELLS or n & (n - 1):
            raise StructuralError(f"grid size must be a power of two >= {MIN_CELLS}, got {n}")
        self.space.check(arr, 1)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_cells(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return 4.0 / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return -2.0 + self.h * np.arange(self.n_cells + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return -2.0 + self.h * (np.arange(self.n_cells) + 0.5)

    def cell_norms(self) -> np.ndarray:
        if "norms" not in self._cache:
            nrm = self.space.norms(self.values)
            nrm.setflags(write=False)
            self._cache["norms"] = nrm
        return self._cache["norms"]

    def norm_prefix(self) -> np.ndarray:
        if "prefix" not in self._cache:
            self._cache["prefix"] = np.concatenate([[0.0], np.cumsum(self.cell_norms())])
        return self._cache["prefix"]

    def cells(self, w) -> tuple[int, int]:
        return cell_range(w, self.n_cells)

    def mean_norm(self, w) -> float:
        i0, i1 = self.cells(w)
        p = self.norm_prefix()
        return (p[i1] - p[i0]) / (i1 - i0)

    def value_at_cell(self, i: int) -> NormedValue:
        return NormedValue(self.space, self.values[i])

    def scaled(self, c: complex, name: str | None = None) -> "SampledFunction":
        return SampledFunction(self.space, c * self.values, name if name is not None else self.name)

    def with_values(self, values, name: str | None = None) -> "SampledFunction":
        return SampledFunction(self.space, values, name if name is not None else self.name)

    def is_supported_in_torus(self) -> bool:
        i0, i1 = cell_range(TORUS, self.n_cells)
        nrm = self.cell_norms()
        return not (nrm[:i0].any() or nrm[i1:].any())

    def spectrum(self, w) -> "IntervalSpectrum":
        i0, i1 = self.cells(w)
        key = ("spectrum", i0, i1)
        cached = self._cache.get(key)
        if cached is None:
            cached = IntervalSpectrum(self, i0, i1)
            self._cache[key] = cached
        return cached


def from_cells(space: Space, n_cells: int, fill: Callable[[np.ndarray], np.ndarray], name: str = "",
               support: Interval = TORUS) -> SampledFunction:
    """Build a function by evaluating ``fill`` at the midpoints of cells in ``support``."""
    vals = np.zeros((n_cells,) + space.shape, dtype=complex)
    i0, i1 = cell_range(support, n_cells)
    mids = -2.0 + (4.0 / n_cells) * (np.arange(i0, i1) + 0.5)
    vals[i0:i1] = fill(mids)
    return SampledFunction(space, vals, name)


def zero_function(space: Space, n_cells: int, name: str = "zero") -> SampledFunction:
    return SampledFunction(space, np.zeros((n_cells,) + space.shape, dtype=complex), name)


# coefficients -----------------------------------------------------------------


def _cell_integrals(edges_lo: np.ndarray, h: float, omega: float) -> np.ndarray:
    """Exact integrals of exp(-i omega t) over cells [lo, lo + h)."""
    mid = edges_lo + h / 2
    return h * np.sinc(omega * h / (2 * np.pi)) * np.exp(-1j * omega * mid)


def fourier_coeff(f: SampledFunction, w, alpha: float) -> NormedValue:
    """Mean over ``w`` of ``f(t) exp(-2 pi i alpha t / |w|)``, per-cell exact."""
    i0, i1 = f.cells(w)
    length = float(w.hi - w.lo)
    omega = 2 * np.pi * alpha / length
    lo = float(DOMAIN_LO) + f.h * np.arange(i0, i1)
    weights = _cell_integrals(lo, f.h, omega) / length
    return NormedValue(f.space, np.tensordot(weights, f.values[i0:i1], axes=(0, 0)))


def fourier_coeffs_direct(f: SampledFunction, w, alphas) -> np.ndarray:
    """Payload array of coefficients at many frequencies (direct summation)."""
    i0, i1 = f.cells(w)
    length = float(w.hi - w.lo)
    lo = float(DOMAIN_LO) + f.h * np.arange(i0, i1)
    omegas = 2 * np.pi * np.asarray(alphas, dtype=float) / length
    mid = lo + f.h / 2
    weights = (f.h / length) * np.sinc(omegas[:, None] * f.h / (2 * np.pi)) * np.exp(-1j * omegas[:, None] * mid[None, :])
    return np.tensordot(weights, f.values[i0:i1], axes=(1, 0))


class IntervalSpectrum:
    """Cached coefficients of ``f`` on one grid interval at all frequencies j/3."""

    def __init__(self, f: SampledFunction, i0: int, i1: int):
        self.f = f
        self.i0, self.i1 = i0, i1
        self.m = i1 - i0
        self.length = self.m * f.h
        self.lo = float(DOMAIN_LO) + i0 * f.h
        block = f.values[i0:i1]
        pad = np.zeros((3 * self.m,) + f.space.shape, dtype=complex)
        pad[: self.m] = block
        self._fft = np.fft.fft(pad, axis=0)
        self._fft_norms = f.space.norms(self._fft)
        p = f.norm_prefix()
        self.mean_norm = (p[i1] - p[i0]) / self.m

    def _factor(self, j: np.ndarray) -> np.ndarray:
        alpha = np.asarray(j, dtype=float) / 3.0
        return np.sinc(alpha / self.m) / self.m

    def norms_at_thirds(self, j) -> np.ndarray:
        """Norms of the coefficients at frequencies ``j/3`` (``j`` integer array)."""
        j = np.asarray(j, dtype=np.int64)
        return np.abs(self._factor(j)) * self._fft_norms[np.mod(j, 3 * self.m)]

    def coeffs_at_thirds(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=np.int64)
        alpha = j / 3.0
        omega = 2 * np.pi * alpha / self.length
        phase = np.exp(-1j * omega * (self.lo + self.f.h / 2)) * self._factor(j)
        vals = self._fft[np.mod(j, 3 * self.m)]
        return phase.reshape(phase.shape + (1,) * len(self.f.space.shape)) * vals

    def carleson(self, ks, m_trunc: int = M_TRUNC) -> tuple[np.ndarray, float]:
        """Truncated Carleson averages at integer indices ``ks`` and the common tail bound."""
        ks = np.atleast_1d(np.asarray(ks, dtype=np.int64))
        mu = np.arange(-m_trunc, m_trunc + 1, dtype=np.int64)
        weights = 1.0 / (1.0 + mu.astype(float) ** 2)
        g = gamma_constant()
        out = np.empty(ks.shape[0])
        chunk = max(1, 200_000 // mu.size)
        for s in range(0, ks.shape[0], chunk):
            j = 3 * ks[s : s + chunk, None] + mu[None, :]
            out[s : s + chunk] = self.norms_at_thirds(j) @ weights / g
        tail = self.mean_norm * (2.0 / m_trunc) / g
        return out, tail


@dataclass(frozen=True)
class CarlesonValue:
    value: float
    tail: float

    @property
    def upper(self) -> float:
        return self.value + self.tail


def carleson_average(f: SampledFunction, w, k: int, m_trunc: int = M_TRUNC) -> CarlesonValue:
    """C_k(f, w) truncated to |mu| <= m_trunc, with its certified tail bound."""
    if m_trunc < 1:
        raise ValueError("m_trunc must be >= 1")
    vals, tail = f.spectrum(w).carleson([k], m_trunc)
    return CarlesonValue(float(vals[0]), float(tail))


def amplified_average(f: SampledFunction, wstar, k: int, m_trunc: int = M_TRUNC) -> CarlesonValue:
    """Max of the Carleson averages at index ``k`` over the four grandsons of ``wstar``."""
    cands = [carleson_average(f, g, k, m_trunc) for g in grandsons(wstar)]
    return CarlesonValue(max(c.value for c in cands), max(c.upper for c in cands) - max(c.value for c in cands))


def loglog_modular(f: SampledFunction, w, beta: float) -> float:
    """Mean over ``w`` of ||f|| (log+ ||f||)^beta."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    i0, i1 = f.cells(w)
    return float(phi_density(f.cell_norms()[i0:i1], beta).mean())


def phi_density(norms: np.ndarray, beta: float) -> np.ndarray:
    logp = np.log(np.maximum(norms, 1.0))
    return norms * logp**beta


# coefficient tables -------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientTable:
    interval: object
    frequencies: np.ndarray
    payloads: np.ndarray
    space: Space

    @property
    def norms(self) -> np.ndarray:
        return self.space.norms(self.payloads)

    def coefficient(self, i: int) -> NormedValue:
        return NormedValue(self.space, self.payloads[i])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        ncomp = int(np.prod(self.space.shape)) if self.space.shape else 1
        header = ["frequency", "norm"]
        for c in range(ncomp):
            header += [f"re{c}", f"im{c}"]
        writer.writerow(header)
        flat = self.payloads.reshape(len(self.frequencies), ncomp)
        for freq, nrm, row in zip(self.frequencies, self.norms, flat):
            cells = [repr(float(freq)), repr(float(nrm))]
            for z in row:
                cells += [repr(float(z.real)), repr(float(z.imag))]
            writer.writerow(cells)
        return buf.getvalue()


def coefficient_table(f: SampledFunction, w, frequencies) -> CoefficientTable:
    freqs = np.asarray(frequencies, dtype=float)
    return CoefficientTable(w, freqs, fourier_coeffs_direct(f, w, freqs), f.space)


def integer_table(f: SampledFunction, w, K: int) -> CoefficientTable:
    """Coefficients at all integers |k| <= K, read off the cached FFT."""
    ks = np.arange(-K, K + 1)
    payloads = f.spectrum(w).coeffs_at_thirds(3 * ks)
    return CoefficientTable(w, ks.astype(float), payloads, f.space)


def rearrangement_order(table: CoefficientTable, K: int) -> np.ndarray:
    """Indices into the table sorted by norm, descending; ties by |k| then k > 0 first."""
    freqs = table.frequencies
    if np.any(freqs != np.round(freqs)) or np.any(np.abs(freqs) > K):
        raise ValueError("rearrangement needs integer frequencies with |k| <= K")
    nrm = table.norms
    return np.lexsort((freqs < 0, np.abs(freqs), -nrm))


def rearrangement(table: CoefficientTable, K: int) -> np.ndarray:
    """Decreasing rearrangement of the coefficient norms."""
    return table.norms[rearrangement_order(table, K)]


def rearranged_index(r: np.ndarray) -> np.ndarray:
    """Position k assigned to the r-th largest coefficient: 0, 1, -1, 2, -2, ..."""
    r = np.asarray(r)
    mag = (r + 1) // 2
    return np.where(r % 2 == 1, mag, -mag)


# smooth extensions --------------------------------------------------------------


def quintic_ramp(u: np.ndarray) -> np.ndarray:
    """10u^3 - 15u^4 + 6u^5 on [0, 1], clamped outside; first and second derivatives vanish at both ends."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def bump(x: np.ndarray, a: float, b: float) -> np.ndarray:
    """C^2 bump: 1 on [a, b], 0 outside (2a - b, 2b - a), quintic ramps in between."""
    L = b - a
    left = quintic_ramp((x - (a - L)) / L)
    right = quintic_ramp(((b + L) - x) / L)
    return np.minimum(left, right)


def smooth_expansion_coeffs(phi: Callable[[np.ndarray], np.ndarray], w, M: int,
                            samples: int = 1 << 14) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients gamma_mu, |mu| <= M, of ``phi * bump`` adapted to 3w.

    The expansion reads ``phi(x) = sum_mu gamma_mu exp(-2 pi i mu x / 3|w|)`` for
    ``x`` in ``w``. The product is periodic and C^2 on 3w, so the equispaced rule
    (an FFT) converges fast. Returns ``(mu, gamma)``.
    """
    a, b = float(w.lo), float(w.hi)
    L = b - a
    start, period = a - L, 3 * L
    if samples < 4 * M + 4:
        samples = 1 << int(math.ceil(math.log2(4 * M + 4)))
    x = start + period * np.arange(samples) / samples
    vals = phi(x) * bump(x, a, b)
    # gamma_mu = mean of vals * exp(+2 pi i mu x / period)
    coeffs = np.fft.ifft(vals)
    mu = np.arange(-M, M + 1)
    shift = np.exp(2j * np.pi * mu * start / period)
    return mu, coeffs[np.mod(mu, samples)] * shift


def expansion_eval(mu: np.ndarray, gam: np.ndarray, w, x) -> np.ndarray:
    period = 3 * float(w.hi - w.lo)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.exp(-2j * np.pi * np.outer(x, mu) / period) @ gam


def phi_beta(beta: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: np.exp(-2j * np.pi * beta * x)


def phi_frequency_change(dk: float) -> Callable[[np.ndarray], np.ndarray]:
    """(1/x)(exp(2 pi i dk x) - 1), continuous at 0."""

    def fn(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape, dtype=complex)
        small = np.abs(x) < 1e-12
        out[~small] = (np.exp(2j * np.pi * dk * x[~small]) - 1.0) / x[~small]
        out[small] = 2j * np.pi * dk
        return out

    return fn


def phi_whitney(x0: float, center: float, freq: float) -> Callable[[np.ndarray], np.ndarray]:
    """(t - c)/((x - t)(x - c)) exp(-2 pi i freq t) for a fixed evaluation point x."""
    return lambda t: (t - center) / ((x0 - t) * (x0 - center)) * np.exp(-2j * np.pi * freq * t)


def expansion_decay(gam: np.ndarray, mu: np.ndarray) -> float:
    return float(np.max((1.0 + mu.astype(float) ** 2) * np.abs(gam)))


def as_float(x) -> float:
    return float(Fraction(x)) if not isinstance(x, float) else x


def intervals_mean(values: np.ndarray, bounds: Sequence[tuple[int, int]]) -> np.ndarray:
    return np.stack([values[a:b].mean(axis=0) for a, b in bounds])
