"""Interval combinatorics: dyadic intervals, smoothing intervals, frequency maps.

Endpoints are exact dyadic rationals (:class:`fractions.Fraction`), so
containment, adjacency and the integer-part frequency map never suffer from
rounding. Floats appear only when an interval is handed to quadrature.

A dyadic interval of generation ``nu`` and index ``m`` is
``[m 2^-nu, (m+1) 2^-nu)``. For ``nu >= 0`` and intervals inside (-1, 1) these
are exactly the intervals ``w_{j,nu}`` with ``j = m + 2^nu + 1``. The smoothing
interval ``(nu, m)`` is the union of the dyadic intervals ``(nu, m)`` and
``(nu, m + 1)``. The root smoothing interval (-2, 2) is ``(-1, -1)``: its two
halves are the generation -1 intervals (-2, 0) and (0, 2), and its grandsons
(-2,-1), (-1,0), (0,1), (1,2) are ordinary generation 0 dyadic intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import AlignmentError, CapacityError

NU_MAX = 20
NU_MIN = -1

DOMAIN_LO = Fraction(-2)
DOMAIN_HI = Fraction(2)


@lru_cache(maxsize=None)
def _pow2(nu: int) -> Fraction:
    return Fraction(2) ** (-nu)


@dataclass(frozen=True, order=True)
class Interval:
    """A half-open interval with exact endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if not lo < hi:
            raise ValueError(f"degenerate interval ({lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def center(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, other) -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def contains_point(self, x) -> bool:
        return self.lo <= x < self.hi

    def dist(self, x) -> Fraction:
        if x < self.lo:
            return self.lo - x
        if x > self.hi:
            return x - self.hi
        return Fraction(0)

    def as_interval(self) -> "Interval":
        return Interval(self.lo, self.hi)

    def label(self) -> str:
        return interval_label(self.lo, self.hi)


TORUS = Interval(Fraction(-1, 2), Fraction(1, 2))
DOMAIN = Interval(DOMAIN_LO, DOMAIN_HI)


def interval_label(lo: Fraction, hi: Fraction) -> str:
    """Textual notation ``(a/2^nu, b/2^nu)`` with a common power-of-two denominator."""
    den = max(Fraction(lo).denominator, Fraction(hi).denominator)
    nu = den.bit_length() - 1
    a = Fraction(lo) * den
    b = Fraction(hi) * den
    return f"({int(a)}/2^{nu}, {int(b)}/2^{nu})"


@dataclass(frozen=True, order=True)
class DyadicInterval:
    nu: int
    m: int

    def __post_init__(self):
        if self.nu > NU_MAX:
            raise CapacityError(f"generation {self.nu} exceeds NU_MAX={NU_MAX}")
        if self.nu < NU_MIN:
            raise CapacityError(f"generation {self.nu} below {NU_MIN}")

    @property
    def lo(self) -> Fraction:
        return self.m * _pow2(self.nu)

    @property
    def hi(self) -> Fraction:
        return (self.m + 1) * _pow2(self.nu)

    @property
    def length(self) -> Fraction:
        return _pow2(self.nu)

    @property
    def center(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def sons(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return DyadicInterval(self.nu + 1, 2 * self.m), DyadicInterval(self.nu + 1, 2 * self.m + 1)

    def father(self) -> "DyadicInterval":
        return DyadicInterval(self.nu - 1, self.m // 2)

    def as_interval(self) -> Interval:
        return Interval(self.lo, self.hi)

    def contains(self, other) -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def contains_point(self, x) -> bool:
        return self.lo <= x < self.hi

    def dist(self, x) -> Fraction:
        return self.as_interval().dist(x)

    def label(self) -> str:
        return interval_label(self.lo, self.hi)

    @property
    def j(self) -> int:
        """Index in the (-1, 1) family, 1 <= j <= 2^(nu+1) for intervals inside (-1, 1)."""
        return self.m + 2**self.nu + 1 if self.nu >= 0 else self.m


@dataclass(frozen=True, order=True)
class SmoothingInterval:
    nu: int
    m: int

    def __post_init__(self):
        if self.nu + 1 > NU_MAX:
            raise CapacityError(f"smoothing generation {self.nu} exceeds NU_MAX={NU_MAX}")
        if self.nu < NU_MIN:
            raise CapacityError(f"generation {self.nu} below {NU_MIN}")

    @property
    def left(self) -> DyadicInterval:
        return DyadicInterval(self.nu, self.m)

    @property
    def right(self) -> DyadicInterval:
        return DyadicInterval(self.nu, self.m + 1)

    @property
    def lo(self) -> Fraction:
        return self.m * _pow2(self.nu)

    @property
    def hi(self) -> Fraction:
        return (self.m + 2) * _pow2(self.nu)

    @property
    def length(self) -> Fraction:
        return 2 * _pow2(self.nu)

    @property
    def center(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def is_root(self) -> bool:
        return self == ROOT

    def as_interval(self) -> Interval:
        return Interval(self.lo, self.hi)

    def contains(self, other) -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def contains_point(self, x) -> bool:
        return self.lo <= x < self.hi

    def label(self) -> str:
        return interval_label(self.lo, self.hi)


ROOT = SmoothingInterval(-1, -1)


def grandsons(wstar: SmoothingInterval) -> list[DyadicInterval]:
    """The four dyadic intervals of length |w*|/4 tiling w*, left to right."""
    nu = wstar.nu + 1
    if nu > NU_MAX:
        raise CapacityError(f"grandsons of {wstar.label()} exceed NU_MAX={NU_MAX}")
    m0 = 2 * wstar.m
    return [DyadicInterval(nu, m0 + i) for i in range(4)]


def middle_half_contains(gamma, x) -> bool:
    """True iff ``x`` lies in the open middle half of ``gamma``."""
    x = Fraction(x) if not isinstance(x, float) else x
    return abs(x - gamma.center) < gamma.length / 4


def freq_index(k: int, w) -> int:
    """Integer-part frequency map: floor(k|w|) for dyadic, floor(k|w*|/4) for smoothing."""
    if k < 0:
        raise ValueError("frequency index is defined for k >= 0")
    if isinstance(w, SmoothingInterval):
        return math.floor(k * w.length / 4)
    return math.floor(k * w.length)


def smoothing_extensions(w) -> tuple:
    """The two intervals (2a - b, b) and (a, 2b - a) of twice the length.

    Dyadic input yields :class:`SmoothingInterval` objects; any other interval
    yields plain :class:`Interval` objects.
    """
    if isinstance(w, DyadicInterval):
        return SmoothingInterval(w.nu, w.m - 1), SmoothingInterval(w.nu, w.m)
    a, b = w.lo, w.hi
    return Interval(2 * a - b, b), Interval(a, 2 * b - a)


def smoothing_from_interval(iv) -> SmoothingInterval:
    """Recover the smoothing interval with the given exact endpoints."""
    half = iv.length / 2
    nu = -int(math.log2(half))
    if _pow2(nu) != half:
        raise AlignmentError(f"{iv} is not a smoothing interval")
    m = iv.lo / half
    if m.denominator != 1:
        raise AlignmentError(f"{iv} is not aligned to generation {nu}")
    return SmoothingInterval(nu, int(m))


# grid helpers -----------------------------------------------------------------


def cell_width(n_cells: int) -> Fraction:
    return Fraction(4, n_cells)


@lru_cache(maxsize=1 << 16)
def cell_range(w, n_cells: int) -> tuple[int, int]:
    """Index range [i0, i1) of the grid cells of (-2, 2) tiling ``w``."""
    h = cell_width(n_cells)
    a = (Fraction(w.lo) - DOMAIN_LO) / h
    b = (Fraction(w.hi) - DOMAIN_LO) / h
    if a.denominator != 1 or b.denominator != 1:
        raise AlignmentError(f"interval {interval_label(w.lo, w.hi)} is not aligned with N={n_cells}")
    i0, i1 = int(a), int(b)
    if i0 < 0 or i1 > n_cells:
        raise AlignmentError(f"interval {interval_label(w.lo, w.hi)} leaves the domain (-2, 2)")
    return i0, i1


def cell_midpoint(i: int, n_cells: int) -> Fraction:
    h = cell_width(n_cells)
    return DOMAIN_LO + (i + Fraction(1, 2)) * h


def midpoint_cell(x, n_cells: int) -> int:
    """Cell index whose midpoint is ``x``; raises if ``x`` is not a midpoint."""
    h = cell_width(n_cells)
    if isinstance(x, float):
        t = (x + 2.0) / float(h) - 0.5
        i = int(round(t))
        if abs(t - i) > 1e-9:
            raise AlignmentError(f"x={x} is not a cell midpoint for N={n_cells}")
    else:
        t = (Fraction(x) - DOMAIN_LO) / h - Fraction(1, 2)
        if t.denominator != 1:
            raise AlignmentError(f"x={x} is not a cell midpoint for N={n_cells}")
        i = int(t)
    if not 0 <= i < n_cells:
        raise AlignmentError(f"x={x} is outside the domain")
    return i


def dyadic_containing(x, nu: int) -> DyadicInterval:
    return DyadicInterval(nu, math.floor(Fraction(x) / _pow2(nu)))


def generation_of_length(length) -> int:
    nu = -int(math.log2(Fraction(length)))
    if _pow2(nu) != Fraction(length):
        raise AlignmentError(f"{length} is not a power of two")
    return nu
