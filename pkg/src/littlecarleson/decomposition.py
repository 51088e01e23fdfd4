"""Carleson partitions, the good/bad split and the selection of w*(x).

Carleson averages are compared through their certified upper value
``value + tail`` (the mu-truncation tail bound), so a member accepted under
condition i) satisfies the untruncated inequality as well.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dyadic import (
    DyadicInterval,
    SmoothingInterval,
    cell_width,
    freq_index,
    grandsons,
)
from .errors import CapacityError, ContractError
from .fourier import M_TRUNC, SampledFunction, gamma_constant
from .operators import phase_means

SON_FAILURE = "son-failure"
SIZE_FLOOR = "size-floor"
MIN_MEMBER_CELLS = 2


def size_floor(n: float) -> Fraction:
    """2^(-[log2 2n] - 1), the smallest admissible member length."""
    if n <= 0:
        raise ValueError("n must be positive")
    if float(n).is_integer():
        e = (2 * int(n)).bit_length() - 1
    else:
        e = math.floor(math.log2(2 * n))
    return Fraction(1, 2 ** (e + 1))


def carleson_upper(f: SampledFunction, w: DyadicInterval, k: int, m_trunc: int = M_TRUNC) -> tuple[float, float]:
    vals, tail = f.spectrum(w).carleson([freq_index(k, w)], m_trunc)
    return float(vals[0]), float(vals[0] + tail)


def amplified_upper(f: SampledFunction, wstar: SmoothingInterval, k: int, m_trunc: int = M_TRUNC) -> float:
    """Certified upper value of C*_{k[w*]}(f, w*)."""
    kk = freq_index(k, wstar)
    best = 0.0
    for g in grandsons(wstar):
        vals, tail = f.spectrum(g).carleson([kk], m_trunc)
        best = max(best, float(vals[0] + tail))
    return best


@dataclass
class CarlesonPartition:
    parent: SmoothingInterval
    k: int
    lam: float
    n: float
    members: tuple
    values: np.ndarray
    uppers: np.ndarray
    accepted_by: tuple
    floor: Fraction = field(default=Fraction(0))

    def __len__(self):
        return len(self.members)

    def member_index(self, x) -> int:
        for i, m in enumerate(self.members):
            if m.lo <= x < m.hi:
                return i
        raise ContractError(f"{x} not covered by the partition")

    def covers_parent(self) -> bool:
        ms = sorted(self.members, key=lambda m: m.lo)
        if ms[0].lo != self.parent.lo or ms[-1].hi != self.parent.hi:
            return False
        return all(a.hi == b.lo for a, b in zip(ms, ms[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["member", "length", "C", "C_upper", "accepted_by"])
        for m, v, u, a in zip(self.members, self.values, self.uppers, self.accepted_by):
            w.writerow([m.label(), repr(float(m.length)), repr(float(v)), repr(float(u)), a])
        return buf.getvalue()


def build_partition(f: SampledFunction, wstar: SmoothingInterval, k: int, lam: float, n: float,
                    m_trunc: int = M_TRUNC) -> CarlesonPartition:
    """Maximal dyadic partition of ``wstar`` under conditions i)-iii).

    Descends from the grandsons. A visited interval always satisfies i); it is
    accepted when it reached the size floor or one of its sons fails i),
    otherwise both sons are visited. If the grandsons are already below the
    size floor they are accepted as they are.
    """
    floor = size_floor(n)
    gs = grandsons(wstar)
    smallest = min(floor, gs[0].length)
    # a one-cell member has its only sample point on the middle-half boundary of both extensions
    if smallest < MIN_MEMBER_CELLS * cell_width(f.n_cells):
        raise CapacityError(
            f"size floor {smallest} is below {MIN_MEMBER_CELLS} grid cells of width {cell_width(f.n_cells)}"
        )
    top = amplified_upper(f, wstar, k, m_trunc)
    if top > lam:
        raise ContractError(
            f"C*_(k[w*]) = {top:.6g} exceeds lambda = {lam:.6g} on {wstar.label()}",
            {"C_star_upper": top, "lambda": lam, "k": k, "wstar": wstar.label()},
        )
    members, values, uppers, why = [], [], [], []
    stack = list(reversed(gs))
    cache = {}

    def c_of(w):
        if w not in cache:
            cache[w] = carleson_upper(f, w, k, m_trunc)
        return cache[w]

    while stack:
        w = stack.pop()
        v, u = c_of(w)
        if w.length <= floor:
            members.append(w), values.append(v), uppers.append(u), why.append(SIZE_FLOOR)
            continue
        sons = w.sons()
        if any(c_of(s)[1] > lam for s in sons):
            members.append(w), values.append(v), uppers.append(u), why.append(SON_FAILURE)
            continue
        stack.extend(reversed(sons))
    return CarlesonPartition(wstar, k, lam, n, tuple(members), np.array(values), np.array(uppers),
                             tuple(why), floor)


@dataclass
class GoodBadSplit:
    good: SampledFunction
    bad: SampledFunction
    partition: CarlesonPartition
    member_means: np.ndarray
    bounds: list

    @property
    def modulated(self) -> SampledFunction:
        return self.good.with_values(self.good.values + self.bad.values)


def good_bad_split(f: SampledFunction, part: CarlesonPartition) -> GoodBadSplit:
    """f_k = g + b on w*, with g the member-wise mean of f_k and b the remainder."""
    i0, i1 = f.cells(part.parent)
    ph = phase_means(part.k, f.n_cells, i0, i1)
    expand = (-1,) + (1,) * len(f.space.shape)
    fk = np.zeros_like(f.values)
    fk[i0:i1] = ph.reshape(expand) * f.values[i0:i1]
    good = np.zeros_like(fk)
    means, bounds = [], []
    for m in part.members:
        a, b = f.cells(m)
        mean = fk[a:b].mean(axis=0)
        good[a:b] = mean
        means.append(mean)
        bounds.append((a, b))
    return GoodBadSplit(
        f.with_values(good, f"g[{f.name}]"),
        f.with_values(fk - good, f"b[{f.name}]"),
        part,
        np.array(means),
        bounds,
    )


def good_part_bound_check(f: SampledFunction, part: CarlesonPartition, split: GoodBadSplit | None = None,
                          tiny: float = 1e-300) -> dict:
    """Ratios ||f_k[w']|| / C_{k[w']}(f, w') over the members.

    ``K`` is the max over all members, ``K_integer`` over members with k|w'| an integer
    (those must stay below gamma since the left side is the mu = 0 term).
    """
    split = split or good_bad_split(f, part)
    norms = f.space.norms(split.member_means)
    ratios = np.where(norms > 0, norms / np.maximum(part.values, tiny), 0.0)
    integer = np.array([(part.k * m.length).denominator == 1 for m in part.members])
    return {
        "K": float(ratios.max()) if ratios.size else 0.0,
        "K_integer": float(ratios[integer].max()) if integer.any() else 0.0,
        "K_fractional": float(ratios[~integer].max()) if (~integer).any() else 0.0,
        "gamma": gamma_constant(),
        "n_members": len(part.members),
    }


def member_arrays(part: CarlesonPartition) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(lo, hi, nu, m) of the members; dyadic endpoints are exact in floating point."""
    arr = part.__dict__.get("_arrays")
    if arr is None:
        lo = np.array([float(w.lo) for w in part.members])
        hi = np.array([float(w.hi) for w in part.members])
        nu = np.array([w.nu for w in part.members])
        m = np.array([w.m for w in part.members])
        arr = (lo, hi, nu, m)
        part.__dict__["_arrays"] = arr
    return arr


def _candidates(part: CarlesonPartition, x):
    lo, hi, nu, m = member_arrays(part)
    xf = float(x)
    length = hi - lo
    plo, phi = float(part.parent.lo), float(part.parent.hi)
    # left extension (2a - b, b) has centre a; right extension (a, 2b - a) has centre b
    left = (np.abs(xf - lo) < length / 2) & (lo - length >= plo)
    right = (np.abs(xf - hi) < length / 2) & (hi + length <= phi)
    return left, right, lo, length, nu, m


def candidate_extensions(part: CarlesonPartition, x) -> list[SmoothingInterval]:
    """Smoothing extensions of members, inside the parent, holding x in their middle half."""
    left, right, _, _, nu, m = _candidates(part, x)
    out = []
    for i in np.flatnonzero(left | right):
        if left[i]:
            out.append(SmoothingInterval(int(nu[i]), int(m[i]) - 1))
        if right[i]:
            out.append(SmoothingInterval(int(nu[i]), int(m[i])))
    return out


def select_wstar_x(part: CarlesonPartition, x) -> SmoothingInterval:
    """Longest candidate extension; ties go to the leftmost."""
    left, right, lo, length, nu, m = _candidates(part, x)
    ext_lo = np.concatenate([lo[left] - length[left], lo[right]])
    ext_len = np.concatenate([length[left], length[right]])
    if ext_lo.size == 0:
        raise ContractError(
            f"no smoothing extension holds x={x} in its middle half",
            {"parent": part.parent.label(), "x": str(x), "n_members": len(part.members)},
        )
    best = np.lexsort((ext_lo, -ext_len))[0]
    idx = np.concatenate([np.flatnonzero(left), np.flatnonzero(right)])[best]
    shift = 1 if best < int(left.sum()) else 0
    return SmoothingInterval(int(nu[idx]), int(m[idx]) - shift)


def excluded_members(part: CarlesonPartition, wsel: SmoothingInterval) -> tuple[list[int], list[int]]:
    """Indices of members disjoint from ``wsel`` and of members only partly inside it."""
    lo, hi, _, _ = member_arrays(part)
    a, b = float(wsel.lo), float(wsel.hi)
    outside = (hi <= a) | (lo >= b)
    inside = (lo >= a) & (hi <= b)
    return np.flatnonzero(outside).tolist(), np.flatnonzero(~outside & ~inside).tolist()


def whitney_ok(part: CarlesonPartition, idx, x) -> bool:
    lo, hi, _, _ = member_arrays(part)
    idx = np.asarray(idx, dtype=int)
    xf = float(x)
    dist = np.maximum(np.maximum(lo[idx] - xf, xf - hi[idx]), 0.0)
    return bool(np.all(dist >= (hi[idx] - lo[idx]) / 2))
