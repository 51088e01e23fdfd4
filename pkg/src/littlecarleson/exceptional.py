"""The threshold lambda, the four exceptional sets and the pair families behind them.

Masks are boolean arrays over the grid cells of the torus (-1/2, 1/2). Sets built
from a smoothing interval w* live inside w* and are empty elsewhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .decomposition import amplified_upper, build_partition, good_bad_split, size_floor
from .dyadic import DOMAIN, TORUS, SmoothingInterval, cell_range
from .errors import CapacityError, ContractError
from .fourier import M_TRUNC, SampledFunction, loglog_modular, phi_density
from .operators import (
    calibrate_c0,
    delta_function,
    log_kernel,
    maximal_hilbert_cells,
)

SIGMA1, SIGMA2, SIGMA3, SIGMA4, UNION = "S1", "S2", "S3", "S4", "union"
PAIR_BUDGET = 100_000


@dataclass
class ExceptionalSet:
    tag: str
    mask: np.ndarray
    n_cells: int
    params: dict = field(default_factory=dict)

    @property
    def cell(self) -> float:
        return 4.0 / self.n_cells

    @property
    def measure(self) -> float:
        return float(self.mask.sum()) * self.cell

    def runs(self) -> list[tuple[int, int]]:
        """Maximal runs [start, stop) of masked torus cells, as grid cell indices."""
        i0, _ = cell_range(TORUS, self.n_cells)
        m = np.concatenate([[False], self.mask, [False]]).astype(np.int8)
        d = np.diff(m)
        starts, stops = np.flatnonzero(d == 1), np.flatnonzero(d == -1)
        return [(int(a) + i0, int(b) + i0) for a, b in zip(starts, stops)]

    def to_json(self) -> str:
        return json.dumps({"tag": self.tag, "n_cells": self.n_cells, "runs": self.runs(),
                           "measure": self.measure, "params": self.params}, sort_keys=True)

    def contains_cell(self, i: int) -> bool:
        i0, i1 = cell_range(TORUS, self.n_cells)
        return i0 <= i < i1 and bool(self.mask[i - i0])


def empty_set(tag: str, n_cells: int, **params) -> ExceptionalSet:
    i0, i1 = cell_range(TORUS, n_cells)
    return ExceptionalSet(tag, np.zeros(i1 - i0, dtype=bool), n_cells, params)


def union(sets, n_cells: int) -> ExceptionalSet:
    out = empty_set(UNION, n_cells)
    for s in sets:
        out.mask |= s.mask
    return out


def total_measure(sets) -> dict:
    sets = list(sets)
    parts = {s.tag: s.measure for s in sets}
    if sets:
        parts[UNION] = union(sets, sets[0].n_cells).measure
    else:
        parts[UNION] = 0.0
    return parts


def threshold(f: SampledFunction, eps: float, delta: float) -> float:
    """lambda = ||f||_{L(log L)^(1+delta)} / eps, the modular taken over the torus."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return loglog_modular(f, TORUS, 1.0 + delta) / eps


# Sigma 1 ---------------------------------------------------------------------------


def maximal_dyadic_blocks(density: np.ndarray, lam: float, max_cells: int) -> list[tuple[int, int]]:
    """Maximal aligned dyadic blocks [a, b) of cells whose mean density exceeds ``lam``."""
    n = density.shape[0]
    covered = np.zeros(n, dtype=bool)
    out = []
    size = max_cells
    while size >= 1:
        means = density.reshape(n // size, size).mean(axis=1)
        for blk in np.flatnonzero(means > lam):
            a = blk * size
            if not covered[a]:
                out.append((a, a + size))
                covered[a : a + size] = True
        size //= 2
    return sorted(out)


def sigma1(f: SampledFunction, eps: float, delta: float, lam: float | None = None) -> ExceptionalSet:
    """Concentric 7-fold dilations of the maximal dyadic intervals of {M_d phi > lambda}."""
    lam = threshold(f, eps, delta) if lam is None else lam
    n = f.n_cells
    if lam <= 0:
        return empty_set(SIGMA1, n, eps=eps, delta=delta, lam=lam)
    phi = phi_density(f.cell_norms(), 1.0 + delta)
    blocks = maximal_dyadic_blocks(phi, lam, n // 2)
    i0, i1 = cell_range(TORUS, n)
    twice_mid = 2 * np.arange(i0, i1) + 1  # cell midpoints in half-cell units
    mask = np.zeros(i1 - i0, dtype=bool)
    for a, b in blocks:
        c2, half2 = a + b, 7 * (b - a)  # centre and 7|I|/2 in half-cell units
        mask |= (twice_mid > c2 - half2) & (twice_mid < c2 + half2)
    return ExceptionalSet(SIGMA1, mask, n, {"eps": eps, "delta": delta, "lam": lam, "blocks": len(blocks)})


def blocks_of(f: SampledFunction, eps: float, delta: float, lam: float | None = None) -> list[tuple[int, int]]:
    lam = threshold(f, eps, delta) if lam is None else lam
    return maximal_dyadic_blocks(phi_density(f.cell_norms(), 1.0 + delta), lam, f.n_cells // 2)


# Sigma 2 ---------------------------------------------------------------------------


def torus_hstar_profile(f: SampledFunction) -> np.ndarray:
    """H*_T f at every torus cell; cached on the function."""
    key = "hstar_torus"
    if key not in f._cache:
        i0, i1 = cell_range(TORUS, f.n_cells)
        f._cache[key] = maximal_hilbert_cells(f.values, f.space, i0, i1, np.arange(i0, i1))
    return f._cache[key]


def sigma2(f: SampledFunction, eps: float, delta: float, lam: float | None = None,
           profile: np.ndarray | None = None) -> ExceptionalSet:
    """{H*_T f > lambda}. ``profile`` may carry a precomputed H*_T f (e.g. of an unscaled f)."""
    lam = threshold(f, eps, delta) if lam is None else lam
    prof = torus_hstar_profile(f) if profile is None else profile
    return ExceptionalSet(SIGMA2, prof > lam, f.n_cells, {"eps": eps, "delta": delta, "lam": lam})


# level bookkeeping ------------------------------------------------------------------


def jlevel(cstar: float, lam: float) -> int:
    """The unique j >= 1 with 2^-j lam < cstar <= 2^(1-j) lam."""
    if not cstar > 0:
        raise ContractError("C* = 0: the pair is degenerate (f vanishes on w*)", {"C_star": cstar})
    if cstar > lam:
        raise ContractError(f"C* = {cstar:.6g} exceeds lambda = {lam:.6g}", {"C_star": cstar, "lambda": lam})
    j = 1 + math.floor(math.log2(lam / cstar))
    while j > 1 and cstar > math.ldexp(lam, 1 - j):
        j -= 1
    while cstar <= math.ldexp(lam, -j):
        j += 1
    return j


def r_lambda(lam: float, delta: float, b: float, c0: float) -> float:
    e = 1.0 / (1.0 + delta / 2)
    return (3.0 / c0) * lam**e + (b / c0) * 2**e * lam ** (e - 1.0 / (1.0 + delta))


def c_lambda_delta(lam: float, delta: float, b: float, B: float, tol: float = 1e-15) -> float:
    """B * sum_{j >= 1} exp(b lam^(-1/(1+delta)) (2^(j/(1+delta)) - 2^(j/(1+delta/2))))."""
    scale = b * lam ** (-1.0 / (1.0 + delta))
    p, q = 1.0 / (1.0 + delta), 1.0 / (1.0 + delta / 2)
    total, j = 0.0, 1
    while True:
        term = math.exp(scale * (2.0 ** (j * p) - 2.0 ** (j * q)))
        total += term
        if term < tol or j > 10_000:
            break
        j += 1
    return B * total


def level_thresholds(level: float, R: float, delta: float, n: float) -> tuple[float, float]:
    """Thresholds of Sigma3 (for H* g) and Sigma4 (for Delta) at the level 2^(1-j) lambda."""
    e = 1.0 / (1.0 + delta / 2)
    ll = math.log(math.log(n))
    return R * level ** (1.0 - e) * ll, R * level ** (-e) * ll


# pair families -----------------------------------------------------------------------


@dataclass(frozen=True)
class Pair:
    k: int
    wstar: SmoothingInterval
    cstar: float
    j: int


def smoothing_intervals_meeting_torus(min_length: Fraction) -> list[SmoothingInterval]:
    out = []
    nu = -1
    while 2 * Fraction(2) ** (-nu) >= min_length:
        step = Fraction(2) ** (-nu)
        m_lo = math.floor(DOMAIN.lo / step)
        m_hi = math.floor(DOMAIN.hi / step) - 2
        for m in range(m_lo, m_hi + 1):
            w = SmoothingInterval(nu, m)
            if w.hi > TORUS.lo and w.lo < TORUS.hi:
                out.append(w)
        nu += 1
    return out


def wstar_inside(w: SmoothingInterval, s1: ExceptionalSet) -> bool:
    """Is every cell of w* a cell of Sigma1? Cells off the torus never are."""
    i0, i1 = cell_range(w, s1.n_cells)
    t0, t1 = cell_range(TORUS, s1.n_cells)
    if i0 < t0 or i1 > t1:
        return False
    return bool(s1.mask[i0 - t0 : i1 - t0].all())


def pair_family(f: SampledFunction, n: float, lam: float, s1: ExceptionalSet, budget: int = PAIR_BUDGET,
                m_trunc: int = M_TRUNC) -> tuple[list[Pair], list[dict]]:
    """Pairs (k, w*) of A_n with their j-levels; pairs with C* > lambda are returned as violations."""
    floor_len = 2 * size_floor(n)
    pairs, violations = [], []
    count = 0
    for w in smoothing_intervals_meeting_torus(floor_len):
        if wstar_inside(w, s1):
            continue
        step = Fraction(4) / w.length
        if step.denominator != 1:
            step = Fraction(math.ceil(step))
        step = int(step) if step >= 1 else 1
        for k in range(step, int(math.floor(n)) + 1, step):
            if (Fraction(k) * w.length / 4).denominator != 1:
                continue
            count += 1
            if count > budget:
                raise CapacityError(f"pair family for n={n:.6g} exceeds the budget of {budget} pairs")
            cs = amplified_upper(f, w, k, m_trunc)
            if cs == 0:
                continue
            if cs > lam:
                violations.append({"k": k, "wstar": w.label(), "C_star_upper": cs, "lambda": lam})
                continue
            pairs.append(Pair(k, w, cs, jlevel(cs, lam)))
    return pairs, violations


# Sigma 3 and Sigma 4 -------------------------------------------------------------------


def hilbert_majorant(values: np.ndarray, space, i0: int, i1: int, cells) -> np.ndarray:
    """sum_c |log kernel weight| ||g_c||, which dominates every admissible truncation."""
    nrm = space.norms(values[i0:i1])
    return np.array([np.abs(log_kernel(xi, i0, i1)) @ nrm for xi in cells])


def pair_sets(f: SampledFunction, pair: Pair, lam: float, n: float, R: float, delta: float,
              m_trunc: int = M_TRUNC) -> tuple[np.ndarray, np.ndarray, dict]:
    """Sigma3(k, w*, n) and Sigma4(k, w*, n) as torus masks, with a small record."""
    level = math.ldexp(lam, 1 - pair.j)
    t3, t4 = level_thresholds(level, R, delta, n)
    part = build_partition(f, pair.wstar, pair.k, level, n, m_trunc)
    split = good_bad_split(f, part)
    t0, t1 = cell_range(TORUS, f.n_cells)
    w0, w1 = cell_range(pair.wstar, f.n_cells)
    c0, c1 = max(w0, t0), min(w1, t1)
    m3 = np.zeros(t1 - t0, dtype=bool)
    m4 = np.zeros(t1 - t0, dtype=bool)
    cells = np.arange(c0, c1)
    if cells.size:
        g = split.good.values
        maj = hilbert_majorant(g, f.space, w0, w1, cells)
        need = cells[maj > t3]
        if need.size:
            hv = maximal_hilbert_cells(g, f.space, w0, w1, need)
            m3[need[hv > t3] - t0] = True
        dv = delta_function(part, f.midpoints[cells])
        m4[cells[dv > t4] - t0] = True
    rec = {"k": pair.k, "wstar": pair.wstar.label(), "j": pair.j, "members": len(part),
           "S3": float(m3.sum()) * f.h, "S4": float(m4.sum()) * f.h, "length": float(pair.wstar.length)}
    return m3, m4, rec


def m_range(C: float, eps: float, n_max: float, m_floor: int | None = None) -> list[int]:
    lo = max(1, math.ceil(C / eps)) if m_floor is None else m_floor
    hi = math.floor(math.log(n_max))
    return list(range(lo, hi + 1))


def sigma34(f: SampledFunction, eps: float, delta: float, n_max: float, lam: float, s1: ExceptionalSet,
            b: float, B: float, c0: float, m_floor: int | None = None, budget: int = PAIR_BUDGET,
            m_trunc: int = M_TRUNC) -> tuple[ExceptionalSet, ExceptionalSet, dict]:
    """Union over m in the truncated index set and (k, w*) in A_{e^m} of the per-pair sets."""
    n_cells = f.n_cells
    R = r_lambda(lam, delta, b, c0) if lam > 0 else math.inf
    C = c_lambda_delta(lam, delta, b, B) if lam > 0 else math.inf
    params = {"eps": eps, "delta": delta, "lam": lam, "R": R, "C": C, "n_max": n_max}
    s3, s4 = empty_set(SIGMA3, n_cells, **params), empty_set(SIGMA4, n_cells, **params)
    info = {"R": R, "C": C, "m_values": [], "vacuous": True, "per_n": [], "violations": []}
    if lam <= 0:
        return s3, s4, info
    ms = m_range(C, eps, n_max, m_floor)
    info["m_values"] = ms
    info["vacuous"] = not ms
    for m in ms:
        n = math.exp(m)
        pairs, viol = pair_family(f, n, lam, s1, budget, m_trunc)
        info["violations"].extend(viol)
        total, per_j = 0.0, {}
        for pr in pairs:
            m3, m4, rec = pair_sets(f, pr, lam, n, R, delta, m_trunc)
            s3.mask |= m3
            s4.mask |= m4
            total += rec["S3"] + rec["S4"]
            per_j[pr.j] = per_j.get(pr.j, 0.0) + rec["length"]
        info["per_n"].append({"m": m, "n": n, "pairs": len(pairs), "sum_S34": total,
                              "bound_shape": C / math.log(n) ** 2, "length_by_j": per_j})
    return s3, s4, info


# pipeline -------------------------------------------------------------------------------


def calibrate_corpus_c0(functions) -> tuple[float, list]:
    """Fit c0 once over the torus H* profiles of a corpus."""
    profiles, sups, lengths = [], [], []
    for f in functions:
        prof = torus_hstar_profile(f)
        profiles.append(prof)
        sups.append(float(f.cell_norms().max()))
        lengths.append(1.0)
    return calibrate_c0(profiles, sups, 4.0 / functions[0].n_cells, lengths)


@dataclass
class ExceptionalRun:
    lam: float
    sets: list
    info: dict

    @property
    def union(self) -> ExceptionalSet:
        return union(self.sets, self.sets[0].n_cells)

    def measures(self) -> dict:
        return total_measure(self.sets)


def exceptional_sets(f: SampledFunction, eps: float, delta: float, n_max: float, b: float, B: float, c0: float,
                     m_floor: int | None = None, profile: np.ndarray | None = None,
                     budget: int = PAIR_BUDGET, m_trunc: int = M_TRUNC) -> ExceptionalRun:
    lam = threshold(f, eps, delta)
    s1 = sigma1(f, eps, delta, lam)
    s2 = sigma2(f, eps, delta, lam, profile) if lam > 0 else empty_set(SIGMA2, f.n_cells)
    s3, s4, info = sigma34(f, eps, delta, n_max, lam, s1, b, B, c0, m_floor, budget, m_trunc)
    return ExceptionalRun(lam, [s1, s2, s3, s4], info)
