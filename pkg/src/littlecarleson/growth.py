"""The triplet chain (j_s, k_s, w*_s) and the log log n growth experiment.

Per step the difference ||S_{k_s} f(x, w*_s)|| - ||S_{k_{s+1}} f(x, w*_{s+1})|| is
split by the triangle inequality into a change of period (same frequency, smaller
interval) and a change of frequency (same interval). Both are evaluated directly,
so the telescoped bound dominates ||S_n f(x)|| up to rounding.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .decomposition import (
    CarlesonPartition,
    amplified_upper,
    build_partition,
    excluded_members,
    good_bad_split,
    member_arrays,
    select_wstar_x,
    whitney_ok,
)
from .dyadic import ROOT, TORUS, SmoothingInterval, cell_midpoint, cell_range, freq_index, grandsons
from .errors import CarlesonError, ContractError
from .exceptional import jlevel
from .fourier import M_TRUNC, SampledFunction
from .operators import log_kernel, modified_partial_sum

STEP_BUDGET = 64
SLACK = 1e-9


@dataclass(frozen=True)
class Triplet:
    s: int
    j: int  # 0 marks a terminal interval on which f vanishes
    k: int
    wstar: SmoothingInterval
    cstar: float

    @property
    def vanishing(self) -> bool:
        return self.j == 0


@dataclass
class StepRecord:
    s: int
    s_norm: float  # ||S_{k_s} f(x, w*_s)||
    period: float  # ||S_{k_s} f(x, w*_s) - S_{k_s} f(x, w*_{s+1})||
    freq: float  # | ||S_{k_s} f(x, w*_{s+1})|| - ||S_{k_{s+1}} f(x, w*_{s+1})|| |
    freq_bound: float  # sum over grandsons of w*_{s+1} of C_{k_{s+1}[w']}
    A: float
    B1: float
    B2: float
    B_partial: float
    n_excluded: int
    n_partial: int
    whitney: bool
    level_next: float  # 2^(1 - j_{s+1}) lambda


@dataclass
class GrowthRecord:
    x: Fraction
    n: int
    lam: float
    chain: list
    steps: list
    direct: float
    final: float
    degenerate: bool = False
    violations: list = field(default_factory=list)

    @property
    def telescoped(self) -> float:
        return self.final + sum(st.period + st.freq for st in self.steps)

    @property
    def length(self) -> int:
        return len(self.chain) - 1

    def invariants_ok(self) -> bool:
        return not self.violations


def _sum(f: SampledFunction, k: int, w, x) -> np.ndarray:
    return modified_partial_sum(f, k, w, x)[0].payload


class ChainBuilder:
    """Builds chains for one function and threshold, sharing partitions across x and n."""

    def __init__(self, f: SampledFunction, lam: float, m_trunc: int = M_TRUNC, step_budget: int = STEP_BUDGET):
        self.f = f
        self.lam = lam
        self.m_trunc = m_trunc
        self.step_budget = step_budget
        self._parts: dict = {}
        self._splits: dict = {}
        self._cstar: dict = {}

    def cstar(self, k: int, w: SmoothingInterval) -> float:
        key = (freq_index(k, w), w)
        if key not in self._cstar:
            self._cstar[key] = amplified_upper(self.f, w, k, self.m_trunc)
        return self._cstar[key]

    def partition(self, k: int, w: SmoothingInterval, j: int, n: int) -> CarlesonPartition:
        key = (k, w, j, n)
        if key not in self._parts:
            self._parts[key] = build_partition(self.f, w, k, math.ldexp(self.lam, 1 - j), n, self.m_trunc)
        return self._parts[key]

    def split(self, part: CarlesonPartition):
        key = id(part)
        if key not in self._splits:
            self._splits[key] = (part, good_bad_split(self.f, part))
        return self._splits[key][1]

    def chain(self, x: Fraction, n: int) -> tuple[list[Triplet], list[CarlesonPartition], list[str]]:
        """Triplets from (n, (-2, 2)) until k = 0, the partitions used, and invariant violations."""
        k, w = n, ROOT
        cs = self.cstar(k, w)
        triplets = [Triplet(-1, jlevel(cs, self.lam), k, w, cs)]
        parts, bad = [], []
        while triplets[-1].k > 0:
            t = triplets[-1]
            if len(triplets) > self.step_budget:
                raise ContractError("chain exceeded the step budget", {"x": str(x), "n": n, "steps": len(triplets)})
            part = self.partition(t.k, t.wstar, t.j, n)
            parts.append(part)
            w_next = select_wstar_x(part, x)
            k_frac = 4 * Fraction(freq_index(t.k, w_next)) / w_next.length
            if k_frac.denominator != 1:
                raise ContractError("next frequency is not an integer", {"k": str(k_frac), "wstar": w_next.label()})
            k_next = int(k_frac)
            cs = self.cstar(k_next, w_next)
            s = t.s + 1
            if cs == 0:
                # f vanishes on w_next: every later modified partial sum is zero, so stop here
                triplets.append(Triplet(s, 0, k_next, w_next, 0.0))
                break
            j_next = jlevel(cs, self.lam)
            if not j_next < t.j:
                where = "terminal " if k_next == 0 else ""
                bad.append(f"{where}s={s}: j {t.j} -> {j_next} (k_next={k_next}, |w*|={w_next.length})")
            if not k_next <= t.k:
                bad.append(f"s={s}: k increased {t.k} -> {k_next}")
            if not (t.wstar.contains(w_next) and w_next != t.wstar):
                bad.append(f"s={s}: w* not strictly nested")
            if (Fraction(k_next) * w_next.length / 4).denominator != 1:
                bad.append(f"s={s}: k|w*|/4 not an integer")
            if not abs(x - w_next.center) < w_next.length / 4:
                bad.append(f"s={s}: x outside the middle half")
            triplets.append(Triplet(s, j_next, k_next, w_next, cs))
        return triplets, parts, bad

    def member_cells(self, part: CarlesonPartition) -> tuple[np.ndarray, np.ndarray]:
        lo, hi, _, _ = member_arrays(part)
        n = self.f.n_cells
        return ((lo + 2) * n / 4).astype(np.int64), ((hi + 2) * n / 4).astype(np.int64)

    def kernel_terms(self, part: CarlesonPartition, split, idx, xi: int) -> tuple[float, float]:
        """B1 and B2: member-wise integrals of (t - c)/((x - t)(x - c)) against f_k and g."""
        if not len(idx):
            return 0.0, 0.0
        f = self.f
        a, b = self.member_cells(part)
        a, b = a[idx], b[idx]
        i0, i1 = int(a.min()), int(b.max())
        cells = np.arange(i0, i1)
        owner = np.full(i1 - i0, -1)
        for r, (s0, s1) in enumerate(zip(a, b)):
            owner[s0 - i0 : s1 - i0] = r
        keep = owner >= 0
        cells, owner = cells[keep], owner[keep]
        # x - c(w') in cell units is (xi + 1/2) - (a + b)/2
        gap = (xi + 0.5) - 0.5 * (a + b)
        ker = log_kernel(xi, i0, i1)[cells - i0] - 1.0 / gap[owner]
        expand = (-1,) + (1,) * len(f.space.shape)
        g = split.good.values[cells]
        fk = g + split.bad.values[cells]
        starts = np.concatenate([[0], np.flatnonzero(np.diff(owner)) + 1])
        s1 = np.add.reduceat(ker.reshape(expand) * fk, starts, axis=0)
        s2 = np.add.reduceat(ker.reshape(expand) * g, starts, axis=0)
        return float(f.space.norms(s1).sum()), float(f.space.norms(s2).sum())

    def step(self, t: Triplet, t_next: Triplet, part: CarlesonPartition, x) -> StepRecord:
        f = self.f
        s_here = _sum(f, t.k, t.wstar, x)
        s_inner = _sum(f, t.k, t_next.wstar, x)
        s_next = _sum(f, t_next.k, t_next.wstar, x)
        period = float(f.space.norms(s_here - s_inner))
        freq = abs(float(f.space.norms(s_inner)) - float(f.space.norms(s_next)))
        fb = 0.0
        for g in grandsons(t_next.wstar):
            vals, tail = f.spectrum(g).carleson([freq_index(t_next.k, g)], self.m_trunc)
            fb += float(vals[0])
        split = self.split(part)
        outside, partial = excluded_members(part, t_next.wstar)
        whit = whitney_ok(part, outside, x)
        if not whit:
            raise ContractError("Whitney property fails for an excluded member", {"x": str(x), "s": t.s})
        xi = int((Fraction(x) + 2) / Fraction(4, f.n_cells))
        i0, i1 = f.cells(t.wstar)
        j0, j1 = f.cells(t_next.wstar)
        ker = log_kernel(xi, i0, i1)
        ker[j0 - i0 : j1 - i0] = 0.0
        expand = (-1,) + (1,) * len(f.space.shape)
        A = float(f.space.norms((ker.reshape(expand) * split.good.values[i0:i1]).sum(axis=0)))
        b1, b2 = self.kernel_terms(part, split, outside, xi)
        bp = 0.0
        ma, mb = self.member_cells(part)
        for i in partial:
            a, b = int(ma[i]), int(mb[i])
            kk = log_kernel(xi, a, b)
            kk[max(j0, a) - a : min(j1, b) - a] = 0.0
            bp += float(f.space.norms((kk.reshape(expand) * split.bad.values[a:b]).sum(axis=0)))
        return StepRecord(t.s, float(f.space.norms(s_here)), period, freq, fb, A, b1, b2, bp,
                          len(outside), len(partial), whit,
                          0.0 if t_next.vanishing else math.ldexp(self.lam, 1 - t_next.j))

    def record(self, x: Fraction, n: int) -> GrowthRecord:
        f = self.f
        direct = float(f.space.norms(_sum(f, n, ROOT, x)))
        if self.lam <= 0:
            if direct > 0:
                # ||f|| <= 1 everywhere makes the L log L modular vanish while S_n f does not
                raise ContractError("threshold is zero but the partial sum is not", {"x": str(x), "n": n})
            return GrowthRecord(x, n, self.lam, [], [], direct, 0.0, degenerate=True)
        chain, parts, bad = self.chain(x, n)
        steps = [self.step(chain[i], chain[i + 1], parts[i], x) for i in range(len(chain) - 1)]
        final = float(f.space.norms(_sum(f, chain[-1].k, chain[-1].wstar, x)))
        return GrowthRecord(x, n, self.lam, chain, steps, direct, final, violations=bad)


def halton_cells(n_cells: int, count: int, excluded=None) -> list[int]:
    """Deterministic well-spread torus cells (golden-ratio sequence), skipping excluded ones."""
    i0, i1 = cell_range(TORUS, n_cells)
    m = i1 - i0
    golden = (math.sqrt(5) - 1) / 2
    out, seen = [], set()
    for i in range(8 * m):
        c = i0 + int(((0.5 + i * golden) % 1.0) * m)
        if c in seen:
            continue
        seen.add(c)
        if excluded is not None and excluded[c - i0]:
            continue
        out.append(c)
        if len(out) == count or len(seen) == m:
            break
    return out


@dataclass
class GrowthRun:
    name: str
    lam: float
    records: list
    failures: list

    def ratio(self) -> float:
        """M: the largest ||S_n f(x)|| / log log n over the sample."""
        vals = [r.direct / math.log(math.log(r.n)) for r in self.records]
        return max(vals) if vals else 0.0

    def summary(self) -> list[dict]:
        rows = []
        for n in sorted({r.n for r in self.records}):
            rs = [r for r in self.records if r.n == n]
            d = max(r.direct for r in rs)
            rows.append({"n": n, "max_direct": d, "max_bound": max(r.telescoped for r in rs),
                         "loglog": math.log(math.log(n)), "ratio": d / math.log(math.log(n))})
        return rows

    def steps_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "n", "s", "j", "k", "wstar", "S_norm", "period", "freq", "freq_bound", "A", "B1", "B2",
                    "B_partial", "excluded", "partial", "level_next"])
        for r in self.records:
            for st, t in zip(r.steps, r.chain):
                w.writerow([repr(float(r.x)), r.n, st.s, t.j, t.k, t.wstar.label(), repr(st.s_norm),
                            repr(st.period), repr(st.freq), repr(st.freq_bound), repr(st.A), repr(st.B1),
                            repr(st.B2), repr(st.B_partial), st.n_excluded, st.n_partial, repr(st.level_next)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "max_direct", "max_bound", "loglog", "ratio"])
        for row in self.summary():
            w.writerow([row["n"], repr(row["max_direct"]), repr(row["max_bound"]), repr(row["loglog"]),
                        repr(row["ratio"])])
        return buf.getvalue()


def growth_experiment(f: SampledFunction, lam: float, cells, n_grid, m_trunc: int = M_TRUNC) -> GrowthRun:
    """Chains and step deltas for every sampled cell midpoint and n; failures are collected, not raised."""
    builder = ChainBuilder(f, lam, m_trunc)
    records, failures = [], []
    for c in cells:
        x = cell_midpoint(c, f.n_cells)
        for n in n_grid:
            try:
                records.append(builder.record(x, n))
            except CarlesonError as e:
                failures.append({"x": str(x), "n": n, "error": type(e).__name__, "message": str(e)})
    return GrowthRun(f.name, lam, records, failures)
