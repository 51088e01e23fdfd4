"""Singular and maximal operators on piecewise-constant functions.

Every kernel is integrated exactly over each cell (``log|x-a| - log|x-b|`` for
``1/(x-y)``). Evaluation points are cell midpoints, so the principal value of
the cell containing ``x`` vanishes by symmetry and contributes zero.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import linregress

from .dyadic import DOMAIN, cell_range, midpoint_cell
from .errors import ContractError, ResolutionError
from .fourier import SampledFunction
from .values import NormedValue, Space

RESOLUTION_LIMIT = 0.5


@dataclass(frozen=True)
class OperatorSample:
    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.iscomplexobj(self.values):
            return
        if np.any(np.asarray(self.values) < 0):
            raise ContractError("maximal operator outputs must be nonnegative")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in zip(self.points, self.values):
            w.writerow([repr(float(x)), repr(float(v))])
        return buf.getvalue()


def log_kernel(xi: int, i0: int, i1: int) -> np.ndarray:
    """Exact integrals of 1/(x - y) over cells i0..i1-1, x the midpoint of cell xi."""
    c = np.arange(i0, i1, dtype=float)
    u = xi + 0.5 - c  # x - a_c in cell units; x - b_c = u - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(np.abs(u)) - np.log(np.abs(u - 1.0))
    if i0 <= xi < i1:
        out[xi - i0] = 0.0
    return out


def _contract(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.tensordot(weights, values, axes=(0, 0))


def hilbert(f: SampledFunction, gamma, x) -> NormedValue:
    """p.v. integral over ``gamma`` of f(y)/(x - y) dy at the midpoint ``x``."""
    xi = midpoint_cell(x, f.n_cells)
    i0, i1 = f.cells(gamma)
    return NormedValue(f.space, _contract(log_kernel(xi, i0, i1), f.values[i0:i1]))


def admissible_pairs(xi_rel: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Boundary index pairs (a, b), 0 <= a < b <= m, whose interval has cell xi_rel in its middle half."""
    four_x = 4 * xi_rel + 2
    a = np.arange(0, xi_rel + 1, dtype=np.int64)
    blo = (four_x - a) // 3 + 1
    bhi = np.minimum(four_x - 3 * a - 1, m)
    cnt = np.maximum(bhi - blo + 1, 0)
    keep = cnt > 0
    a, blo, cnt = a[keep], blo[keep], cnt[keep]
    total = int(cnt.sum())
    start = np.repeat(np.cumsum(cnt) - cnt, cnt)
    b = np.repeat(blo, cnt) + (np.arange(total) - start)
    return np.repeat(a, cnt), b


def maximal_hilbert_cells(values: np.ndarray, space: Space, i0: int, i1: int, cells) -> np.ndarray:
    """Carleson's maximal Hilbert transform over grid subintervals of cells [i0, i1).

    For each evaluation cell a cumulative table Q of signed cell contributions is
    built once; every admissible interval is then a difference Q[b] - Q[a].
    """
    m = i1 - i0
    block = values[i0:i1]
    out = np.zeros(len(cells))
    for n, xi in enumerate(cells):
        if not i0 <= xi < i1:
            raise ContractError(f"cell {xi} outside the interval")
        contrib = log_kernel(xi, i0, i1).reshape((m,) + (1,) * len(space.shape)) * block
        q = np.concatenate([np.zeros((1,) + space.shape, dtype=complex), np.cumsum(contrib, axis=0)])
        a, b = admissible_pairs(xi - i0, m)
        if a.size:
            out[n] = space.norms(q[b] - q[a]).max()
    return out


def maximal_hilbert(f: SampledFunction, w, x) -> tuple[float, bool]:
    """sup of ||p.v. int_gamma f/(x - y)|| over grid intervals gamma in w with x in the middle half of gamma.

    Returns ``(value, flag)``; ``flag`` is True when no admissible interval exists.
    """
    xi = midpoint_cell(x, f.n_cells)
    i0, i1 = f.cells(w)
    if not i0 <= xi < i1:
        raise ContractError("x must lie in w")
    a, _ = admissible_pairs(xi - i0, i1 - i0)
    if a.size == 0:
        return 0.0, True
    return float(maximal_hilbert_cells(f.values, f.space, i0, i1, [xi])[0]), False


def maximal_hilbert_profile(f: SampledFunction, w, cells=None) -> OperatorSample:
    i0, i1 = f.cells(w)
    cells = np.arange(i0, i1) if cells is None else np.asarray(cells)
    vals = maximal_hilbert_cells(f.values, f.space, i0, i1, cells)
    return OperatorSample(f.midpoints[cells], vals)


def centered_maximal_hilbert(f: SampledFunction, x, w=DOMAIN) -> float:
    """sup over truncation radii of ||int_{|x-y| > r} f(y)/(x - y) dy||, radii at cell boundaries."""
    xi = midpoint_cell(x, f.n_cells)
    i0, i1 = f.cells(w)
    contrib = log_kernel(xi, i0, i1).reshape((-1,) + (1,) * len(f.space.shape)) * f.values[i0:i1]
    q = np.concatenate([np.zeros((1,) + f.space.shape, dtype=complex), np.cumsum(contrib, axis=0)])
    total = q[-1]
    rel = xi - i0
    r = np.arange(0, max(rel + 1, i1 - xi))
    lo = np.clip(rel - r, 0, i1 - i0)
    hi = np.clip(rel + r + 1, 0, i1 - i0)
    return float(f.space.norms(total - (q[hi] - q[lo])).max())


def hl_maximal(f: SampledFunction, x, w=DOMAIN) -> float:
    """sup of the mean of ||f|| over grid intervals inside ``w`` containing ``x``."""
    xi = midpoint_cell(x, f.n_cells)
    i0, i1 = f.cells(w)
    p = f.norm_prefix()
    a = np.arange(i0, xi + 1)
    b = np.arange(xi + 1, i1 + 1)
    means = (p[b][None, :] - p[a][:, None]) / (b[None, :] - a[:, None])
    return float(means.max())


def dyadic_maximal_profile(density: np.ndarray, max_cells: int | None = None) -> np.ndarray:
    """Dyadic maximal function of a cellwise density on the aligned grid, at every cell.

    Dyadic blocks run from one cell up to ``max_cells`` cells (default: half the grid,
    i.e. the generation -1 intervals (-2, 0) and (0, 2)).
    """
    n = density.shape[0]
    max_cells = n // 2 if max_cells is None else max_cells
    out = density.astype(float).copy()
    size = 2
    while size <= max_cells:
        means = density.reshape(n // size, size).mean(axis=1)
        out = np.maximum(out, np.repeat(means, size))
        size *= 2
    return out


def dyadic_maximal(phi: SampledFunction, x) -> float:
    xi = midpoint_cell(x, phi.n_cells)
    return float(dyadic_maximal_profile(phi.cell_norms())[xi])


# modified partial sums ----------------------------------------------------------


def phase_means(k: float, n_cells: int, i0: int, i1: int) -> np.ndarray:
    """Exact cell means of exp(-2 pi i k t) over cells i0..i1-1."""
    h = 4.0 / n_cells
    mid = -2.0 + h * (np.arange(i0, i1) + 0.5)
    return np.sinc(k * h) * np.exp(-2j * np.pi * k * mid)


def check_resolution(k: float, n_cells: int) -> float:
    indicator = abs(k) * 4.0 / n_cells
    if indicator > RESOLUTION_LIMIT:
        raise ResolutionError(
            f"frequency {k} under-resolved on N={n_cells}: k*cell = {indicator:.3f} > {RESOLUTION_LIMIT}"
        )
    return indicator


def modulated_values(f: SampledFunction, k: float, w) -> tuple[int, int, np.ndarray]:
    """Cell values of f_k = f exp(-2 pi i k t) on ``w`` (exact cell means of the phase)."""
    i0, i1 = f.cells(w)
    ph = phase_means(k, f.n_cells, i0, i1)
    return i0, i1, ph.reshape((-1,) + (1,) * len(f.space.shape)) * f.values[i0:i1]


def modified_partial_sum(f: SampledFunction, k: float, wstar, x) -> tuple[NormedValue, float]:
    """S_k f(x, w*) = int_{w*} f(t) exp(-2 pi i k t)/(x - t) dt.

    Returns the value and the phase-variation indicator ``k * cell``.
    """
    indicator = check_resolution(k, f.n_cells)
    xi = midpoint_cell(x, f.n_cells)
    i0, i1, fk = modulated_values(f, k, wstar)
    if not i0 <= xi < i1:
        raise ContractError("x must lie in w*")
    return NormedValue(f.space, _contract(log_kernel(xi, i0, i1), fk)), indicator


def modified_partial_sum_cell(f: SampledFunction, k: float, wstar, xi: int) -> np.ndarray:
    check_resolution(k, f.n_cells)
    i0, i1, fk = modulated_values(f, k, wstar)
    return _contract(log_kernel(xi, i0, i1), fk)


# Delta function -----------------------------------------------------------------


def delta_function(members, x) -> np.ndarray | float:
    """sum over members w' of |w'|^2 / ((x - c(w'))^2 + |w'|^2)."""
    members = list(getattr(members, "members", members))
    if not members:
        raise ContractError("Delta needs a nonempty partition")
    lengths = np.array([float(m.length) for m in members])
    centers = np.array([float(m.center) for m in members])
    scalar_in = np.isscalar(x) or isinstance(x, Fraction)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    d = xs[:, None] - centers[None, :]
    out = (lengths**2 / (d * d + lengths**2)).sum(axis=1)
    return float(out[0]) if scalar_in else out


# distributional estimates -------------------------------------------------------


def distribution(values: np.ndarray, levels, cell: float) -> np.ndarray:
    """Measure of {value > level} for each level, counting cells."""
    v = np.sort(np.asarray(values))
    levels = np.asarray(levels, dtype=float)
    return cell * (v.size - np.searchsorted(v, levels, side="right"))


@dataclass(frozen=True)
class ExpFit:
    K: float
    c: float
    r2: float
    n_points: int


def fit_exponential_tail(levels, measures) -> ExpFit:
    """Least-squares fit of log(measure) = log K - c * level over positive measures."""
    levels = np.asarray(levels, dtype=float)
    measures = np.asarray(measures, dtype=float)
    keep = measures > 0
    x, y = levels[keep], np.log(measures[keep])
    if x.size < 3:
        raise ContractError("need at least three positive measures to fit a tail")
    res = linregress(x, y)
    resid = y - (res.slope * x + res.intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    K = math.exp(res.intercept) if res.intercept < 700 else math.inf
    return ExpFit(K, float(-res.slope), r2, int(x.size))


def weak_type_constant(values: np.ndarray, cell: float, length: float, mean_norm: float) -> float:
    """Smallest K with |w| |{value > t}| <= K mean_norm / t for all sampled t."""
    if mean_norm == 0:
        return 0.0
    v = np.sort(np.asarray(values))[::-1]
    t = v[v > 0]
    if t.size == 0:
        return 0.0
    # just below each value t_i, the level set holds i + 1 cells
    counts = np.arange(1, t.size + 1)
    return float((length * counts * cell * t).max() / mean_norm)


def tail_levels(values: np.ndarray, scale: float, n_levels: int = 12) -> np.ndarray:
    """Levels between the median and the top of the sample, in units of ``scale``."""
    v = np.asarray(values) / scale
    lo, hi = np.quantile(v, 0.5), np.quantile(v, 0.995)
    return np.linspace(lo, hi, n_levels)


def calibrate_c0(profiles, sup_norms, cell: float, lengths, min_r2: float = 0.5) -> tuple[float, list[ExpFit]]:
    """Fit exp(-c0 t/||f||_inf) tails of maximal-Hilbert profiles; c0 is the smallest fitted rate.

    Fits whose R^2 is below ``min_r2`` (flat profiles with no real tail) do not vote.
    """
    fits = []
    for prof, sup, length in zip(profiles, sup_norms, lengths):
        if sup == 0:
            continue
        levels = tail_levels(prof, sup)
        meas = distribution(np.asarray(prof) / sup, levels, cell) / length
        try:
            fits.append(fit_exponential_tail(levels, meas))
        except ContractError:
            continue
    rates = [f.c for f in fits if f.c > 0 and f.r2 >= min_r2]
    if not rates:
        raise ContractError("no positive exponential rate could be fitted")
    return min(rates), fits


def cells_of(w, n_cells: int) -> np.ndarray:
    i0, i1 = cell_range(w, n_cells)
    return np.arange(i0, i1)
