"""The acceptance criteria as runnable experiments.

Each ``criterion_*`` function returns a :class:`CriterionResult` holding a verdict,
the measured quantities and CSV tables. Pinned ceilings live in :class:`RunConfig`
and are echoed into run metadata.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .corpus import DEFAULT_CORPUS, build_corpus, validate_entry
from .decomposition import amplified_upper, build_partition, good_bad_split, good_part_bound_check
from .dyadic import ROOT, TORUS, DyadicInterval, SmoothingInterval, cell_range, grandsons
from .errors import CarlesonError
from .exceptional import (
    SIGMA1,
    UNION,
    calibrate_corpus_c0,
    exceptional_sets,
    threshold,
    torus_hstar_profile,
)
from .fourier import SampledFunction, fourier_coeffs_direct, gamma_constant, loglog_modular
from .growth import growth_experiment, halton_cells
from .hausdorff_young import (
    heldout_decay,
    holder_constant,
    lambda_sigma,
    lemma41_sum,
    lp_norm_mean,
    poisson_counterexample_demo,
    random_permutation,
    strong_lp_norm,
    theorem_b_certificate,
    weak_bound_constant,
    weak_l1_quotient,
)
from .operators import delta_function, distribution, fit_exponential_tail
from .values import SCALAR


TITLES = {1: "coefficient bound and DFT agreement", 2: "good-part constant", 3: "exponential-sum certificate",
          4: "weak and strong bounds for the weighted coefficient map", 5: "Delta level sets",
          6: "exceptional-set budget", 7: "log log n growth off the exceptional set",
          8: "change-of-frequency bound", 9: "Poisson kernel demonstration"}


@dataclass
class RunConfig:
    n_cells: int = 2048
    delta: float = 1.0
    eps: float = 0.1
    eps_sweep: tuple = (0.05, 0.1, 0.2)
    betas: tuple = (1.5, 2.0)
    alpha: float = 1.5
    K: int = 2048
    m_trunc: int = 200
    n_max: int = 64
    n_grid: tuple = (16, 32, 64)
    x_samples: int = 64
    thetas: tuple = (1.0, 0.5, 0.25, 0.125)
    n_permutations: int = 100
    n_partitions: int = 200
    poisson_r: tuple = (0.5, 0.9, 0.99, 0.999)
    poisson_cells: int = 2048
    seed: int = 0
    corpus: list = field(default_factory=lambda: [dict(e) for e in DEFAULT_CORPUS])
    # pinned ceilings
    k_freq_max: float = 10.0
    k_exc_max: float = 10.0
    refine_tol: float = 0.05
    delta_c_min: float = 0.3
    delta_r2_min: float = 0.9

    def validate(self) -> None:
        n = self.n_cells
        if n < 256 or n & (n - 1):
            raise ValueError("n_cells must be a power of two >= 256")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not 1 < self.alpha < 2:
            raise ValueError("alpha must lie in (1, 2)")
        if self.K < 2 or self.m_trunc < 1:
            raise ValueError("K must be >= 2 and m_trunc >= 1")
        if any(e <= 0 for e in (self.eps, *self.eps_sweep)):
            raise ValueError("eps values must be positive")
        if any(n < 3 for n in self.n_grid):
            raise ValueError("n-grid values must be >= 3 so that log log n > 0")
        if not self.corpus:
            raise ValueError("corpus must not be empty")
        for e in self.corpus:
            validate_entry(e)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        cfg = cls()
        for k, v in data.items():
            setattr(cfg, k, _coerce(k, getattr(cfg, k), v))
        cfg.validate()
        return cfg

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def _coerce(name: str, default, value):
    """Convert a JSON value to the type of the field default; errors name the field."""
    try:
        if isinstance(default, bool) or isinstance(value, bool):
            raise TypeError
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise TypeError
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            if not isinstance(value, list):
                raise TypeError
            return tuple(_coerce(name, default[0], v) for v in value) if default else tuple(value)
        if isinstance(default, list):
            if not isinstance(value, list):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ValueError(f"field {name!r}: cannot use {value!r} (expected {type(default).__name__})") from None
    return value


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict
    tables: dict = field(default_factory=dict)
    constants: list = field(default_factory=list)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.title}: {self.summary()}"

    def summary(self) -> str:
        items = [f"{k}={_fmt(v)}" for k, v in self.metrics.items() if isinstance(v, (int, float, bool, str))]
        return ", ".join(items)


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def constant(name, value, module, operation, member) -> dict:
    return {"name": name, "value": float(value), "module": module, "operation": operation, "member": member}


def corpus_of(cfg: RunConfig, n_cells: int | None = None) -> list[SampledFunction]:
    return build_corpus(cfg.corpus, n_cells or cfg.n_cells, cfg.seed)


# 1 ----------------------------------------------------------------------------------


def coefficient_intervals():
    return [TORUS, ROOT, SmoothingInterval(2, -1), DyadicInterval(0, -1), DyadicInterval(0, 0),
            DyadicInterval(2, -1), DyadicInterval(3, 0), DyadicInterval(5, 3)]


TEST_ALPHAS = (0.5, -2.25, 7.125, 100.7, -333.3, math.pi, 1e3 + 0.01)


def criterion_1(cfg: RunConfig, corpus) -> CriterionResult:
    kint = 256
    worst_bound, worst_dft = -math.inf, 0.0
    rows = []
    for f in corpus:
        for w in coefficient_intervals():
            mean = f.mean_norm(w)
            spectrum = f.spectrum(w)
            thirds = spectrum.norms_at_thirds(np.arange(-3 * kint, 3 * kint + 1))
            direct = f.space.norms(fourier_coeffs_direct(f, w, TEST_ALPHAS))
            excess = max(float(thirds.max()), float(direct.max())) - mean
            ks = np.arange(-kint, kint + 1)
            fast = spectrum.coeffs_at_thirds(3 * ks)
            ref = fourier_coeffs_direct(f, w, ks.astype(float))
            dft = float(f.space.norms(fast - ref).max()) / mean if mean > 0 else 0.0
            worst_bound = max(worst_bound, excess)
            worst_dft = max(worst_dft, dft)
            rows.append((f.name, w.label(), mean, excess, dft))
    ok = worst_bound <= 1e-9 and worst_dft <= 1e-12
    return CriterionResult(1, TITLES[1], ok,
                           {"max_excess_over_mean": worst_bound, "max_dft_rel_err": worst_dft},
                           {"c1_coefficients.csv": table(["member", "interval", "mean_norm", "excess", "dft_rel_err"],
                                                         rows)})


# 2 ----------------------------------------------------------------------------------


def good_part_constant(corpus, m_trunc: int, n: int) -> tuple[float, float, list]:
    gam = gamma_constant()
    best, worst_int, rows = 0.0, -math.inf, []
    for f in corpus:
        for w in (ROOT, SmoothingInterval(0, -1), SmoothingInterval(1, -1)):
            for k in sorted({k for k in (0, 4, 16, n) if k <= n}):
                top = amplified_upper(f, w, k, m_trunc)
                if top == 0:
                    continue
                for mult in (1, 2, 8):
                    part = build_partition(f, w, k, top * mult, n, m_trunc)
                    split = good_bad_split(f, part)
                    chk = good_part_bound_check(f, part, split)
                    nrm = f.space.norms(split.member_means)
                    integer = np.array([(k * m.length).denominator == 1 for m in part.members])
                    gap = float((nrm - gam * part.values)[integer].max()) if integer.any() else -math.inf
                    best = max(best, chk["K"])
                    worst_int = max(worst_int, gap)
                    rows.append((f.name, w.label(), k, top * mult, len(part), chk["K"], gap))
    return best, worst_int, rows


def criterion_2(cfg: RunConfig, corpus) -> CriterionResult:
    k1, gap1, rows = good_part_constant(corpus, cfg.m_trunc, cfg.n_max)
    k2, gap2, _ = good_part_constant(corpus_of(cfg, 2 * cfg.n_cells), cfg.m_trunc, cfg.n_max)
    change = abs(k2 - k1) / k1
    ok = math.isfinite(k1) and change < cfg.refine_tol and max(gap1, gap2) <= 1e-6
    return CriterionResult(2, TITLES[2], ok,
                           {"K": k1, "K_refined": k2, "relative_change": change, "integer_gap": max(gap1, gap2)},
                           {"c2_partitions.csv": table(["member", "wstar", "k", "lambda", "members", "K",
                                                         "integer_gap"], rows)},
                           [constant("K_good", k1, "decomposition", "good_part_bound_check", "corpus")])


# 3 ----------------------------------------------------------------------------------


def criterion_3(cfg: RunConfig, corpus) -> CriterionResult:
    rows, ok, consts = [], True, []
    for f in corpus:
        for beta in cfg.betas:
            rho = max(loglog_modular(f, TORUS, beta), f.mean_norm(TORUS))
            try:
                cert = theorem_b_certificate(f, TORUS, beta, rho, cfg.K)
                held = heldout_decay(f, TORUS, beta, cfg.K)
                good = cert.valid and held <= 1.0
                rows.append((f.name, beta, rho, cert.k0, cert.a, cert.A, cert.measured_sum, held, good))
                consts.append(constant(f"a(beta={beta})", cert.a, "hausdorff_young", "theorem_b_certificate", f.name))
                consts.append(constant(f"A(beta={beta})", cert.A, "hausdorff_young", "theorem_b_certificate", f.name))
            except CarlesonError as e:
                good = False
                rows.append((f.name, beta, rho, "", "", "", "", "", f"error: {e}"))
            ok &= good
    return CriterionResult(3, TITLES[3], ok, {"certificates": len(rows)},
                           {"c3_certificates.csv": table(["member", "beta", "rho", "k0", "a", "A", "sum",
                                                          "heldout_decay", "ok"], rows)}, consts)


# 4 ----------------------------------------------------------------------------------


def modulated_copy(f: SampledFunction, m: int) -> SampledFunction:
    ph = np.exp(2j * np.pi * m * f.midpoints).reshape((-1,) + (1,) * len(f.space.shape))
    return f.with_values(f.values * ph, f"{f.name}*e{m}")


def criterion_4(cfg: RunConfig, corpus) -> CriterionResult:
    rng = np.random.default_rng([cfg.seed, 4])
    K = cfg.K
    perms = [random_permutation(K, rng) for _ in range(cfg.n_permutations)]
    doubled = list(corpus) + [modulated_copy(f, 7) for f in corpus]
    c_alpha = weak_bound_constant(cfg.alpha)

    def weak_max(funcs):
        best, rows = 0.0, []
        for f in funcs:
            l1 = lp_norm_mean(f, TORUS, 1.0)
            q = max(weak_l1_quotient(lambda_sigma(f, TORUS, s, cfg.alpha, K), l1) for s in perms)
            best = max(best, q)
            rows.append((f.name, q))
        return best, rows

    q1, _ = weak_max(corpus)
    q2, rows = weak_max(doubled)
    strong = 0.0
    for f in doubled:
        if f.space.kind != SCALAR:
            continue
        l2 = lp_norm_mean(f, TORUS, 2.0)
        strong = max(strong, max(strong_lp_norm(lambda_sigma(f, TORUS, s, 1.5, K), 2.0) for s in perms) / l2)
    alphas = (1.5, 1.9, 1.99)
    hc = [holder_constant(a, 1.5) for a in alphas]
    increasing = all(b > a for a, b in zip(hc, hc[1:]))
    ok = q1 <= c_alpha and q2 <= c_alpha and strong <= 1.0 + 1e-9 and increasing
    rows_h = [(a, c) for a, c in zip(alphas, hc)]
    return CriterionResult(4, TITLES[4], ok,
                           {"weak_max": q1, "weak_max_doubled": q2, "c_alpha": c_alpha, "strong_p2_max": strong,
                            "holder_increasing": increasing},
                           {"c4_weak.csv": table(["member", "max_quotient"], rows),
                            "c4_holder.csv": table(["alpha", "constant"], rows_h)},
                           [constant("weak_max", q2, "hausdorff_young", "weak_l1_quotient", "doubled corpus")])


# 5 ----------------------------------------------------------------------------------


def random_partition(rng: np.random.Generator, max_nu: int) -> list[DyadicInterval]:
    """Random dyadic partition of (-2, 2): split each interval with a per-partition probability."""
    p = rng.uniform(0.3, 0.7)
    out, stack = [], list(grandsons(ROOT))
    while stack:
        w = stack.pop()
        if w.nu < max_nu and rng.random() < p:
            stack.extend(w.sons())
        else:
            out.append(w)
    return out


def criterion_5(cfg: RunConfig, corpus) -> CriterionResult:
    rng = np.random.default_rng([cfg.seed, 5])
    n = cfg.n_cells
    h = 4.0 / n
    mids = -2.0 + h * (np.arange(n) + 0.5)
    max_nu = int(math.log2(n)) - 2  # members of at least one cell
    levels = np.arange(1.0, 40.0, 0.5)
    env = np.zeros(levels.size)
    for _ in range(cfg.n_partitions):
        d = delta_function(random_partition(rng, max_nu), mids)
        env = np.maximum(env, distribution(d, levels, h) / 4.0)
    tail = (env > 0) & (env <= 0.5)
    fit = fit_exponential_tail(levels[tail], env[tail])
    ok = fit.c > cfg.delta_c_min and fit.r2 >= cfg.delta_r2_min
    return CriterionResult(5, TITLES[5], ok, {"c": fit.c, "K": fit.K, "r2": fit.r2, "points": fit.n_points},
                           {"c5_delta_levels.csv": table(["level", "envelope", "in_fit"],
                                                         zip(levels, env, tail.astype(int)))},
                           [constant("c_delta", fit.c, "operators", "fit_exponential_tail", "random partitions")])


# 6 ----------------------------------------------------------------------------------


@dataclass
class PipelineCache:
    c0: float | None = None
    profiles: dict = field(default_factory=dict)
    lemma41: dict = field(default_factory=dict)


def corpus_c0(corpus, cache: PipelineCache) -> float:
    if cache.c0 is None:
        cache.c0, _ = calibrate_corpus_c0(corpus)
    return cache.c0


def lemma41_for(f: SampledFunction, cfg: RunConfig, lam: float, cache: PipelineCache, key):
    if key not in cache.lemma41:
        cache.lemma41[key] = lemma41_sum(f, TORUS, cfg.delta, lam, cfg.K, cfg.m_trunc)
    return cache.lemma41[key]


def run_exceptional(f, cfg, eps, cache, key, profile=None):
    lam = threshold(f, eps, cfg.delta)
    if lam <= 0:
        return exceptional_sets(f, eps, cfg.delta, cfg.n_max, 0.0, 0.0, 1.0, profile=profile), None
    l41 = lemma41_for(f, cfg, lam, cache, key)
    run = exceptional_sets(f, eps, cfg.delta, cfg.n_max, l41.b, l41.B, corpus_c0_value(cache),
                           profile=profile, m_trunc=cfg.m_trunc)
    return run, l41


def corpus_c0_value(cache: PipelineCache) -> float:
    if cache.c0 is None:
        raise RuntimeError("c0 has not been calibrated")
    return cache.c0


def criterion_6(cfg: RunConfig, corpus, cache: PipelineCache) -> CriterionResult:
    c0 = corpus_c0(corpus, cache)
    cell = 4.0 / cfg.n_cells
    rows, k_exc, s1_ok = [], 0.0, True
    masks = {}
    for f in corpus:
        for eps in cfg.eps_sweep:
            run, l41 = run_exceptional(f, cfg, eps, cache, (f.name, eps))
            meas = run.measures()
            k_exc = max(k_exc, meas[UNION] / eps)
            s1_ok &= meas[SIGMA1] <= 7 * eps + cell
            rows.append((f.name, eps, run.lam, meas["S1"], meas["S2"], meas["S3"], meas["S4"], meas[UNION],
                         meas[UNION] / eps, int(run.info["vacuous"]), len(run.info["violations"])))
            masks[f"{f.name}@{eps}"] = [json.loads(s.to_json()) for s in run.sets]
    ok = k_exc <= cfg.k_exc_max and s1_ok
    return CriterionResult(6, TITLES[6], ok, {"K_exc": k_exc, "sigma1_within_7eps": s1_ok, "c0": c0},
                           {"c6_exceptional.csv": table(["member", "eps", "lambda", "S1", "S2", "S3", "S4", "union",
                                                         "union_over_eps", "S34_vacuous", "pair_violations"], rows),
                            "c6_masks.json": json.dumps(masks, sort_keys=True)},
                           [constant("K_exc", k_exc, "exceptional", "total_measure", "corpus"),
                            constant("c0", c0, "operators", "calibrate_c0", "corpus")])


# 7 and 8 ------------------------------------------------------------------------------


def growth_sweep(cfg: RunConfig, corpus, cache: PipelineCache) -> dict:
    corpus_c0(corpus, cache)
    out = {}
    for f in corpus:
        base = torus_hstar_profile(f)
        for theta in cfg.thetas:
            g = f.scaled(theta, f.name)
            run, _ = run_exceptional(g, cfg, cfg.eps, cache, (f.name, "theta", theta), theta * base)
            cells = halton_cells(g.n_cells, cfg.x_samples, run.union.mask)
            out[(f.name, theta)] = (run, growth_experiment(g, run.lam, cells, cfg.n_grid, cfg.m_trunc))
    return out


def criterion_7(cfg: RunConfig, sweep: dict) -> CriterionResult:
    rows, step_rows, ok = [], [], True
    names = sorted({k[0] for k in sweep}, key=[k[0] for k in sweep].index)
    consts, bad_invariants, bad_bound, failures = [], 0, 0, 0
    terminal, other, violations = 0, 0, []
    for name in names:
        ms = []
        for theta in cfg.thetas:
            run, g = sweep[(name, theta)]
            M = g.ratio()
            ms.append(M)
            failures += len(g.failures)
            bad_invariants += sum(not r.invariants_ok() for r in g.records)
            terminal += sum(v.startswith("terminal") for r in g.records for v in r.violations)
            other += sum(not v.startswith("terminal") for r in g.records for v in r.violations)
            violations.extend(f"{name} theta={theta} x={r.x} n={r.n}: {v}" for r in g.records for v in r.violations)
            bad_bound += sum(r.direct > r.telescoped + 1e-9 * (1 + r.telescoped) for r in g.records)
            rows.append((name, theta, run.lam, len(g.records), len(g.failures), M,
                         max((r.length for r in g.records), default=0)))
            consts.append(constant(f"M(theta={theta})", M, "growth", "growth_experiment", name))
        decreasing = all(b < a for a, b in zip(ms, ms[1:]))
        ok &= decreasing and ms[0] > 0
    ok &= failures == 0 and bad_invariants == 0 and bad_bound == 0
    summary_rows = []
    for (name, theta), (run, g) in sweep.items():
        for s in g.summary():
            summary_rows.append((name, theta, s["n"], s["max_direct"], s["max_bound"], s["loglog"], s["ratio"]))
    return CriterionResult(7, TITLES[7], ok,
                           {"failures": failures, "invariant_violations": bad_invariants,
                            "terminal_step_violations": terminal, "other_violations": other,
                            "bound_violations": bad_bound, "violation_details": violations},
                           {"c7_growth.csv": table(["member", "theta", "lambda", "records", "failures", "M",
                                                    "max_chain_length"], rows),
                            "c7_summary.csv": table(["member", "theta", "n", "max_direct", "max_bound", "loglog",
                                                     "ratio"], summary_rows)},
                           consts)


def criterion_8(cfg: RunConfig, sweep: dict) -> CriterionResult:
    k_freq, rows = 0.0, []
    for (name, theta), (run, g) in sweep.items():
        worst = 0.0
        for r in g.records:
            for st in r.steps:
                if st.level_next > 0:
                    worst = max(worst, st.freq / st.level_next)
                elif st.freq > 1e-12:
                    worst = math.inf
        k_freq = max(k_freq, worst)
        rows.append((name, theta, worst))
    ok = k_freq <= cfg.k_freq_max
    return CriterionResult(8, TITLES[8], ok, {"K_freq": k_freq, "ceiling": cfg.k_freq_max},
                           {"c8_frequency.csv": table(["member", "theta", "K_freq"], rows)},
                           [constant("K_freq", k_freq, "growth", "change_of_frequency", "corpus")])


def growth_steps_csv(sweep: dict) -> str:
    parts = []
    for (name, theta), (run, g) in sweep.items():
        body = g.steps_csv().splitlines()
        if not parts:
            parts.append("member,theta," + body[0])
        parts.extend(f"{name},{theta!r}," + line for line in body[1:])
    return "\n".join(parts) + "\n"


# 9 ----------------------------------------------------------------------------------


def criterion_9(cfg: RunConfig) -> CriterionResult:
    rows = poisson_counterexample_demo(cfg.poisson_r, 2.0, cfg.K, cfg.poisson_cells)
    ratios = [r["ratio"] for r in rows]
    dev = max(r["max_fibre_deviation"] for r in rows)
    ok = all(b > a for a, b in zip(ratios, ratios[1:])) and dev <= 1e-9
    return CriterionResult(9, TITLES[9], ok,
                           {"ratio_first": ratios[0], "ratio_last": ratios[-1], "max_fibre_deviation": dev},
                           {"c9_poisson.csv": table(["r", "ratio", "max_fibre_deviation"],
                                                    [(r["r"], r["ratio"], r["max_fibre_deviation"]) for r in rows])})


# driver -------------------------------------------------------------------------------


def errored(number: int, exc: Exception) -> CriterionResult:
    """A failing result for a criterion whose computation raised."""
    return CriterionResult(number, TITLES[number], False, {"error": f"{type(exc).__name__}: {exc}"})




def run_all(cfg: RunConfig) -> tuple[list[CriterionResult], dict]:
    """Criteria 1-9 plus the growth step table; criterion 10 compares two such runs."""
    corpus = corpus_of(cfg)
    cache = PipelineCache()
    plain = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5}
    results = []
    for number, fn in plain.items():
        try:
            results.append(fn(cfg, corpus))
        except CarlesonError as e:
            results.append(errored(number, e))
    try:
        results.append(criterion_6(cfg, corpus, cache))
    except CarlesonError as e:
        results.append(errored(6, e))
    extra = {}
    try:
        sweep = growth_sweep(cfg, corpus, cache)
        results += [criterion_7(cfg, sweep), criterion_8(cfg, sweep)]
        extra["growth_steps.csv"] = growth_steps_csv(sweep)
    except CarlesonError as e:
        results += [errored(7, e), errored(8, e)]
    try:
        results.append(criterion_9(cfg))
    except CarlesonError as e:
        results.append(errored(9, e))
    return results, extra


def compare_outputs(dir_a, dir_b) -> tuple[bool, list[str]]:
    """Byte comparison of every CSV in two output directories."""
    from pathlib import Path

    a, b = Path(dir_a), Path(dir_b)
    names = sorted({p.name for p in a.glob("*.csv")} | {p.name for p in b.glob("*.csv")})
    diff = [n for n in names if not ((a / n).exists() and (b / n).exists()
                                     and (a / n).read_bytes() == (b / n).read_bytes())]
    return bool(names) and not diff, diff
