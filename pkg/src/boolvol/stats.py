"""Monte Carlo campaigns and finite-n diagnostics for the change count C.

Every campaign runs replica ``i`` on ``RngStream(seed, i)`` and reduces the
samples to a histogram, so results do not depend on how replicas were
scheduled or merged.
"""
from __future__ import annotations

import bisect
import functools
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from scipy import stats as _sps

from . import exact
from .boolfn import Counterexample, FunctionSpec, Threshold, Tribes, evaluate, spec_to_dict, transitive_witness
from .dynamics import CENSORED, RngStream, count_changes, derive_seed, first_exit_time, sample_stationary
from .parallel import map_replicas
from .params import PSequence, TribePlan, check_lemma_conditions, threshold_plan

__all__ = [
    "DEFAULT_K_GRID",
    "clopper_pearson",
    "dkw_epsilon",
    "VolatilityReport",
    "merge_reports",
    "mc_campaign",
    "NondegeneracyReport",
    "nondegeneracy_report",
    "TightnessTable",
    "tightness_table",
    "DominationResult",
    "exit_domination_test",
    "SweepRow",
    "SweepReport",
    "counterexample_sweep",
]

DEFAULT_K_GRID = (1, 2, 4, 8, 16, 32, 64)
DEFAULT_EPS = 0.05


def clopper_pearson(x: int, m: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval for a proportion ``x / m``."""
    alpha = 1 - confidence
    lo = 0.0 if x == 0 else float(_sps.beta.ppf(alpha / 2, x, m - x + 1))
    hi = 1.0 if x == m else float(_sps.beta.ppf(1 - alpha / 2, x + 1, m - x))
    return lo, hi


def dkw_epsilon(m: int, delta: float) -> float:
    """Half-width of the DKW band: ``P(sup |F_m - F| > eps) <= delta``."""
    return math.sqrt(math.log(2 / delta) / (2 * m))


@dataclass
class VolatilityReport:
    """Empirical law of C over independent replicas, reduced to its histogram."""

    spec: FunctionSpec
    p: float
    replicas: int
    seed: Optional[int]
    histogram: dict
    k_grid: tuple = DEFAULT_K_GRID
    confidence: float = 0.95
    mean: float = field(init=False)
    se: float = field(init=False)
    p_zero: float = field(init=False)
    p_zero_ci: tuple = field(init=False)
    tail: dict = field(init=False)

    def __post_init__(self):
        hist = {int(k): int(v) for k, v in sorted(self.histogram.items()) if v}
        self.histogram = hist
        m = sum(hist.values())
        if m != self.replicas:
            raise ValueError(f"histogram mass {m} != replicas {self.replicas}")
        if m == 0:
            raise ValueError("a report needs at least one replica")
        s1 = math.fsum(k * v for k, v in hist.items())
        s2 = math.fsum(k * k * v for k, v in hist.items())
        self.mean = s1 / m
        var = max(s2 / m - self.mean**2, 0.0) * m / (m - 1) if m > 1 else 0.0
        self.se = math.sqrt(var / m)
        zeros = hist.get(0, 0)
        self.p_zero = zeros / m
        self.p_zero_ci = clopper_pearson(zeros, m, self.confidence)
        self.tail = {k: self.tail_count(k) / m for k in self.k_grid}

    @property
    def mean_ci(self) -> tuple[float, float]:
        z = float(_sps.norm.ppf(0.5 + self.confidence / 2))
        return self.mean - z * self.se, self.mean + z * self.se

    def tail_count(self, k: int) -> int:
        return sum(v for c, v in self.histogram.items() if c >= k)

    def tail_prob(self, k: int) -> float:
        return self.tail_count(k) / self.replicas

    def tail_ci(self, k: int) -> tuple[float, float]:
        return clopper_pearson(self.tail_count(k), self.replicas, self.confidence)

    def to_dict(self) -> dict:
        return {
            "spec": spec_to_dict(self.spec),
            "p": self.p,
            "replicas": self.replicas,
            "seed": self.seed,
            "mean": self.mean,
            "se": self.se,
            "mean_ci": list(self.mean_ci),
            "p_zero": self.p_zero,
            "p_zero_ci": list(self.p_zero_ci),
            "tail": {str(k): v for k, v in self.tail.items()},
            "histogram": {str(k): v for k, v in self.histogram.items()},
            "confidence": self.confidence,
        }


def merge_reports(a: VolatilityReport, b: VolatilityReport) -> VolatilityReport:
    """Pool two campaigns of the same function at the same ``p``."""
    if a.spec != b.spec or a.p != b.p:
        raise ValueError("can only merge reports of the same function and bias")
    hist = Counter(a.histogram)
    hist.update(b.histogram)
    return VolatilityReport(
        a.spec, a.p, a.replicas + b.replicas, a.seed if a.seed == b.seed else None,
        dict(hist), a.k_grid, a.confidence,
    )


def _changes_chunk(spec, p, seed, horizon, lo, hi):
    return [count_changes(spec, p, RngStream(seed, i), horizon) for i in range(lo, hi)]


def campaign_samples(spec: FunctionSpec, p: float, replicas: int, seed: int, threads=None, horizon=1.0) -> list[int]:
    """Per-replica change counts, indexed by replica id."""
    return map_replicas(functools.partial(_changes_chunk, spec, p, seed, horizon), replicas, threads)


def mc_campaign(
    spec: FunctionSpec,
    p: float,
    replicas: int,
    seed: int,
    threads: Optional[int] = None,
    k_grid: Sequence[int] = DEFAULT_K_GRID,
    confidence: float = 0.95,
) -> VolatilityReport:
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    samples = campaign_samples(spec, p, replicas, seed, threads)
    return VolatilityReport(spec, p, replicas, seed, dict(Counter(samples)), tuple(k_grid), confidence)


@dataclass
class NondegeneracyReport:
    """Empirical ``P(f(X_0) = 1)`` next to its exact value and an exact band.

    The band is ``P(g=1) - P(|X| >= H-1) <= P(f=1) <= P(g=1) + P(|X| >= H)``.
    """

    draws: int
    ones: int
    empirical: float
    exact: float
    lower: float
    upper: float
    p_g_one: float
    p_weight_ge_H_minus_1: float
    p_weight_ge_H: float
    chebyshev_bound_h: Optional[float]

    @property
    def inside(self) -> bool:
        return self.lower <= self.empirical <= self.upper

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["inside"] = self.inside
        return d


def _f_value_chunk(spec, p, seed, lo, hi):
    return [evaluate(spec, sample_stationary(spec.n, p, RngStream(seed, i))) for i in range(lo, hi)]


def nondegeneracy_report(spec: Counterexample, p: float, draws: int, seed: int, threads=None) -> NondegeneracyReport:
    n, H = spec.n, spec.H
    values = map_replicas(functools.partial(_f_value_chunk, spec, p, seed), draws, threads)
    ones = sum(values)
    p_g1 = 1.0 - exact.prob_g_zero_exact(spec.ell, spec.k, p, spec.r)
    ge_h1 = exact.binom_sf(math.ceil(H - 1), n, p)
    ge_h = exact.binom_sf(math.ceil(H), n, p)
    try:
        cheb = exact.degeneracy_bound_h(n, p)
    except ValueError:
        cheb = None
    return NondegeneracyReport(
        draws=draws,
        ones=ones,
        empirical=ones / draws,
        exact=exact.prob_f_one_exact(spec, p),
        lower=max(0.0, p_g1 - ge_h1),
        upper=min(1.0, p_g1 + ge_h),
        p_g_one=p_g1,
        p_weight_ge_H_minus_1=ge_h1,
        p_weight_ge_H=ge_h,
        chebyshev_bound_h=cheb,
    )


@dataclass
class TightnessTable:
    """Tail matrix ``P(C >= k)`` (rows: reports, columns: ``k_grid``).

    ``tame_evidence`` is a finite-n diagnostic: True when some grid column has
    every row's upper confidence bound below ``eps``; None for a single row.
    """

    labels: list
    k_grid: tuple
    tails: list
    upper: list
    eps: float
    k_star: Optional[int]
    tame_evidence: Optional[bool]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def tightness_table(
    reports: Sequence[VolatilityReport],
    k_grid: Sequence[int] = DEFAULT_K_GRID,
    eps: float = DEFAULT_EPS,
) -> TightnessTable:
    k_grid = tuple(k_grid)
    labels = [rep.spec.n for rep in reports]
    tails = [[rep.tail_prob(k) for k in k_grid] for rep in reports]
    upper = [[rep.tail_ci(k)[1] for k in k_grid] for rep in reports]
    if len(reports) < 2:
        return TightnessTable(labels, k_grid, tails, upper, eps, None, None)
    k_star = None
    for col, k in enumerate(k_grid):
        if max(row[col] for row in upper) < eps:
            k_star = k
            break
    return TightnessTable(labels, k_grid, tails, upper, eps, k_star, k_star is not None)


@dataclass
class DominationResult:
    """Empirical exit-time survival against ``exp(-rate t)`` with a DKW margin."""

    passed: bool
    max_violation: float
    eps_dkw: float
    rate: float
    m: int
    censored: int
    t_grid: list
    survival: list
    reference: list
    low_power: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _exit_chunk(spec, p, seed, t_max, max_attempts, lo, hi):
    return [first_exit_time(spec, p, RngStream(seed, i), t_max, max_attempts) for i in range(lo, hi)]


def exit_domination_test(
    spec: Union[Tribes, TribePlan],
    p: Optional[float],
    m: int,
    seed: int,
    t_grid: Optional[Sequence[float]] = None,
    delta: float = 1e-3,
    rate: Optional[float] = None,
    t_max: Optional[float] = None,
    threads: Optional[int] = None,
    max_attempts: int = 10_000,
) -> DominationResult:
    """Pass iff ``S(t) >= exp(-rate t) - eps_DKW(m, delta)`` on every grid point.

    ``rate`` defaults to ``r``, ``t_max`` to ``5 / r`` and the grid to 50 evenly
    spaced points in ``(0, t_max]``. Censored exits count as survivors.
    """
    if isinstance(spec, TribePlan):
        plan = spec
        spec = Tribes(plan.ell_hat, plan.k_hat, plan.r)
        p = plan.p_hat if p is None else p
    r = spec.r
    rate = float(r) if rate is None else rate
    t_max = 5.0 / r if t_max is None else t_max
    if t_grid is None:
        t_grid = [t_max * (j + 1) / 50 for j in range(50)]
    times = sorted(map_replicas(
        functools.partial(_exit_chunk, spec, p, seed, t_max, max_attempts), m, threads
    ))
    eps = dkw_epsilon(m, delta)
    survival, reference = [], []
    worst = -math.inf

    for t in t_grid:
        s = (m - bisect.bisect_right(times, t)) / m
        ref = math.exp(-rate * t)
        survival.append(s)
        reference.append(ref)
        worst = max(worst, ref - s)
    low_power = eps >= 0.1
    if low_power:
        warnings.warn(f"DKW half-width {eps:.3f} with m={m}: the domination test has little power", stacklevel=2)
    censored = sum(1 for x in times if x == CENSORED)
    return DominationResult(
        passed=worst <= eps,
        max_violation=worst,
        eps_dkw=eps,
        rate=rate,
        m=m,
        censored=censored,
        t_grid=list(t_grid),
        survival=survival,
        reference=reference,
        low_power=low_power,
    )


@dataclass
class SweepRow:
    plan: TribePlan
    H: float
    T: int
    a: float
    f_report: VolatilityReport
    h_report: VolatilityReport
    nondegeneracy: NondegeneracyReport
    p_g0_exact: float
    p_g0_bracket: Optional[tuple]
    ec_h_exact: float
    ec_h_asymptotic: float
    ec_h_gaussian: float
    p_h_one_exact: float
    degeneracy_bound: float
    bkkkl_floor: float
    lemma: dict
    witness_checks: int
    witness_failures: int

    def summary(self) -> dict:
        lo, hi = self.p_g0_bracket if self.p_g0_bracket else (math.nan, math.nan)
        return {
            "n_hat": self.plan.n_hat,
            "ell_hat": self.plan.ell_hat,
            "k_hat": self.plan.k_hat,
            "p": self.plan.p_hat,
            "H": self.H,
            "T": self.T,
            "p_g0_exact": self.p_g0_exact,
            "p_g0_lo": lo,
            "p_g0_hi": hi,
            "p_f1_emp": self.nondegeneracy.empirical,
            "EC_f_emp": self.f_report.mean,
            "EC_f_se": self.f_report.se,
            "EC_h_exact": self.ec_h_exact,
            "EC_h_asym": self.ec_h_asymptotic,
            "P_C0_h": self.h_report.p_zero,
            "tail_k8": self.f_report.tail_prob(8),
            "tail_k32": self.f_report.tail_prob(32),
        }

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "H": self.H,
            "T": self.T,
            "a": self.a,
            "summary": self.summary(),
            "f_report": self.f_report.to_dict(),
            "h_report": self.h_report.to_dict(),
            "nondegeneracy": self.nondegeneracy.to_dict(),
            "p_g0_exact": self.p_g0_exact,
            "p_g0_bracket": list(self.p_g0_bracket) if self.p_g0_bracket else None,
            "ec_h_exact": self.ec_h_exact,
            "ec_h_asymptotic": self.ec_h_asymptotic,
            "ec_h_gaussian": self.ec_h_gaussian,
            "p_h_one_exact": self.p_h_one_exact,
            "degeneracy_bound": self.degeneracy_bound,
            "bkkkl_floor": self.bkkkl_floor,
            "lemma": self.lemma,
            "witness_checks": self.witness_checks,
            "witness_failures": self.witness_failures,
        }


SUMMARY_COLUMNS = (
    "n_hat", "ell_hat", "k_hat", "p", "H", "T", "p_g0_exact", "p_g0_lo", "p_g0_hi",
    "p_f1_emp", "EC_f_emp", "EC_f_se", "EC_h_exact", "EC_h_asym", "P_C0_h", "tail_k8", "tail_k32",
)


@dataclass
class SweepReport:
    rows: list
    flags: dict
    header: dict
    tightness: Optional[TightnessTable] = None

    def summary_rows(self) -> list[dict]:
        return [row.summary() for row in self.rows]

    def tail_rows(self) -> list[dict]:
        out = []
        for row in self.rows:
            for k in row.f_report.k_grid:
                out.append({
                    "n_hat": row.plan.n_hat,
                    "k": k,
                    "tail_f": row.f_report.tail_prob(k),
                    "tail_f_hi": row.f_report.tail_ci(k)[1],
                    "tail_h": row.h_report.tail_prob(k),
                })
        return out

    def to_dict(self) -> dict:
        return {
            "header": self.header,
            "flags": self.flags,
            "rows": [row.to_dict() for row in self.rows],
            "tightness": self.tightness.to_dict() if self.tightness else None,
        }


def _witness_spot_checks(spec: Counterexample, p: float, seed: int, pairs: int, configs: int) -> tuple[int, int]:
    rng = RngStream(seed, 0)
    n, ell = spec.n, spec.ell
    checks = failures = 0
    for t in range(pairs):
        i = rng.randrange(n)
        if t % 2 == 0:
            j = (i // ell) * ell + rng.randrange(ell)
        else:
            j = rng.randrange(n)
        sigma = transitive_witness(spec, i, j)
        ok = sigma(i) == j
        for c in range(configs):
            x = sample_stationary(n, p, RngStream(seed, 1 + t * configs + c))
            ones = x.ones()
            ok &= evaluate(spec, sigma_state(sigma, n, ones)) == evaluate(spec, x)
        checks += 1
        failures += 0 if ok else 1
    return checks, failures


def sigma_state(sigma, n, ones):
    from .hypercube import HypercubeState

    return HypercubeState(n, sigma.apply_ones(ones), sparse=n > 2**16)


def counterexample_sweep(
    pseq: Optional[PSequence],
    r: int,
    plans: Sequence[TribePlan],
    replicas: int,
    seed: int,
    draws: Optional[int] = None,
    threads: Optional[int] = None,
    k_grid: Sequence[int] = DEFAULT_K_GRID,
    eps: float = DEFAULT_EPS,
    tail_k: int = 32,
    witness_pairs: int = 4,
    witness_configs: int = 3,
) -> SweepReport:
    """Campaigns and exact columns for the counterexample along a plan sequence.

    Trend flags are finite-n diagnostics: mean C(f) rising with a 4-SE gap
    between consecutive rows; no significant decrease of P(C(h) = 0); and
    ``P(C(f) >= tail_k) < eps`` on every row.
    """
    plans = sorted(plans, key=lambda pl: pl.n_hat)
    if any(b.n_hat <= a.n_hat for a, b in zip(plans, plans[1:])):
        raise ValueError("plans must have distinct sizes")
    draws = replicas if draws is None else draws
    rows = []
    for idx, plan in enumerate(plans):
        n, p = plan.n_hat, plan.p_hat
        tp = threshold_plan(n, p)
        f = Counterexample(plan.ell_hat, plan.k_hat, plan.r, tp.H)
        h = Threshold(n, tp.H)
        f_rep = mc_campaign(f, p, replicas, derive_seed(seed, idx, 1), threads, k_grid)
        h_rep = mc_campaign(h, p, replicas, derive_seed(seed, idx, 2), threads, k_grid)
        nondeg = nondegeneracy_report(f, p, draws, derive_seed(seed, idx, 3), threads)
        try:
            br = exact.prob_g_zero_bracket(plan.ell_hat, plan.k_hat, p, plan.r)
            bracket = (br.lo, br.hi)
        except ValueError:
            bracket = None
        checks, failures = _witness_spot_checks(f, p, derive_seed(seed, idx, 4), witness_pairs, witness_configs)
        rows.append(SweepRow(
            plan=plan,
            H=tp.H,
            T=tp.T,
            a=tp.a,
            f_report=f_rep,
            h_report=h_rep,
            nondegeneracy=nondeg,
            p_g0_exact=exact.prob_g_zero_exact(plan.ell_hat, plan.k_hat, p, plan.r),
            p_g0_bracket=bracket,
            ec_h_exact=exact.threshold_expected_changes_exact(n, p, tp.T),
            ec_h_asymptotic=exact.threshold_expected_changes_asymptotic(n, p),
            ec_h_gaussian=exact.threshold_expected_changes_gaussian(n, p),
            p_h_one_exact=exact.prob_h_one_exact(n, p, tp.H),
            degeneracy_bound=exact.degeneracy_bound_h(n, p),
            bkkkl_floor=exact.bkkkl_floor(n, p),
            lemma=check_lemma_conditions(plan).to_dict(),
            witness_checks=checks,
            witness_failures=failures,
        ))
    flags = trend_flags(rows, eps, tail_k)
    header = {
        "pseq": pseq.to_dict() if pseq is not None else None,
        "r": r,
        "replicas": replicas,
        "draws": draws,
        "seed": seed,
        "k_grid": list(k_grid),
        "eps": eps,
        "tail_k": tail_k,
        "separation_se": 4.0,
        "note": "trend flags are finite-n diagnostics, not limit statements",
    }
    tightness = tightness_table([row.f_report for row in rows], k_grid, eps) if rows else None
    return SweepReport(rows, flags, header, tightness)


def trend_flags(rows: Sequence[SweepRow], eps: float = DEFAULT_EPS, tail_k: int = 32) -> dict:
    if not rows:
        return {}
    ec_f_up = all(
        b.f_report.mean - a.f_report.mean > 4 * math.hypot(a.f_report.se, b.f_report.se)
        for a, b in zip(rows, rows[1:])
    )
    ec_h_up = all(b.ec_h_exact > a.ec_h_exact for a, b in zip(rows, rows[1:]))
    c0_h = all(b.h_report.p_zero_ci[1] >= a.h_report.p_zero_ci[0] for a, b in zip(rows, rows[1:]))
    tails = [row.f_report.tail_prob(tail_k) for row in rows]
    return {
        "ec_f_increasing": ec_f_up,
        "ec_h_exact_increasing": ec_h_up,
        "p_c0_h_nondecreasing": c0_h,
        "tail_stable": max(tails) < eps,
        "max_tail": max(tails),
        "witnesses_ok": all(row.witness_failures == 0 for row in rows),
        "nondegenerate_band_ok": all(row.nondegeneracy.inside for row in rows),
    }
