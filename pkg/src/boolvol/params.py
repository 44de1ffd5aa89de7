"""Parameter sequences and the tribe/threshold plan constructions.

A plan fixes, for one system size, the tribe length and count of the
easily-convinced-tribes function together with the bias ``p`` at which it is
run; a threshold plan fixes the Hamming-weight cut used by the threshold
function.
"""
from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence, Union

__all__ = [
    "PowerLaw",
    "Table",
    "PSequence",
    "parse_pseq",
    "TribePlan",
    "ThresholdPlan",
    "AssumptionReport",
    "LemmaConditions",
    "RawTribeParams",
    "InfeasiblePlan",
    "raw_tribe_params",
    "rounded_plan",
    "subsequence",
    "validate_assumptions",
    "check_lemma_conditions",
    "threshold_plan",
]

# relative slack under which a computed real is treated as the integer it rounds to
_INTEGRAL_RTOL = 1e-9


class InfeasiblePlan(ValueError):
    """The raw tribe parameters violate ``ell >= 2``."""


def _ceil(x: float) -> int:
    nearest = round(x)
    if abs(x - nearest) <= _INTEGRAL_RTOL * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


@dataclass(frozen=True)
class PowerLaw:
    """``p_n = c * n**(-alpha)``."""

    c: float
    alpha: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"power law needs c > 0, got {self.c}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"power law needs 0 < alpha < 1, got {self.alpha}")

    def __call__(self, n: int) -> float:
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        p = self.c * float(n) ** (-self.alpha)
        if not 0 < p < 1:
            raise ValueError(f"p_{n} = {p} is not a probability (c={self.c}, alpha={self.alpha})")
        return p

    def to_dict(self) -> dict:
        return {"family": "power", "c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class Table:
    """Tabulated ``(n, p)`` pairs; values between rows are log-log interpolated."""

    entries: tuple

    def __post_init__(self):
        rows = tuple((int(n), float(p)) for n, p in self.entries)
        if not rows:
            raise ValueError("empty p table")
        ns = [n for n, _ in rows]
        ps = [p for _, p in rows]
        if any(n < 1 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("table n values must be positive and strictly increasing")
        if any(not 0 < p < 1 for p in ps):
            raise ValueError("table p values must lie strictly in (0, 1)")
        if any(b > a for a, b in zip(ps, ps[1:])):
            raise ValueError("table p values must be non-increasing in n")
        object.__setattr__(self, "entries", rows)

    def __call__(self, n: int) -> float:
        ns = [m for m, _ in self.entries]
        j = bisect.bisect_left(ns, n)
        if j < len(ns) and ns[j] == n:
            return self.entries[j][1]
        if j == 0 or j == len(ns):
            raise ValueError(f"n={n} outside the tabulated range [{ns[0]}, {ns[-1]}]")
        (n0, p0), (n1, p1) = self.entries[j - 1], self.entries[j]
        s = (math.log(n) - math.log(n0)) / (math.log(n1) - math.log(n0))
        return math.exp((1 - s) * math.log(p0) + s * math.log(p1))

    def to_dict(self) -> dict:
        return {"family": "table", "entries": [list(e) for e in self.entries]}


PSequence = Union[PowerLaw, Table]


def parse_pseq(text: str) -> PSequence:
    """Parse ``power:c,alpha`` or ``table:n1=p1;n2=p2;...``."""
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    if kind == "power":
        c, alpha = (float(v) for v in body.split(","))
        return PowerLaw(c, alpha)
    if kind == "table":
        rows = []
        for item in body.split(";"):
            n, p = item.split("=")
            rows.append((int(n), float(p)))
        return Table(tuple(rows))
    raise ValueError(f"unknown p-sequence family {kind!r} (expected 'power' or 'table')")


def pseq_from_dict(d: dict) -> PSequence:
    if d["family"] == "power":
        return PowerLaw(float(d["c"]), float(d["alpha"]))
    if d["family"] == "table":
        return Table(tuple(tuple(e) for e in d["entries"]))
    raise ValueError(f"unknown p-sequence family {d['family']!r}")


class RawTribeParams(NamedTuple):
    ell: float
    k: float
    feasible: bool


def raw_tribe_params(n: int, p: float, r: int) -> RawTribeParams:
    """Real tribe length ``(n p^r)^(-1/(r-1))`` and count ``n / ell``.

    ``feasible`` is False when ``ell < 2``; the values are still returned.
    """
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if r < 2:
        raise ValueError(f"r must be >= 2, got {r}")
    log_npr = math.log(n) + r * math.log(p)
    if log_npr >= 0:
        warnings.warn(f"n p^r = {math.exp(log_npr):.6g} >= 1; tribes will be short", stacklevel=2)
    ell = math.exp(-log_npr / (r - 1))
    if abs(ell - round(ell)) <= _INTEGRAL_RTOL * ell:
        ell = float(round(ell))
    k = n / ell
    return RawTribeParams(ell, k, ell >= 2.0)


@dataclass(frozen=True)
class TribePlan:
    r: int
    n_raw: int
    ell_real: float
    k_real: float
    ell_hat: int
    k_hat: int
    n_hat: int
    p_hat: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TribePlan":
        return cls(
            r=int(d["r"]), n_raw=int(d["n_raw"]), ell_real=float(d["ell_real"]),
            k_real=float(d["k_real"]), ell_hat=int(d["ell_hat"]), k_hat=int(d["k_hat"]),
            n_hat=int(d["n_hat"]), p_hat=float(d["p_hat"]),
        )


def rounded_plan(n: int, pseq: PSequence, r: int) -> TribePlan:
    """Round the raw tribe parameters at ``n`` up to integers.

    ``p_hat`` is the sequence evaluated at the rounded size ``ell_hat * k_hat``.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        raw = raw_tribe_params(n, pseq(n), r)
    if not raw.feasible:
        raise InfeasiblePlan(f"n={n}: tribe length {raw.ell:.6g} < 2")
    ell_hat = _ceil(raw.ell)
    k_hat = _ceil(raw.k)
    n_hat = ell_hat * k_hat
    return TribePlan(r, n, raw.ell, raw.k, ell_hat, k_hat, n_hat, pseq(n_hat))


def subsequence(pseq: PSequence, r: int, n_lo: int, n_hi: int, max_count: int) -> list[TribePlan]:
    """Plans for ``n_lo <= n <= n_hi`` with distinct rounded sizes.

    Scans ``n`` upward and keeps the first plan for each ``n_hat``; stops after
    ``max_count`` plans.  Infeasible ``n`` are skipped.
    """
    if not n_lo < n_hi:
        raise ValueError("need n_lo < n_hi")
    plans: list[TribePlan] = []
    seen: set[int] = set()
    for n in range(n_lo, n_hi + 1):
        if len(plans) >= max_count:
            break
        try:
            plan = rounded_plan(n, pseq, r)
        except ValueError:
            continue
        if plan.n_hat not in seen:
            seen.add(plan.n_hat)
            plans.append(plan)
    plans.sort(key=lambda pl: pl.n_hat)
    return plans


@dataclass
class AssumptionReport:
    holds_A: bool
    holds_B: bool
    holds_C: bool
    r_used: int
    diagnostics: list = field(default_factory=list)
    heuristic: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _log_grid(lo: float, hi: float, count: int) -> list[int]:
    step = (math.log(hi) - math.log(lo)) / (count - 1)
    return sorted({int(round(math.exp(math.log(lo) + i * step))) for i in range(count)})


def validate_assumptions(pseq: PSequence, r: int) -> AssumptionReport:
    """Check the growth assumptions (A) ``n p -> inf``, (B) ``n p^r -> 0`` and
    (C) ``p_n / p_m -> 1`` whenever ``m / n -> 1``.

    Power laws are decided analytically.  Tables can only exhibit trends, so the
    report is marked heuristic.
    """
    if isinstance(pseq, PowerLaw):
        a, c = pseq.alpha, pseq.c
        n_min = max(2, math.ceil(c ** (1 / a)) + 1)  # first n with p_n < 1
        grid = _log_grid(n_min, max(10 * n_min, 10**12), 25)
        worst = 0.0
        for eps in (0.1, 0.01):
            for n in grid:
                worst = max(worst, abs(pseq(n) / pseq(math.ceil((1 + eps) * n)) - 1))
        diagnostics = [
            ("np_exponent", 1 - a),
            ("npr_exponent", 1 - a * r),
            ("C_max_ratio_deviation", worst),
        ]
        return AssumptionReport(a < 1, a * r > 1, True, r, diagnostics)

    ns = [n for n, _ in pseq.entries]
    ps = [p for _, p in pseq.entries]
    np_ = [n * p for n, p in zip(ns, ps)]
    npr = [n * p**r for n, p in zip(ns, ps)]
    holds_A = len(ns) >= 2 and all(b >= a for a, b in zip(np_, np_[1:])) and np_[-1] > np_[0]
    holds_B = len(ns) >= 2 and all(b <= a for a, b in zip(npr, npr[1:])) and npr[-1] < npr[0]
    # C: near pairs (relative gap <= 10%); deviations must not grow from the lower to the upper half
    devs = []
    for i in range(len(ns)):
        for j in range(i + 1, len(ns)):
            if (ns[j] - ns[i]) / ns[i] <= 0.1:
                devs.append((ns[i], abs(ps[i] / ps[j] - 1)))
    if devs:
        mid = ns[len(ns) // 2]
        lower = max((d for n, d in devs if n < mid), default=0.0)
        upper = max((d for n, d in devs if n >= mid), default=0.0)
        holds_C = upper <= lower if lower > 0 else upper == 0.0
    else:
        lower = upper = math.nan
        holds_C = False
    diagnostics = [
        ("np_first", np_[0]), ("np_last", np_[-1]),
        ("npr_first", npr[0]), ("npr_last", npr[-1]),
        ("C_pairs", float(len(devs))), ("C_dev_lower", lower), ("C_dev_upper", upper),
    ]
    return AssumptionReport(holds_A, holds_B, holds_C, r, diagnostics, heuristic=True)


@dataclass(frozen=True)
class LemmaConditions:
    """Sufficient conditions for the tribes function to be a non-degenerate tame sequence.

    ``cond_iii_value`` is ``p^r ell^r k``; its pass flag uses the band [1/4, 4].
    """

    two_r: int
    ell_hat: int
    cond_i: bool
    p_ell: float
    cond_iii_value: float
    cond_iii: bool

    def to_dict(self) -> dict:
        return asdict(self)


def check_lemma_conditions(plan: TribePlan, band: tuple = (0.25, 4.0)) -> LemmaConditions:
    r, p, ell, k = plan.r, plan.p_hat, plan.ell_hat, plan.k_hat
    v = math.exp(r * math.log(p * ell) + math.log(k))
    return LemmaConditions(
        two_r=2 * r,
        ell_hat=ell,
        cond_i=2 * r < ell,
        p_ell=p * ell,
        cond_iii_value=v,
        cond_iii=band[0] <= v <= band[1],
    )


@dataclass(frozen=True)
class ThresholdPlan:
    n: int
    p: float
    a: float
    H: float
    T: int

    def to_dict(self) -> dict:
        return asdict(self)


def threshold_plan(n: int, p: float) -> ThresholdPlan:
    """Weight cut ``H = np + a sqrt(np(1-p))`` with ``a = sqrt(log(np)) / 2``."""
    mu = n * p
    if not mu > 1:
        raise ValueError(f"a_n undefined: n*p = {mu} <= 1")
    a = math.sqrt(math.log(mu)) / 2
    H = mu + a * math.sqrt(mu * (1 - p))
    T = math.ceil(H)
    if T > n:
        raise ValueError(f"threshold {H} exceeds n = {n}")
    return ThresholdPlan(n, p, a, H, T)


def sequence_points(pseq: PSequence, ns: Sequence[int], r: int) -> list[TribePlan]:
    """Rounded plans at the given raw sizes, sorted with duplicate ``n_hat`` removed."""
    plans = sorted((rounded_plan(n, pseq, r) for n in ns), key=lambda pl: (pl.n_hat, pl.n_raw))
    out: list[TribePlan] = []
    for pl in plans:
        if not out or pl.n_hat > out[-1].n_hat:
            out.append(pl)
    return out
