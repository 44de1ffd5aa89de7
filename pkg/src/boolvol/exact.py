"""Closed forms and exhaustive computations for the tribes and threshold functions.

Binomial probabilities are evaluated in log space with Loader's saddle-point
expansion (Stirling remainder plus a deviance term), which keeps full
relative precision for ``n`` up to 1e12 and beyond.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boolfn import Counterexample, FunctionSpec, evaluate_all
from .params import threshold_plan

__all__ = [
    "RealInterval",
    "InfluenceProfile",
    "log_binom_pmf",
    "binom_cdf",
    "binom_sf",
    "prob_g_zero_exact",
    "prob_g_zero_bracket",
    "prob_g_zero_sandwich",
    "threshold_expected_changes_exact",
    "threshold_expected_changes_asymptotic",
    "threshold_expected_changes_gaussian",
    "influence_bruteforce",
    "degeneracy_bound_h",
    "prob_h_one_exact",
    "prob_f_one_exact",
    "bkkkl_floor",
    "BRUTE_FORCE_MAX_N",
]

BRUTE_FORCE_MAX_N = 22

_LN_SQRT_2PI = 0.5 * math.log(2 * math.pi)
# Stirling series coefficients 1/12, 1/360, 1/1260, 1/1680, 1/1188
_S0, _S1, _S2, _S3, _S4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188


def _stirlerr(n: float) -> float:
    """``log(n!) - log(sqrt(2 pi n) (n/e)^n)``."""
    if n <= 15.0:
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _LN_SQRT_2PI
    nn = n * n
    if n > 500:
        return (_S0 - _S1 / nn) / n
    if n > 80:
        return (_S0 - (_S1 - _S2 / nn) / nn) / n
    if n > 35:
        return (_S0 - (_S1 - (_S2 - _S3 / nn) / nn) / nn) / n
    return (_S0 - (_S1 - (_S2 - (_S3 - _S4 / nn) / nn) / nn) / nn) / n


def _bd0(x: float, m: float) -> float:
    """Deviance ``x log(x/m) + m - x`` without cancellation near ``x = m``."""
    if abs(x - m) < 0.1 * (x + m):
        v = (x - m) / (x + m)
        s = (x - m) * v
        ej = 2 * x * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
            j += 1
    return x * math.log(x / m) + m - x


def log_binom_pmf(k: int, n: int, p: float) -> float:
    """``log P(Bin(n, p) = k)``; ``-inf`` for impossible outcomes."""
    if k < 0 or k > n:
        return -math.inf
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if p == 1.0:
        return 0.0 if k == n else -math.inf
    if k == 0:
        return n * math.log1p(-p)
    if k == n:
        return n * math.log(p)
    q = 1.0 - p
    lc = _stirlerr(n) - _stirlerr(k) - _stirlerr(n - k) - _bd0(k, n * p) - _bd0(n - k, n * q)
    lf = math.log(2 * math.pi) + math.log(k) + math.log1p(-k / n)
    return lc - 0.5 * lf


def _sum_terms(n: int, p: float, start: int, step: int) -> float:
    """Sum of pmf terms from ``start`` moving away from the mode in direction ``step``."""
    terms = []
    k = start
    while 0 <= k <= n:
        t = math.exp(log_binom_pmf(k, n, p))
        terms.append(t)
        if t == 0.0 or (len(terms) > 8 and t < 1e-18 * terms[0]):
            break
        k += step
    return math.fsum(terms)


def _tail_sums(m: int, n: int, p: float) -> tuple[float, float]:
    """``(P(X <= m - 1), P(X >= m))``, each from its own direct sum when that side is the small one."""
    if m <= 0:
        return 0.0, 1.0
    if m > n:
        return 1.0, 0.0
    if p == 0.0:
        return 1.0, 0.0
    if p == 1.0:
        return 0.0, 1.0
    mean = n * p
    if m - 1 < mean:
        lower = _sum_terms(n, p, m - 1, -1)
        return lower, 1.0 - lower
    upper = _sum_terms(n, p, m, +1)
    return 1.0 - upper, upper


def binom_cdf(m: int, n: int, p: float) -> float:
    """``P(Bin(n, p) <= m)``."""
    return _tail_sums(m + 1, n, p)[0]


def binom_sf(m: int, n: int, p: float) -> float:
    """``P(Bin(n, p) >= m)``."""
    return _tail_sums(m, n, p)[1]


def _log_binom_cdf(m: int, n: int, p: float) -> float:
    lower, upper = _tail_sums(m + 1, n, p)
    if upper < 0.5:
        return math.log1p(-upper)
    return math.log(lower) if lower > 0 else -math.inf


@dataclass(frozen=True)
class RealInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def __contains__(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


def prob_g_zero_exact(ell: int, k: int, p: float, r: int) -> float:
    """``P(g = 0) = P(Bin(ell, p) <= r-1)^k`` under the product measure."""
    if r > ell:
        raise ValueError(f"need r <= ell, got r={r}, ell={ell}")
    if r < 1:
        raise ValueError(f"need r >= 1, got {r}")
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    return math.exp(k * _log_binom_cdf(r - 1, ell, p))


def _bracket_terms(ell: int, p: float, r: int) -> tuple[float, float]:
    # P(Bin(ell,p) >= r) lies within C(ell,r) p^(r+1) (ell-r) <= ell^(r+1) p^(r+1) of C(ell,r) p^r
    try:
        lead = float(math.comb(ell, r)) * p**r
    except OverflowError:
        lead = math.exp(math.lgamma(ell + 1) - math.lgamma(r + 1) - math.lgamma(ell - r + 1) + r * math.log(p))
    err = math.exp((r + 1) * math.log(ell * p))
    return lead, err


def prob_g_zero_bracket(ell: int, k: int, p: float, r: int) -> RealInterval:
    """Interval containing :func:`prob_g_zero_exact` from the leading Taylor term.

    The per-tribe probability of fewer than ``r`` ones is ``1 - C(ell, r) p^r``
    up to an error of at most ``(ell p)^(r+1)``; the returned interval is the
    ``k``-th power of that base interval. Requires ``ell p < 1`` and ``2r < ell``.
    """
    if not (ell * p < 1 and 2 * r < ell):
        raise ValueError(f"bracket needs ell*p < 1 and 2r < ell; got ell={ell}, p={p}, r={r}")
    if p == 0.0:
        return RealInterval(1.0, 1.0)
    lead, err = _bracket_terms(ell, p, r)
    u_hi, u_lo = lead + err, max(lead - err, 0.0)
    lo = math.exp(k * math.log1p(-u_hi)) if u_hi < 1 else 0.0
    hi = math.exp(k * math.log1p(-u_lo))
    return RealInterval(lo, hi)


def prob_g_zero_sandwich(ell: int, k: int, p: float, r: int) -> RealInterval:
    """Looser exponential form ``[exp(-2 k u_hi), exp(-k u_lo)]`` of the bracket.

    Uses ``exp(-2u) <= 1 - u <= exp(-u)`` for ``u`` in [0, 1/2); raises when
    the base interval leaves that range.
    """
    if not (ell * p < 1 and 2 * r < ell):
        raise ValueError(f"bracket needs ell*p < 1 and 2r < ell; got ell={ell}, p={p}, r={r}")
    if p == 0.0:
        return RealInterval(1.0, 1.0)
    lead, err = _bracket_terms(ell, p, r)
    u_hi, u_lo = lead + err, max(lead - err, 0.0)
    if not u_hi < 0.5:
        raise ValueError(f"exponential sandwich needs 1 - base < 1/2, got {u_hi}")
    return RealInterval(math.exp(-2 * k * u_hi), math.exp(-k * u_lo))


def threshold_expected_changes_exact(n: int, p: float, T: int) -> float:
    """Expected changes of ``[|x| >= T]`` over unit time: ``2 T C(n,T) p^T (1-p)^(n-T+1)``."""
    if not 0 <= T <= n:
        raise ValueError(f"need 0 <= T <= n, got T={T}, n={n}")
    if T == 0 or p in (0.0, 1.0):
        return 0.0
    return math.exp(math.log(2 * T) + log_binom_pmf(T, n, p) + math.log1p(-p))


def threshold_expected_changes_asymptotic(n: int, p: float) -> float:
    """``2 sqrt(np) exp(-a^2) / sqrt(2 pi)`` with ``a = sqrt(log(np))/2``, i.e. ``2 (np)^(1/4) / sqrt(2 pi)``."""
    a = threshold_plan(n, p).a
    return 2 * math.sqrt(n * p) * math.exp(-a * a) / math.sqrt(2 * math.pi)


def threshold_expected_changes_gaussian(n: int, p: float) -> float:
    """Local-CLT approximation ``2 sqrt(np) phi(a)`` of the exact expectation.

    Equals ``2 (np)^(3/8) / sqrt(2 pi)`` for ``a = sqrt(log(np))/2``.
    """
    a = threshold_plan(n, p).a
    return 2 * math.sqrt(n * p) * math.exp(-a * a / 2) / math.sqrt(2 * math.pi)


@dataclass
class InfluenceProfile:
    """Per-bit resampling influences ``I_i = 2p(1-p) * pivotal_i``."""

    per_bit: list
    total: float
    pivotal: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"per_bit": list(self.per_bit), "total": self.total, "pivotal": list(self.pivotal)}


def influence_bruteforce(spec: FunctionSpec, p: float) -> InfluenceProfile:
    """Exact influences by enumerating all ``2**n`` configurations (``n <= 22``)."""
    n = spec.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(
            f"n={n} exceeds the enumeration bound {BRUTE_FORCE_MAX_N}; estimate E[C] by Monte Carlo instead"
        )
    f = evaluate_all(spec)
    idx = np.arange(1 << n, dtype=np.uint32)
    w = np.bitwise_count(idx).astype(np.int64)
    pivotal = []
    for i in range(n):
        bit = np.uint32(1 << i)
        base = idx[(idx & bit) == 0]
        # weight of the other n-1 bits of each base configuration
        wb = w[base]
        if p in (0.0, 1.0):
            mass = (wb == (0 if p == 0.0 else n - 1)).astype(float)
        else:
            mass = np.exp(wb * math.log(p) + (n - 1 - wb) * math.log1p(-p))
        differs = f[base] != f[base | bit]
        pivotal.append(math.fsum(mass[differs]))
    scale = 2 * p * (1 - p)
    per_bit = [scale * v for v in pivotal]
    return InfluenceProfile(per_bit, math.fsum(per_bit), pivotal)


def prob_h_one_exact(n: int, p: float, H: float) -> float:
    """``P(|X| >= H)`` under the product measure."""
    return binom_sf(math.ceil(H), n, p)


def _scaled_mul(a, b, degree):
    (ca, la), (cb, lb) = a, b
    c = np.convolve(ca, cb)[: degree + 1]
    top = c.max()
    return c / top, la + lb + math.log(top)


def _unconvinced_weight_law(ell: int, k: int, p: float, r: int, degree: int) -> np.ndarray:
    """``P(g = 0, |X| = s)`` for ``s = 0 .. degree``.

    The per-tribe generating polynomial of counts below ``r`` is raised to the
    ``k``-th power by squaring, truncated at ``degree`` and rescaled after each
    product so that nothing underflows.
    """
    base = np.array([math.exp(log_binom_pmf(i, ell, p)) for i in range(min(r, degree + 1))])
    top = base.max()
    acc = None
    sq = (base / top, math.log(top))
    e = k
    while e:
        if e & 1:
            acc = sq if acc is None else _scaled_mul(acc, sq, degree)
        e >>= 1
        if e:
            sq = _scaled_mul(sq, sq, degree)
    coeffs, log_scale = acc
    with np.errstate(divide="ignore"):
        return np.exp(np.log(coeffs) + log_scale)


def prob_f_one_exact(spec: Counterexample, p: float) -> float:
    """``P(f = 1) = P(|X| >= H) + P(|X| < H-1) - P(g = 0, |X| < H-1)``."""
    n, H = spec.n, spec.H
    if p == 0.0:
        return 1.0 if H <= 0 else 0.0
    if p == 1.0:
        return 1.0
    m = math.ceil(H - 1)  # weights below H-1 are 0 .. m-1
    above = binom_sf(math.ceil(H), n, p)
    if m <= 0:
        return above
    below = binom_cdf(m - 1, n, p)
    joint = math.fsum(_unconvinced_weight_law(spec.ell, spec.k, p, spec.r, m - 1))
    return above + below - joint


def degeneracy_bound_h(n: int, p: float) -> float:
    """Chebyshev bound ``a^-2`` on ``P(h = 1)``."""
    a = threshold_plan(n, p).a
    return a ** -2


def bkkkl_floor(n: float, p: float) -> float:
    """Reference curve ``p^2 log n`` (constant unspecified, for plotting only)."""
    return p * p * math.log(n)
