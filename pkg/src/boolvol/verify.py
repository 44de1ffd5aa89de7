"""Quick oracle suite behind ``boolvol verify``.

Each check is small enough to finish in seconds and compares one computation
against an independent one (enumeration, a closed form, or a second code path).
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, NamedTuple

import numpy as np

from . import exact
from .boolfn import (
    Counterexample, Majority, Parity, Threshold, Tribes, EvalState, evaluate, evaluate_all, transitive_witness,
)
from .dynamics import RngStream, _evolve, run_trajectory, sample_stationary
from .params import PowerLaw, rounded_plan, threshold_plan
from .stats import mc_campaign


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _close(a, b, rel):
    return abs(a - b) <= rel * max(abs(b), 1e-300)


def check_plan_example():
    plan = rounded_plan(500, PowerLaw(1.0, 0.6667), 2)
    got = (plan.ell_hat, plan.k_hat, plan.n_hat)
    return got == (8, 63, 504), f"(ell_hat, k_hat, n_hat) = {got}"


def check_threshold_plan():
    tp = threshold_plan(10**6, 1e-4)
    return tp.T == 111 and 110 < tp.H < 111, f"H = {tp.H!r}, T = {tp.T}"


def check_binomial_pmf():
    worst = 0.0
    for n, p in [(7, 0.3), (40, 0.01), (200, 0.5)]:
        for k in range(n + 1):
            direct = math.comb(n, k) * p**k * (1 - p) ** (n - k)
            if direct > 1e-250:
                worst = max(worst, abs(math.exp(exact.log_binom_pmf(k, n, p)) - direct) / direct)
    return worst < 1e-12, f"max relative error {worst:.2e}"


def check_threshold_closed_form():
    worst = 0.0
    for n in range(1, 11):
        for T in range(n + 1):
            bf = exact.influence_bruteforce(Threshold(n, T), 0.3).total
            cf = exact.threshold_expected_changes_exact(n, 0.3, T)
            worst = max(worst, abs(bf - cf) / bf if bf else abs(cf))
    ok = worst <= 1e-10 and _close(exact.threshold_expected_changes_exact(4, 0.5, 2), 0.75, 1e-12)
    return ok, f"max relative error {worst:.2e}"


def check_tribes_enumeration():
    worst = 0.0
    for ell, k, r in [(3, 2, 2), (4, 3, 2), (5, 2, 3), (2, 5, 2)]:
        table = evaluate_all(Tribes(ell, k, r))
        weights = np.bitwise_count(np.arange(table.size, dtype=np.uint64))
        for p in (0.05, 0.2, 0.5):
            enum = math.fsum(p**w * (1 - p) ** (ell * k - w) for w in weights[table == 0].tolist())
            worst = max(worst, abs(exact.prob_g_zero_exact(ell, k, p, r) - enum) / enum)
    spot = exact.prob_g_zero_exact(3, 2, 0.1, 2)
    return worst <= 1e-12 and abs(spot - 0.944784) < 5e-7, f"max relative error {worst:.2e}, spot {spot:.6f}"


def check_bracket_containment():
    rng = RngStream(12345, 0)
    misses = 0
    for _ in range(200):
        r = rng.randint(2, 4)
        ell = rng.randint(2 * r + 1, 200)
        k = rng.randint(1, 10**4)
        p = rng.uniform(1e-6, 0.5) / ell
        iv = exact.prob_g_zero_bracket(ell, k, p, r)
        misses += exact.prob_g_zero_exact(ell, k, p, r) not in iv
    return misses == 0, f"{misses} of 200 draws outside the bracket"


def check_f_probability():
    worst = 0.0
    for spec in [Counterexample(3, 2, 2, 4.5), Counterexample(4, 3, 2, 7.3), Counterexample(2, 4, 2, 3.0)]:
        for p in (0.1, 0.35):
            table = evaluate_all(spec)
            weights = np.bitwise_count(np.arange(table.size, dtype=np.uint64))
            enum = math.fsum(p**w * (1 - p) ** (spec.n - w) for w in weights[table == 1].tolist())
            worst = max(worst, abs(exact.prob_f_one_exact(spec, p) - enum) / enum)
    return worst < 1e-12, f"max relative error {worst:.2e}"


def check_asymptotic_anchor():
    v = exact.threshold_expected_changes_asymptotic(10**6, 1e-4)
    return abs(v - 2 * 100**0.25 / math.sqrt(2 * math.pi)) < 1e-3, f"value {v:.6f}"


def check_incremental_evaluation():
    specs = [Parity(30), Majority(31), Tribes(5, 6, 2), Threshold(30, 7.5), Counterexample(5, 6, 2, 8.2)]
    for s, spec in enumerate(specs):
        rng = RngStream(7, s)
        x = sample_stationary(spec.n, 0.25, rng)
        es = EvalState(spec, x)
        mismatches = []

        def observer(ev, spec=spec, es=es, x=x):
            es.observe(ev.bit, ev.new_value)
            if es.value != evaluate(spec, x):
                mismatches.append(ev)

        run_trajectory(x, 0.25, 3.0, rng, observer)
        if mismatches:
            return False, f"{type(spec).__name__} diverged at {mismatches[0]}"
    return True, f"{len(specs)} functions agree along trajectories"


def check_fused_loop():
    spec = Counterexample(4, 5, 2, 6.4)
    a, b = RngStream(3, 1), RngStream(3, 1)
    xa, xb = sample_stationary(spec.n, 0.2, a), sample_stationary(spec.n, 0.2, b)
    run_trajectory(xa, 0.2, 2.0, a)
    _evolve(xb, 0.2, 2.0, b, EvalState(spec, xb))
    return xa == xb and a.random() == b.random(), "fused and plain loops consume identical draws"


def check_witnesses():
    spec = Counterexample(3, 3, 2, 4.0)
    table = evaluate_all(spec)
    for i, j in itertools.product(range(spec.n), repeat=2):
        sigma = transitive_witness(spec, i, j)
        if sigma(i) != j:
            return False, f"sigma({i}) != {j}"
        perm = sigma.expand()
        idx = np.arange(table.size)
        moved = np.zeros_like(idx)
        for src, dst in enumerate(perm):
            moved |= ((idx >> src) & 1) << dst
        if not np.array_equal(table[moved], table):
            return False, f"witness for ({i}, {j}) does not preserve f"
    return True, f"all {spec.n ** 2} pairs preserve f"


def check_total_influence_identity():
    spec = Majority(9)
    rep = mc_campaign(spec, 0.5, 4000, 2024, threads=1)
    total = exact.influence_bruteforce(spec, 0.5).total
    return abs(rep.mean - total) <= 4 * rep.se, f"mean {rep.mean:.4f} +- {rep.se:.4f} vs {total:.4f}"


def check_jump_count():
    n, p, m = 100, 0.3, 4000
    counts = []
    for i in range(m):
        rng = RngStream(99, i)
        counts.append(run_trajectory(sample_stationary(n, p, rng), p, 1.0, rng).events)
    mean = sum(counts) / m
    se = float(np.std(counts, ddof=1)) / math.sqrt(m)
    target = 2 * n * p * (1 - p)
    return abs(mean - target) <= 4 * se, f"mean {mean:.3f} +- {se:.3f} vs {target:.3f}"


def check_determinism():
    spec = Counterexample(4, 5, 2, 6.4)
    a = mc_campaign(spec, 0.2, 300, 5, threads=1).to_dict()
    b = mc_campaign(spec, 0.2, 300, 5, threads=1).to_dict()
    return a == b, "repeated campaign reproduces its report"


CHECKS: list[tuple[str, Callable]] = [
    ("plan rounding at n=500", check_plan_example),
    ("threshold plan at n=1e6", check_threshold_plan),
    ("log-space binomial pmf", check_binomial_pmf),
    ("threshold closed form vs enumeration", check_threshold_closed_form),
    ("tribes probability vs enumeration", check_tribes_enumeration),
    ("tribes bracket containment", check_bracket_containment),
    ("counterexample probability vs enumeration", check_f_probability),
    ("asymptotic anchor at np=100", check_asymptotic_anchor),
    ("incremental evaluation", check_incremental_evaluation),
    ("fused walk loop", check_fused_loop),
    ("transitivity witnesses", check_witnesses),
    ("E[C] equals total influence", check_total_influence_identity),
    ("mean jump count", check_jump_count),
    ("campaign determinism", check_determinism),
]


def run_checks() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
