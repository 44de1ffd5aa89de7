import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from boolvol import exact
from boolvol.boolfn import Counterexample, Dictator, Majority, Parity, Threshold, Tribes, evaluate_all

mpmath.mp.dps = 50


def mp_pmf(k, n, p):
    p = mpmath.mpf(p)
    return mpmath.binomial(n, k) * p**k * (1 - p) ** (n - k)


def _enum_prob(table, n, p, value):
    w = np.bitwise_count(np.arange(table.size, dtype=np.uint64))[table == value].tolist()
    return math.fsum(p**s * (1 - p) ** (n - s) for s in w)


@pytest.mark.parametrize("k,n,p", [
    (0, 10, 0.3), (7, 10, 0.3), (111, 10**6, 1e-4), (1042, 10**9, 1e-6), (10**6, 10**12, 1e-6), (3, 10**12, 1e-11),
])
def test_log_pmf_against_mpmath(k, n, p):
    ref = mpmath.log(mp_pmf(k, n, p))
    assert exact.log_binom_pmf(k, n, p) == pytest.approx(float(ref), rel=1e-13, abs=1e-12)


@pytest.mark.parametrize("m,n,p", [(5, 40, 0.2), (120, 10**6, 1e-4), (1000, 10**9, 1e-6)])
def test_tails_against_mpmath(m, n, p):
    cdf = mpmath.fsum(mp_pmf(i, n, p) for i in range(m + 1))
    assert exact.binom_cdf(m, n, p) == pytest.approx(float(cdf), rel=1e-12)
    assert exact.binom_sf(m + 1, n, p) == pytest.approx(float(1 - cdf), rel=1e-10)


def test_tails_finite_at_huge_n():
    for n in (10**10, 10**12):
        v = exact.binom_sf(1100, n, 1e3 / n)
        assert math.isfinite(v) and 0 < v < 1


def test_prob_g_zero_examples():
    assert exact.prob_g_zero_exact(3, 2, 0.1, 2) == pytest.approx(0.944784, abs=5e-7)
    assert exact.prob_g_zero_exact(5, 3, 0.0, 2) == 1.0
    assert exact.prob_g_zero_exact(5, 3, 1.0, 2) == 0.0
    with pytest.raises(ValueError):
        exact.prob_g_zero_exact(2, 3, 0.1, 3)


def test_prob_g_zero_canonical_rows_mpmath():
    for ell, k, p in [(10, 100, 0.01), (100, 10**4, 1e-4), (1000, 10**6, 1e-6)]:
        base = mpmath.fsum(mp_pmf(i, ell, p) for i in range(2))
        assert exact.prob_g_zero_exact(ell, k, p, 2) == pytest.approx(float(base**k), rel=1e-12)
    # P(g=0) tends to exp(-1/2) along this family, not exp(-1)
    assert exact.prob_g_zero_exact(1000, 10**6, 1e-6, 2) == pytest.approx(math.exp(-0.5), rel=2e-3)


@pytest.mark.parametrize("ell,k,r", [(2, 2, 2), (3, 2, 2), (4, 3, 2), (5, 4, 3), (4, 5, 2), (10, 2, 2), (2, 10, 2)])
@pytest.mark.parametrize("p", [0.03, 0.2, 0.5, 0.8])
def test_prob_g_zero_enumeration(ell, k, r, p):
    ref = _enum_prob(evaluate_all(Tribes(ell, k, r)), ell * k, p, 0)
    assert abs(exact.prob_g_zero_exact(ell, k, p, r) - ref) <= 1e-12 * ref


@given(r=st.integers(2, 5), ell=st.integers(5, 2000), k=st.integers(1, 10**7), frac=st.floats(1e-6, 0.999))
def test_bracket_contains_exact(r, ell, k, frac):
    assume(2 * r < ell)
    p = frac / ell
    assert exact.prob_g_zero_exact(ell, k, p, r) in exact.prob_g_zero_bracket(ell, k, p, r)


def test_bracket_canonical_and_edges():
    iv = exact.prob_g_zero_bracket(100, 10**4, 1e-4, 2)
    assert exact.prob_g_zero_exact(100, 10**4, 1e-4, 2) in iv
    assert iv.width < 0.02
    assert exact.prob_g_zero_bracket(10, 5, 0.0, 2) == exact.RealInterval(1.0, 1.0)
    with pytest.raises(ValueError):
        exact.prob_g_zero_bracket(4, 5, 0.01, 2)
    with pytest.raises(ValueError):
        exact.prob_g_zero_bracket(100, 5, 0.02, 2)


def test_bracket_width_monotone_in_p():
    widths = [exact.prob_g_zero_bracket(50, 200, p, 2).width for p in np.geomspace(1e-5, 1e-3, 12)]
    assert all(b >= a for a, b in zip(widths, widths[1:]))


def test_sandwich_contains_bracket():
    for ell, k, p in [(100, 10**4, 1e-4), (30, 50, 0.005)]:
        b = exact.prob_g_zero_bracket(ell, k, p, 2)
        s = exact.prob_g_zero_sandwich(ell, k, p, 2)
        assert s.lo <= b.lo and b.hi <= s.hi


def test_threshold_formula_examples():
    assert exact.threshold_expected_changes_exact(4, 0.5, 2) == pytest.approx(0.75, rel=1e-14)
    assert exact.threshold_expected_changes_exact(3, 0.5, 3) == pytest.approx(0.375, rel=1e-14)
    assert exact.threshold_expected_changes_exact(5, 0.3, 0) == 0.0


@pytest.mark.parametrize("n", range(1, 21))
def test_threshold_formula_vs_bruteforce(n):
    p = 0.37
    for T in range(n + 1):
        bf = exact.influence_bruteforce(Threshold(n, T), p).total
        cf = exact.threshold_expected_changes_exact(n, p, T)
        assert cf == pytest.approx(bf, rel=1e-10, abs=1e-300)


def test_threshold_formula_mpmath_large():
    n, p, T = 10**8, 1e-4, 10152
    ref = 2 * T * mp_pmf(T, n, p) * (1 - mpmath.mpf(p))
    assert exact.threshold_expected_changes_exact(n, p, T) == pytest.approx(float(ref), rel=1e-12)


def test_asymptotic_forms():
    assert exact.threshold_expected_changes_asymptotic(10**6, 1e-4) == pytest.approx(2.5231, abs=1e-3)
    assert exact.threshold_expected_changes_asymptotic(10**8, 1e-4) == pytest.approx(7.979, abs=1e-3)
    for mu in (5.0, 100.0, 1e4, 1e7):
        n = 10**9
        assert exact.threshold_expected_changes_asymptotic(n, mu / n) == pytest.approx(
            2 * mu**0.25 / math.sqrt(2 * math.pi), rel=1e-12)
        assert exact.threshold_expected_changes_gaussian(n, mu / n) == pytest.approx(
            2 * mu**0.375 / math.sqrt(2 * math.pi), rel=1e-12)
    with pytest.raises(ValueError):
        exact.threshold_expected_changes_asymptotic(10, 0.05)


def test_gaussian_form_tracks_exact():
    # the local-CLT constant, unlike the e^{-a^2} form, matches the exact value at large np
    n, p = 10**8, 1e-4
    from boolvol.params import threshold_plan

    T = threshold_plan(n, p).T
    ratio = exact.threshold_expected_changes_exact(n, p, T) / exact.threshold_expected_changes_gaussian(n, p)
    assert ratio == pytest.approx(1.0, abs=0.02)


def test_influence_examples():
    p = 0.3
    prof = exact.influence_bruteforce(Dictator(4), p)
    assert prof.per_bit[0] == pytest.approx(2 * p * (1 - p))
    assert prof.per_bit[1:] == [0.0, 0.0, 0.0]
    prof = exact.influence_bruteforce(Majority(3), 0.5)
    assert prof.per_bit == pytest.approx([0.25] * 3)
    assert prof.total == pytest.approx(0.75)
    with pytest.raises(ValueError):
        exact.influence_bruteforce(Parity(23), 0.5)


@given(n=st.integers(1, 14), p=st.floats(0.01, 0.99))
def test_parity_total_influence(n, p):
    prof = exact.influence_bruteforce(Parity(n), p)
    assert prof.total == pytest.approx(2 * n * p * (1 - p), rel=1e-12)
    assert prof.total == pytest.approx(math.fsum(prof.per_bit), rel=1e-12)
    assert all(0 <= v <= 2 * p * (1 - p) + 1e-15 for v in prof.per_bit)


@pytest.mark.parametrize("spec", [Counterexample(3, 2, 2, 4.5), Counterexample(4, 3, 2, 7.3), Counterexample(3, 5, 2, 2.0),
                                  Counterexample(5, 4, 3, 9.9)], ids=str)
@pytest.mark.parametrize("p", [0.05, 0.3, 0.7])
def test_prob_f_one_vs_enumeration(spec, p):
    ref = _enum_prob(evaluate_all(spec), spec.n, p, 1)
    assert exact.prob_f_one_exact(spec, p) == pytest.approx(ref, rel=1e-12)


def test_prob_f_one_edges():
    spec = Counterexample(3, 2, 2, 4.5)
    assert exact.prob_f_one_exact(spec, 0.0) == 0.0
    assert exact.prob_f_one_exact(spec, 1.0) == 1.0


def test_degeneracy_bound():
    n = 10**6
    assert exact.degeneracy_bound_h(n, 1e-4) == pytest.approx(4 / math.log(100))
    assert exact.degeneracy_bound_h(10**12, 1e-4) == pytest.approx(0.217, abs=1e-3)
    tail = exact.prob_h_one_exact(n, 1e-4, 110.72929362652721)
    assert 0.14 <= tail <= 0.16
    bounds = [exact.degeneracy_bound_h(n, mu / n) for mu in (3, 10, 100, 1e4)]
    assert all(b < a for a, b in zip(bounds, bounds[1:]))


def test_bkkkl_floor():
    assert exact.bkkkl_floor(math.e, 1.0) == pytest.approx(1.0)
    assert exact.bkkkl_floor(10**6, 1e-4) == pytest.approx(1.38e-7, rel=2e-3)
    assert exact.bkkkl_floor(10**7, 0.1) > exact.bkkkl_floor(10**6, 0.1)
