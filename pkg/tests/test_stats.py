import json
import math
import random
import warnings

import pytest
from hypothesis import given, strategies as st

from boolvol import exact
from boolvol.boolfn import Counterexample, Dictator, Majority, Parity, Threshold, Tribes
from boolvol.params import PowerLaw, rounded_plan, threshold_plan
from boolvol.stats import (
    VolatilityReport, clopper_pearson, counterexample_sweep, dkw_epsilon, exit_domination_test, mc_campaign,
    merge_reports, nondegeneracy_report, tightness_table,
)

CANON = PowerLaw(1.0, 2 / 3)
hists = st.dictionaries(st.integers(0, 80), st.integers(1, 50), min_size=1, max_size=12)


def _report(hist, spec=Parity(5), seed=0):
    return VolatilityReport(spec, 0.3, sum(hist.values()), seed, hist)


@given(hist=hists)
def test_report_invariants(hist):
    rep = _report(hist)
    tails = [rep.tail_prob(k) for k in range(0, 90)]
    assert all(b <= a for a, b in zip(tails, tails[1:]))
    assert rep.tail_count(0) == rep.replicas
    assert rep.p_zero * rep.replicas + rep.tail_count(1) == rep.replicas
    assert rep.mean == pytest.approx(sum(k * v for k, v in hist.items()) / rep.replicas)
    lo, hi = rep.p_zero_ci
    assert 0 <= lo <= rep.p_zero <= hi <= 1


@given(parts=st.lists(hists, min_size=2, max_size=5), seed=st.integers(0, 100))
def test_merge_order_independent(parts, seed):
    reps = [_report(h) for h in parts]
    a = reps[0]
    for r in reps[1:]:
        a = merge_reports(a, r)
    shuffled = list(reps)
    random.Random(seed).shuffle(shuffled)
    b = shuffled[0]
    for r in shuffled[1:]:
        b = merge_reports(r, b)
    assert a.to_dict() == b.to_dict()
    assert a.replicas == sum(r.replicas for r in reps)


def test_merge_rejects_mismatch():
    with pytest.raises(ValueError):
        merge_reports(_report({1: 2}), _report({1: 2}, spec=Parity(6)))
    with pytest.raises(ValueError):
        VolatilityReport(Parity(5), 0.3, 3, 0, {1: 2})


def test_clopper_pearson_and_dkw():
    assert clopper_pearson(0, 10)[0] == 0.0
    assert clopper_pearson(10, 10)[1] == 1.0
    lo, hi = clopper_pearson(50, 100)
    assert lo < 0.5 < hi and hi - lo == pytest.approx(0.2, abs=0.02)
    assert dkw_epsilon(10**5, 1e-3) == pytest.approx(math.sqrt(math.log(2000) / 2e5))


def test_constant_function_campaign():
    rep = mc_campaign(Threshold(20, 0.0), 0.3, 500, 1, threads=1)
    assert rep.p_zero == 1.0 and rep.mean == 0.0


def test_parity_campaign_mean():
    rep = mc_campaign(Parity(50), 0.3, 20000, 2, threads=1)
    assert abs(rep.mean - 21.0) <= 4 * rep.se


@pytest.mark.parametrize("spec,p", [
    (Majority(9), 0.5), (Tribes(4, 3, 2), 0.2), (Counterexample(4, 3, 2, 7.3), 0.2), (Dictator(6), 0.4),
    (Threshold(10, 3.0), 0.3), (Counterexample(3, 4, 2, 5.5), 0.35),
], ids=lambda v: type(v).__name__ if not isinstance(v, float) else str(v))
def test_campaign_matches_total_influence(spec, p):
    rep = mc_campaign(spec, p, 20000, 3, threads=1)
    total = exact.influence_bruteforce(spec, p).total
    assert abs(rep.mean - total) <= 4 * rep.se


def test_campaign_deterministic():
    spec = Counterexample(4, 3, 2, 7.3)
    a = json.dumps(mc_campaign(spec, 0.2, 500, 9, threads=1).to_dict())
    b = json.dumps(mc_campaign(spec, 0.2, 500, 9, threads=1).to_dict())
    assert a == b
    with pytest.raises(ValueError):
        mc_campaign(spec, 0.2, 0, 9)


def test_campaign_thread_independent():
    spec = Counterexample(10, 100, 2, 12.4)
    a = mc_campaign(spec, 0.01, 300, 4, threads=1).to_dict()
    b = mc_campaign(spec, 0.01, 300, 4, threads=3).to_dict()
    assert a == b


def test_nondegeneracy_canonical():
    plan = rounded_plan(10**6, CANON, 2)
    H = threshold_plan(plan.n_hat, plan.p_hat).H
    spec = Counterexample(plan.ell_hat, plan.k_hat, 2, H)
    rep = nondegeneracy_report(spec, plan.p_hat, 3000, 5, threads=1)
    assert rep.lower <= rep.exact <= rep.upper
    assert rep.inside
    assert abs(rep.empirical - rep.exact) < 4 * math.sqrt(rep.exact * (1 - rep.exact) / rep.draws)
    assert rep.p_g_one == pytest.approx(1 - exact.prob_g_zero_exact(100, 10**4, plan.p_hat, 2))
    assert rep.p_g_one == pytest.approx(0.3885, abs=1e-3)


def test_nondegeneracy_p_zero():
    spec = Counterexample(3, 4, 2, 5.5)
    rep = nondegeneracy_report(spec, 0.0, 50, 1, threads=1)
    assert rep.empirical == 0.0 and rep.exact == 0.0


def test_tightness_dictator_markov():
    reps = [mc_campaign(Dictator(n), 0.3, 4000, n, threads=1) for n in (5, 50, 500)]
    table = tightness_table(reps)
    for rep in reps:
        for k in table.k_grid:
            assert rep.tail_ci(k)[0] <= 2 * 0.3 * 0.7 / k
    assert table.tame_evidence is True


def test_tightness_parity_not_tame():
    reps = [mc_campaign(Parity(n), 0.3, 800, n, threads=1) for n in (50, 150, 400)]
    assert tightness_table(reps).tame_evidence is False


def test_tightness_single_report():
    table = tightness_table([mc_campaign(Parity(5), 0.3, 100, 0, threads=1)])
    assert len(table.tails) == 1 and table.tame_evidence is None and table.k_star is None


def test_exit_domination_small_plan():
    spec = Tribes(20, 100, 2)
    p = 0.005
    res = exit_domination_test(spec, p, 3000, 7, threads=1)
    assert res.passed and len(res.t_grid) == 50 and res.t_grid[-1] == pytest.approx(2.5)
    # a faster reference decays quicker, so passing at rate r implies passing at 2r
    assert exit_domination_test(spec, p, 3000, 7, rate=4.0, threads=1).passed


def test_exit_domination_low_power():
    with pytest.warns(UserWarning, match="little power"):
        res = exit_domination_test(Tribes(20, 100, 2), 0.005, 10, 1, threads=1)
    assert res.low_power and res.passed


def test_sweep_small():
    plans = [rounded_plan(n, CANON, 2) for n in (1000, 8000)]
    rep = counterexample_sweep(CANON, 2, plans, 800, 11, threads=1)
    assert [r.plan.n_hat for r in rep.rows] == [1000, 8000]
    for row in rep.rows:
        s = row.summary()
        assert set(s) == set(__import__("boolvol.stats", fromlist=["x"]).SUMMARY_COLUMNS)
        assert row.witness_failures == 0
        assert row.p_h_one_exact <= row.degeneracy_bound
        assert abs(row.h_report.mean - row.ec_h_exact) <= 4 * row.h_report.se + 1e-12
    assert rep.header["eps"] == 0.05
    json.dumps(rep.to_dict())
    assert len(rep.tail_rows()) == 2 * 7


def test_sweep_empty_and_deterministic():
    rep = counterexample_sweep(CANON, 2, [], 10, 1)
    assert rep.rows == [] and rep.flags == {}
    plans = [rounded_plan(1000, CANON, 2)]
    a = json.dumps(counterexample_sweep(CANON, 2, plans, 200, 3, threads=1).to_dict())
    b = json.dumps(counterexample_sweep(CANON, 2, plans, 200, 3, threads=1).to_dict())
    assert a == b
