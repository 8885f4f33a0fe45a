import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from homeofourier.homeo import DomainError, HolderEnvelope, dyadic_law_cdf
from homeofourier.rng import RandomSource
from homeofourier.testfn import Constant, TrigPolynomial, build_counterexample
from homeofourier.verify import (
    CheckReport,
    EmpiricalDistribution,
    LinearTau,
    check_conditional_chain,
    check_dyadic_law,
    check_first_passage,
    check_holder,
    check_tail_decay,
    check_head_decay,
    check_third_density,
    check_tube_probability,
    conditional_first_cdf,
    decay_reports,
    exceedance,
    holder_failure_exact,
    ks_statistic,
    ks_threshold,
    ks_two_sample,
    run_chunks,
    sweep_partial_sums,
    third_cdf,
)


# ---- KS plumbing --------------------------------------------------------------------

def test_ks_on_own_cdf_is_small():
    N = 20_000
    emp = EmpiricalDistribution.of(np.random.default_rng(4).uniform(size=N))
    assert ks_statistic(emp, lambda x: np.clip(x, 0, 1)) < ks_threshold(N)


def test_ks_point_mass_against_uniform():
    emp = EmpiricalDistribution.of(np.full(200, 0.5))
    assert ks_statistic(emp, lambda x: np.clip(x, 0, 1)) == pytest.approx(0.5)


def test_ks_mismatched_cdf():
    emp = EmpiricalDistribution.of(np.random.default_rng(1).uniform(size=10_000))
    stat = ks_statistic(emp, lambda x: np.clip(x, 0, 1) ** 2)
    assert 0.2 < stat < 0.27


def test_ks_errors():
    with pytest.raises(ValueError):
        ks_statistic(EmpiricalDistribution.of(np.arange(10.0)), lambda x: x)
    emp = EmpiricalDistribution.of(np.linspace(0, 1, 200))
    with pytest.raises(DomainError):
        ks_statistic(emp, lambda x: 2 * x)
    with pytest.raises(ValueError):
        EmpiricalDistribution(np.array([2.0, 1.0]), 2)


@given(st.lists(st.floats(-10, 10), min_size=100, max_size=300))
def test_ks_is_a_distance(xs):
    emp = EmpiricalDistribution.of(xs)
    s = ks_statistic(emp, lambda x: 1 / (1 + np.exp(-np.asarray(x))))
    assert 0.0 <= s <= 1.0
    assert ks_two_sample(emp, emp) == 0.0


def test_empirical_cdf_and_quantile():
    emp = EmpiricalDistribution.of([3.0, 1.0, 2.0, 2.0])
    assert emp.cdf(2.0) == 0.75 and emp.cdf(0.5) == 0.0
    assert emp.quantile(0.5) == 2.0


def test_report_json_and_line():
    rep = CheckReport("x", np.float64(0.01), 0.02, np.bool_(True), 100, 7, {"arr": np.arange(3)})
    d = rep.to_json_dict()
    assert set(["name", "statistic", "threshold", "pass", "seed", "n_samples"]) <= set(d)
    json.dumps(d)
    assert rep.line().startswith("PASS x:")


def test_run_chunks_order_and_workers():
    f = _ident
    a = run_chunks(f, 10, workers=1, chunk=3)
    b = run_chunks(f, 10, workers=2, chunk=3)
    assert a.tolist() == list(range(10)) and np.array_equal(a, b)
    assert run_chunks(f, 0).size == 0


def _ident(a, b):
    return np.arange(a, b, dtype=float)


# ---- distributional checks ----------------------------------------------------

@pytest.mark.parametrize("i", [1, 2, 3])
def test_dyadic_law_check_passes(i):
    rep = check_dyadic_law(i, 20_000, RandomSource(1))
    assert rep.passed, rep.line()
    assert rep.threshold == pytest.approx(0.0115, abs=1e-4)


def test_dyadic_law_rejects_out_of_range():
    with pytest.raises(ValueError):
        check_dyadic_law(9, 100, RandomSource(0))


def test_dyadic_law_check_detects_wrong_law():
    # the same samples judged against F_{i+1} must fail
    from homeofourier.verify import _dyadic_values
    vals = _dyadic_values(RandomSource(2), 2, 0, 5000)
    emp = EmpiricalDistribution.of(vals)
    assert ks_statistic(emp, lambda y: dyadic_law_cdf(3, y)) > 0.1


def test_first_passage_examples():
    rep = check_first_passage(0.1, 0.4, 20_000, RandomSource(1))
    assert rep.passed and abs(rep.details["rate"] - 0.25) < 0.015
    same = check_first_passage(0.3, 0.3, 1000, RandomSource(1))
    assert same.details["rate"] == 1.0 and same.passed
    with pytest.raises(ValueError):
        check_first_passage(0.5, 0.4, 10, RandomSource(0))


def test_conditional_first_cdf_examples():
    y = math.exp(-1)
    t = np.array([y, 0.5, 1.0])
    # i = 2: CDF 1 - log t / log y
    assert np.allclose(conditional_first_cdf(2, y, t), 1 - np.log(t) / np.log(y))
    assert conditional_first_cdf(5, 0.1, 0.1) == 0.0
    assert conditional_first_cdf(5, 0.1, 1.0) == 1.0


def test_conditional_chain_check():
    rep = check_conditional_chain(2, 0.1, 10_000, RandomSource(3), threshold=0.02)
    assert rep.passed, rep.line()
    assert check_conditional_chain(4, 0.01, 5000, RandomSource(3)).passed


def test_third_density_example():
    assert third_cdf(1 - math.sqrt(2) / 2) == pytest.approx(0.5)
    rep = check_third_density(4000, 20, RandomSource(5))
    assert rep.passed, rep.line()
    assert rep.details["bracket_width_p99"] < 1e-3
    assert rep.details["ks_density_1_minus_x"] > 0.4
    with pytest.raises(ValueError):
        check_third_density(100, 10, RandomSource(0))


def test_holder_exact_failure_under_bound():
    env = HolderEnvelope()
    for i in range(1, 9):
        assert holder_failure_exact(env, i) <= env.C * 4.0**-i


def test_holder_check():
    env = HolderEnvelope()
    rep = check_holder(env, [0.5, 0.25, 0.125], 4000, RandomSource(9))
    assert rep.passed, rep.details
    fails = rep.details["failure"]
    exact = rep.details["failure_exact"]
    for emp, ex in zip(fails, exact):
        assert abs(emp - ex) < 4 * math.sqrt(ex * (1 - ex) / 4000) + 1e-3
    with pytest.raises(ValueError):
        check_holder(env, [0.3], 100, RandomSource(0), depth=2)


def test_holder_identity_never_fails():
    env = HolderEnvelope(4.0, 0.25, 2.0)
    r = np.array([0.5, 0.25, 0.125])
    assert np.all(env.inside(r, r))


def test_exceedance_is_monotone():
    s = np.random.default_rng(0).exponential(size=500)
    K = np.linspace(0, 5, 30)
    ex = exceedance(s, K)
    assert ex[0] == 1.0 and np.all(np.diff(ex) <= 0)


def test_tail_and_head_reports_small():
    f = TrigPolynomial.sine(1)
    tail, head, vs = decay_reports(f, 32, 0.125, 200, RandomSource(1), depth=12)
    for rep in (tail, head):
        assert rep.details["monotone"]
        assert rep.details["exceedance"][0] == pytest.approx(1.0, abs=0.01)
    assert tail.details["slope"] < 0
    assert "head_curvature" in vs.details


def test_decay_checks_agree_with_shared_route():
    f = TrigPolynomial.sine(1)
    rand = RandomSource(4)
    tail = check_tail_decay(f, 32, 0.125, N=60, rand=rand, depth=12)
    head = check_head_decay(f, (-0.125, 0.125), 32, N=60, rand=rand, depth=12)
    t2, h2, _ = decay_reports(f, 32, 0.125, 60, rand, depth=12)
    assert np.array_equal(tail.details["exceedance"], t2.details["exceedance"])
    assert np.array_equal(head.details["exceedance"], h2.details["exceedance"])
    with pytest.raises(ValueError):
        check_tail_decay(f, 8, 0.1, N=10)


def test_tube_examples():
    rep = check_tube_probability(2, 0.3, None, [0.1, 0.25, 0.5, 1.0], 3000, RandomSource(2))
    rate = rep.details["rate"]
    assert rate[-1] == 1.0
    assert np.all(np.diff(rate) >= 0) and rate[0] > 0
    assert rep.passed
    tau = LinearTau(2, 0.3)
    assert tau(0.25) == pytest.approx(0.3) and tau(1.0) == pytest.approx(1.0)


def test_sweep_constant_and_shape():
    res = sweep_partial_sums(Constant(0.4), [0, 4, 16], 3, None, RandomSource(0))
    assert res.values.shape == (3, 3)
    assert np.allclose(res.values, 0.4, atol=1e-12)
    with pytest.raises(ValueError):
        sweep_partial_sums(Constant(0.4), [5000], 1, None, RandomSource(0))
    with pytest.raises(ValueError):
        sweep_partial_sums(Constant(0.4), [64], 1, 5, RandomSource(0))


def test_sweep_lipschitz_baseline_is_bounded():
    f = TrigPolynomial.sine(1)
    res = sweep_partial_sums(f, [1, 8, 64], 4, None, RandomSource(3))
    assert np.all(res.sup_abs < 3.0)
    q = res.quantiles()
    assert q["q10"] <= q["q50"] <= q["q90"]


def test_counterexample_sweep_runs():
    f = build_counterexample([3, 4], depth_K=2)
    res = sweep_partial_sums(f, [1, 16], 2, None, RandomSource(1))
    assert np.all(np.isfinite(res.values))
