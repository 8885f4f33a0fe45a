import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from homeofourier.fourier import (
    ComposedRule,
    QuadratureConfigError,
    QuadratureSpec,
    aligned_integral,
    build_aligned_scene,
    composed_integral,
    composed_partial_sum,
    composed_partial_sums,
    default_scene,
    dirichlet,
    interval_integral,
    kernel_diff_identity,
    kernel_diff_max,
    partial_sum,
    simpson_uniform,
)
from homeofourier.homeo import sample
from homeofourier.rng import ConstantSource, RandomSource
from homeofourier.testfn import (
    Constant,
    ConstructionError,
    Oscillatory,
    TrigPolynomial,
    build_counterexample,
)


def _kernel_by_sum(n, x):
    k = np.arange(1, n + 1)
    return 1 + 2 * np.cos(2 * np.pi * np.multiply.outer(x, k)).sum(-1)


def test_dirichlet_matches_cosine_sum():
    x = np.linspace(-1.3, 1.7, 1001)
    for n in (0, 1, 5, 40):
        assert np.allclose(dirichlet(n, x), _kernel_by_sum(n, x), atol=1e-9 * (2 * n + 1))


def test_dirichlet_removable_points_and_errors():
    assert dirichlet(7, 0.0) == 15.0
    assert dirichlet(7, 2.0) == 15.0
    assert dirichlet(7, -1.0) == 15.0
    with pytest.raises(ValueError):
        dirichlet(-1, 0.3)


def test_simpson_uniform():
    x = np.linspace(0, 1, 11)
    assert simpson_uniform(x**3, 0.1) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(QuadratureConfigError):
        simpson_uniform(np.ones(4), 0.1)


def test_quadrature_spec():
    q = QuadratureSpec()
    assert q.panels(1.0, 3) == 24 and q.panels(0.5, 3) == 12 and q.panels(1e-9, 3) == 2
    assert q.panels(1.0, 1.1) % 2 == 0
    with pytest.raises(QuadratureConfigError):
        QuadratureSpec(points_per_oscillation=4)
    with pytest.raises(QuadratureConfigError):
        QuadratureSpec(scheme="gauss")
    assert q.tol(10) > QuadratureSpec(16).tol(10)


def test_partial_sum_of_sine_example():
    f = TrigPolynomial.sine(1)
    assert partial_sum(f, 0, 0.25) == pytest.approx(0.0, abs=1e-13)
    assert partial_sum(f, 1, 0.25) == pytest.approx(1.0, abs=1e-13)
    assert partial_sum(f, 5, 0.1) == pytest.approx(math.sin(0.2 * math.pi), abs=1e-13)


def test_partial_sum_of_constant():
    for n in (0, 3, 50):
        assert partial_sum(Constant(0.7), n, 0.37) == pytest.approx(0.7, abs=1e-13)


@given(st.integers(0, 256), st.lists(st.tuples(st.integers(0, 300), st.floats(-1, 1),
                                                st.floats(0, 1)), min_size=1, max_size=4),
       st.floats(0, 1))
def test_partial_sum_truncates_trig_polynomials(n, terms, x):
    f = TrigPolynomial(tuple(terms))
    expect = f.fourier_truncation(n)(x)
    assert abs(partial_sum(f, n, x) - expect) < 1e-9 * max(1.0, f.sup_norm)


def test_min_nodes_is_enforced():
    f = TrigPolynomial.sine(1)
    with pytest.raises(QuadratureConfigError):
        partial_sum(f, 1, 0.0, min_nodes=10**6)
    with pytest.raises(ValueError):
        partial_sum(f, -1)


def test_interval_integral_is_additive():
    f = Oscillatory(3, 3)
    a, b, c = 0.01, 0.2, 0.9
    q = QuadratureSpec(64)
    whole = interval_integral(f, a, c, 9, q, x=0.1)
    parts = interval_integral(f, a, b, 9, q, x=0.1) + interval_integral(f, b, c, 9, q, x=0.1)
    assert whole == pytest.approx(parts, abs=1e-8)
    assert interval_integral(f, 0.3, 0.3, 9) == 0.0
    with pytest.raises(ValueError):
        interval_integral(f, 0.5, 0.2, 9)


def test_interval_integral_of_kernel_against_oscillation():
    # int_0^1 D_n(t) cos(2 pi k t) dt = 1 for 1 <= k <= n, closed form otherwise zero
    f = TrigPolynomial.cosine(3)
    assert interval_integral(f, 0.0, 1.0, 5) == pytest.approx(1.0, abs=1e-12)
    assert interval_integral(f, 0.0, 1.0, 2) == pytest.approx(0.0, abs=1e-12)


def test_partial_sum_of_oscillatory_converges_in_ppo():
    f = Oscillatory(4, 3)
    coarse = partial_sum(f, 20, 0.3, QuadratureSpec(8))
    fine = partial_sum(f, 20, 0.3, QuadratureSpec(64))
    assert abs(coarse - fine) < QuadratureSpec(8).tol(20, 1.0)


# ---- kernel differences --------------------------------------------------------

def test_kernel_diff_example():
    assert kernel_diff_max(100, 90) == pytest.approx(20.0)


def test_kernel_diff_bound_on_random_pairs():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m2 = int(rng.integers(0, 400))
        m1 = m2 + int(rng.integers(0, 200))
        assert kernel_diff_max(m1, m2, grid=20_000) <= 2 * (m1 - m2) + 1e-9


@given(st.integers(0, 200), st.integers(0, 200), st.floats(-2, 2))
def test_kernel_diff_identity(a, b, x):
    m1, m2 = max(a, b), min(a, b)
    lhs = dirichlet(m1, x) - dirichlet(m2, x)
    assert abs(lhs - kernel_diff_identity(m1, m2, x)) < 1e-8 * (m1 + 1)


def test_kernel_diff_rejects_order():
    with pytest.raises(ValueError):
        kernel_diff_max(3, 5)


# ---- composition -----------------------------------------------------------------

def test_composed_with_identity_matches_plain():
    phi = sample(8, ConstantSource(0.5))
    f = TrigPolynomial(((1, 1.0, 0.1), (4, 0.3, 0.0)))
    for n in (0, 2, 6):
        assert composed_partial_sum(f, phi, n, 0.2) == pytest.approx(partial_sum(f, n, 0.2), abs=1e-10)


def _fine_reference(f, phi, n, x, points=4_000_001):
    t = np.linspace(0, 1, points)
    y = dirichlet(n, x - t) * f(phi(t))
    return float(np.sum(0.5 * (y[1:] + y[:-1])) / (points - 1))


@pytest.mark.parametrize("f", [TrigPolynomial.sine(2), Oscillatory(3, 2), Oscillatory(5, 3, 0.5),
                               build_counterexample([3, 4], depth_K=2)])
def test_composed_rule_against_fine_reference(f):
    # stretched cells and kinks of f inside cells are both refined per sample
    phi = sample(7, RandomSource(8))
    for n in (0, 4, 16):
        got = composed_integral(f, phi, n, 0.0, 1.0, 0.1, QuadratureSpec(32))
        assert got == pytest.approx(_fine_reference(f, phi, n, 0.1), abs=2e-6)


def test_composed_error_within_a_priori_tolerance():
    phi = sample(9, RandomSource(5))
    f = Oscillatory(4, 3)
    for n in (2, 9, 30):
        err = abs(composed_partial_sum(f, phi, n, 0.3) - _fine_reference(f, phi, n, 0.3))
        assert err < QuadratureSpec().tol(n, f.sup_norm)


def test_composed_sums_share_nodes():
    phi = sample(7, RandomSource(8))
    f = Oscillatory(3, 2)
    ns = [0, 1, 4, 16]
    q = QuadratureSpec(32)
    many = composed_partial_sums(f, phi, ns, 0.1, q)
    one = [composed_integral(f, phi, n, 0, 1, 0.1, q) for n in ns]
    assert np.allclose(many, one, atol=1e-7)


def test_windows_add_up():
    phi = sample(6, RandomSource(1))
    f = TrigPolynomial.sine(1)
    rule = ComposedRule(12, 6, 0.0, 1.0)
    pieces = [(0, 0.25), (0.25, 0.75), (0.75, 1)]
    masks = np.stack([rule.segment_mask([w]) for w in pieces] + [rule.segment_mask(pieces)])
    out = rule.integrals(f, phi.values, masks)[0]
    assert out[:3].sum() == pytest.approx(rule(f, phi), abs=1e-12)
    assert out[3] == pytest.approx(rule(f, phi), abs=1e-12)
    # plain window weights (no per-sample refinement) partition the first-order weights
    assert np.allclose(sum(rule.window(a, b) for a, b in pieces), rule.weights)
    with pytest.raises(ValueError):
        rule.window(0.1, 0.5)


def test_batch_matches_single():
    root = RandomSource(2)
    phis = [sample(5, root.child(s)) for s in range(4)]
    rule = ComposedRule(7, 5, 0.125, 0.875, x=0.3)
    f = TrigPolynomial.cosine(1)
    got = rule.batch(f, np.stack([p.values for p in phis]))
    assert np.allclose(got, [rule(f, p) for p in phis])
    with pytest.raises(ValueError):
        rule(f, sample(4, root))


# ---- alignment --------------------------------------------------------------------

def _oracle_A(scene):
    M = 2 * scene.r + 1
    a, b = scene.alpha, scene.beta

    def I(c):
        return (math.cos(c * math.pi * a) - math.cos(c * math.pi * b)) / (c * math.pi)

    return I(M) + sum(I(M + 2 * k) + I(M - 2 * k) for k in range(1, scene.r + 1))


@pytest.mark.parametrize("n", [4, 8, 16, 64])
def test_aligned_integral_matches_closed_form(n):
    scene = default_scene(n)
    assert scene.identity_error() < 1e-9
    assert aligned_integral(scene) == pytest.approx(_oracle_A(scene), abs=1e-5)


def test_aligned_integral_grows_like_log():
    ratios = [aligned_integral(default_scene(n)) / math.log(n) for n in (16, 64, 256)]
    assert ratios[0] < ratios[1] < ratios[2] < 1 / (2 * math.pi)
    assert ratios[2] > 0.13


def test_scene_tau_is_monotone_and_fits_the_ends():
    sc = default_scene(16, s0=0.5)
    assert sc.tau(2.0**-sc.i) == pytest.approx(sc.phi_i)
    assert sc.tau(2.0**-sc.j) == pytest.approx(sc.phi_j)
    assert np.all(sc.tau.slopes >= 0)


@pytest.mark.parametrize("kw,msg", [
    (dict(n=3), "n >= 4"),
    (dict(i=1, j=1), "i > j"),
    (dict(i=4), "4n < 2^(i-j)"),
    (dict(phi_i=0.6), "phi_i < phi_j"),
    (dict(phi_i=0.4), "phi_j/phi_i"),
    (dict(k=9), "is not inside"),
    (dict(s0=2.0), "s0"),
])
def test_scene_errors_name_the_constraint(kw, msg):
    base = dict(n=8, k=None, s0=1.0, i=7, j=1, phi_i=0.4 / 64, phi_j=0.5)
    base.update(kw)
    with pytest.raises(ConstructionError, match=msg.replace("(", r"\(").replace(")", r"\)").replace("^", r"\^")):
        build_aligned_scene(**base)


def test_counterexample_partial_sums_run():
    f = build_counterexample([3, 5], depth_K=2)
    assert abs(partial_sum(f, 8, 0.0)) < 5


def test_dirichlet_near_integers_keeps_full_precision():
    for n in (0, 2, 300):
        for u in (5e-324, 1e-310, 1e-200, -1e-12):
            assert dirichlet(n, u) == pytest.approx(2 * n + 1, rel=1e-15)
            assert dirichlet(n, 3.0 + u) == pytest.approx(2 * n + 1, rel=1e-6)
    f = TrigPolynomial(((0, 1.0, 0.25),))
    assert partial_sum(f, 2, 5e-324) == pytest.approx(1.0, abs=1e-12)
