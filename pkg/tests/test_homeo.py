import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from homeofourier.homeo import (
    DomainError,
    DyadicChain,
    DyadicHomeomorphism,
    HolderEnvelope,
    bracket_batch,
    conditional_chain_batch,
    conditional_chain_sample,
    conditional_restrict,
    dyadic_chain_batch,
    dyadic_law_cdf,
    dyadic_law_density,
    evaluate,
    invert,
    point_batch,
    refine,
    sample,
    sample_batch,
)
from homeofourier.rng import ConstantSource, KeyedStream, RandomSource
from homeofourier.verify import EmpiricalDistribution, ks_two_sample

seeds = st.integers(0, 2**63)


def test_all_halves_gives_identity():
    phi = sample(10, ConstantSource(0.5))
    assert np.array_equal(phi.values, phi.grid)


def test_depth_one_example():
    phi = sample(1, ConstantSource(0.3))
    assert phi.values.tolist() == [0.0, 0.3, 1.0]


def test_depth_two_example():
    # phi(1/4) = 0.3 * 0.3, phi(3/4) = 0.3 + 0.3 * 0.7
    phi = sample(2, ConstantSource(0.3))
    assert np.allclose(phi.values, [0, 0.09, 0.3, 0.51, 1])


def test_depth_zero_and_negative():
    assert sample(0, RandomSource(1)).values.tolist() == [0.0, 1.0]
    with pytest.raises(DomainError):
        sample(-1, RandomSource(1))


@given(seeds, st.integers(0, 12))
def test_sample_is_a_homeomorphism_grid(seed, depth):
    phi = sample(depth, RandomSource(seed))
    v = phi.values
    assert v[0] == 0.0 and v[-1] == 1.0
    assert np.all(np.diff(v) >= 0)
    assert np.all((v >= 0) & (v <= 1))


def test_deep_samples_stay_strictly_increasing_mostly():
    # deep levels collapse only when float spacing runs out
    phi = sample(16, RandomSource(3))
    assert np.all(np.diff(phi.values) >= 0)
    assert phi.values.size == 2**16 + 1


@given(seeds, st.integers(0, 8), st.integers(0, 5))
def test_refine_keeps_coarse_values(seed, d0, extra):
    src = RandomSource(seed)
    coarse = sample(d0, src)
    fine = refine(coarse, extra, src)
    assert fine.depth == d0 + extra
    assert np.array_equal(fine.values[:: 1 << extra], coarse.values)


@given(seeds, st.integers(1, 8), st.integers(0, 5))
def test_refine_matches_direct_sample_of_same_stream(seed, d0, extra):
    src = RandomSource(seed)
    assert refine(sample(d0, src), extra, src) == sample(d0 + extra, src)


def test_refine_from_coarse_has_right_law():
    # X_{n,k} at deeper levels are fresh; refining depth-0 samples must match sample()
    N = 10_000
    root = RandomSource(11)
    fine = [refine(sample(0, root.child(0, s)), 4, root.child(0, s)).values for s in range(N)]
    direct = [sample(4, root.child(1, s)).values for s in range(N)]
    for j in (3, 8):  # phi(3/16), phi(1/2)
        a = np.array([v[j] for v in fine])
        b = np.array([v[j] for v in direct])
        assert ks_two_sample(EmpiricalDistribution.of(a), EmpiricalDistribution.of(b)) < 0.02


@given(seeds, st.lists(st.floats(0, 1), min_size=1, max_size=20))
def test_evaluate_is_monotone_and_in_range(seed, xs):
    phi = sample(6, RandomSource(seed))
    xs = np.sort(np.array(xs))
    y = evaluate(phi, xs)
    assert np.all(np.diff(y) >= 0)
    assert np.all((y >= 0) & (y <= 1))


@given(seeds, st.floats(0, 1))
def test_invert_roundtrip(seed, y):
    phi = sample(8, RandomSource(seed))
    x = invert(phi, y)
    assert abs(evaluate(phi, x) - y) < 1e-12


@given(seeds)
def test_evaluate_exact_at_grid(seed):
    phi = sample(5, RandomSource(seed))
    assert np.array_equal(evaluate(phi, phi.grid), phi.values)
    assert np.allclose(invert(phi, phi.values), phi.grid) or not phi.strictly_increasing


def test_evaluate_and_invert_examples():
    phi = DyadicHomeomorphism(1, np.array([0.0, 0.3, 1.0]))
    assert evaluate(phi, 0.25) == pytest.approx(0.15)
    assert evaluate(phi, 0.75) == pytest.approx(0.65)
    assert invert(phi, 0.15) == pytest.approx(0.25)
    assert invert(phi, 0.65) == pytest.approx(0.75)
    assert phi(0.5) == 0.3 and phi.inverse(0.3) == 0.5


def test_homeomorphism_validation():
    with pytest.raises(ValueError):
        DyadicHomeomorphism(1, np.array([0.0, 0.7, 0.6]))
    with pytest.raises(ValueError):
        DyadicHomeomorphism(1, np.array([0.1, 0.5, 1.0]))
    with pytest.raises(ValueError):
        DyadicHomeomorphism(2, np.array([0.0, 0.5, 1.0]))


def test_values_are_read_only():
    phi = sample(3, RandomSource(0))
    with pytest.raises(ValueError):
        phi.values[1] = 0.5


def test_csv_roundtrip():
    phi = sample(7, RandomSource(42))
    text = phi.to_csv(["seed = 42"])
    assert text.startswith("# seed = 42\nk,x,phi_x\n")
    assert DyadicHomeomorphism.from_csv(text) == phi


def test_conditional_restrict():
    seg = conditional_restrict(0.2, 0.5, 4, RandomSource(1))
    assert seg.a == 0.2 and seg.b == 0.5
    assert np.all(np.diff(seg.values) >= 0)
    with pytest.raises(DomainError):
        conditional_restrict(0.5, 0.5, 3, RandomSource(1))
    with pytest.raises(DomainError):
        conditional_restrict(-0.1, 0.5, 3, RandomSource(1))


def test_conditional_restrict_is_affine_copy():
    base = sample(4, RandomSource(8))
    seg = conditional_restrict(0.25, 0.75, 4, RandomSource(8))
    assert np.allclose(seg.values, 0.25 + 0.5 * base.values)


@given(seeds, st.integers(1, 12), st.floats(1e-12, 1 - 1e-9))
def test_conditional_chain_properties(seed, i, y):
    c = conditional_chain_sample(i, y, RandomSource(seed)).chain
    assert c.shape == (i,)
    assert c[-1] == y
    assert np.all(np.diff(c) <= 0)
    assert np.all((c >= y) & (c < 1))


def test_conditional_chain_errors():
    with pytest.raises(DomainError):
        conditional_chain_sample(0, 0.5, RandomSource(0))
    with pytest.raises(DomainError):
        conditional_chain_sample(3, 1.0, RandomSource(0))
    with pytest.raises(ValueError):
        DyadicChain(2, np.array([0.2, 0.4]))


def test_conditional_chain_batch_matches_scalar():
    root = RandomSource(5)
    keys = root.child_keys(range(6))
    batch = conditional_chain_batch(4, 0.01, keys)
    for s in range(6):
        assert np.allclose(batch[s], conditional_chain_sample(4, 0.01, KeyedStream(keys[s])).chain)


def test_conditional_chain_marginalises_to_unconditional():
    # draw y from the F_i law, then the chain given y: coordinate k ~ product of k+1 uniforms
    N, i = 20_000, 4
    rng = np.random.default_rng(1)
    y = rng.uniform(size=(N, i)).prod(axis=1)
    chain = conditional_chain_batch(i, y, RandomSource(2).child_keys(range(N)))
    ref = np.cumprod(rng.uniform(size=(N, i - 1)), axis=1)
    for k in range(i - 1):
        emp = EmpiricalDistribution.of(chain[:, k])
        assert ks_two_sample(emp, EmpiricalDistribution.of(ref[:, k])) < 0.02


def test_batch_routes_agree_with_full_grid():
    root = RandomSource(99)
    keys = root.child_keys(range(40))
    grids = sample_batch(9, keys)
    for s in range(40):
        assert np.array_equal(grids[s], sample(9, root.child(s)).values)
    x = 0.3712
    vals = point_batch(x, 9, keys)
    assert np.allclose(vals, [evaluate(sample(9, root.child(s)), x) for s in range(40)],
                       rtol=0, atol=1e-15)
    x_lo, x_hi, lo, hi = bracket_batch(x, 9, keys)
    k = int(x_lo * 2**9)
    assert x_lo <= x < x_hi
    assert np.array_equal(lo, grids[:, k]) and np.array_equal(hi, grids[:, k + 1])
    chain = dyadic_chain_batch(9, keys)
    assert np.array_equal(chain[:, 0], grids[:, 256])
    assert np.array_equal(chain[:, -1], grids[:, 1])


# ---- the law of phi(2^-i) ----------------------------------------------------

def _cdf_by_quadrature(i, y, points=200_001):
    # integrate the density |log t|^(i-1)/(i-1)! on (0, y] via t = y e^{-u}
    u = np.linspace(0.0, 60.0, points)
    t = y * np.exp(-u)
    g = np.abs(np.log(t)) ** (i - 1) / math.factorial(i - 1) * t
    return float(np.trapezoid(g, u)) if hasattr(np, "trapezoid") else float(np.trapz(g, u))


def test_dyadic_law_known_values():
    assert dyadic_law_cdf(1, 0.3) == pytest.approx(0.3)
    assert dyadic_law_cdf(2, math.exp(-1)) == pytest.approx(2 / math.e, rel=1e-14)
    assert dyadic_law_cdf(3, math.exp(-2)) == pytest.approx(5 * math.exp(-2), rel=1e-14)
    assert dyadic_law_cdf(4, 0.0) == 0.0
    assert dyadic_law_cdf(4, 1.0) == 1.0


@pytest.mark.parametrize("i", [1, 2, 3, 5, 8])
@pytest.mark.parametrize("y", [1e-6, 0.01, 0.2, 0.5, 0.9])
def test_dyadic_law_matches_quadrature_oracle(i, y):
    assert dyadic_law_cdf(i, y) == pytest.approx(_cdf_by_quadrature(i, y), rel=1e-6, abs=1e-12)


def test_dyadic_law_density_is_derivative():
    y = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    for i in (1, 2, 4):
        num = (dyadic_law_cdf(i, y + h) - dyadic_law_cdf(i, y - h)) / (2 * h)
        assert np.allclose(num, dyadic_law_density(i, y), rtol=1e-6)


def test_dyadic_law_matches_product_of_uniforms():
    # phi(2^-i) is a product of i independent uniforms
    N, i = 20_000, 5
    keys = RandomSource(7).child_keys(range(N))
    ours = dyadic_chain_batch(i, keys)[:, -1]
    ref = np.random.default_rng(0).uniform(size=(N, i)).prod(axis=1)
    assert ks_two_sample(EmpiricalDistribution.of(ours), EmpiricalDistribution.of(ref)) < 1.63 * math.sqrt(2 / N)


def test_holder_envelope():
    env = HolderEnvelope()
    assert env.inside(0.5, 0.3)
    assert not env.inside(0.5, 0.95)
    assert not env.inside(0.5, 0.5**7)
    with pytest.raises(ValueError):
        HolderEnvelope(K1=0.9)
    with pytest.raises(ValueError):
        HolderEnvelope(K2=1.0)
    with pytest.raises(ValueError):
        HolderEnvelope(C=0)
