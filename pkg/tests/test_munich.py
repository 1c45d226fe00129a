import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import lp_naive, munich_brute_force, random_munich_instance
from uncertts.core import MultiObservationSeries
from uncertts.distances import (
    InstanceTooLarge,
    combination_count,
    munich_bounds,
    munich_probability,
    munich_probability_dp,
    munich_probability_exact,
)
from uncertts.core import ValidationError


def mos(samples):
    return MultiObservationSeries(tuple(np.asarray(s, dtype=float) for s in samples))


def test_single_deterministic_distance():
    assert munich_probability_exact(mos([[0.0]]), mos([[2.0]]), 3.0) == 1.0


def test_hand_enumeration_half():
    X = mos([[0.0, 2.0]])
    assert munich_probability_exact(X, X, 1.0) == 0.5


def test_two_by_two_against_brute_force(rng):
    X = [rng.normal(size=2) for _ in range(2)]
    Y = [rng.normal(size=2) for _ in range(2)]
    for eps in np.linspace(0.1, 4.0, 25):
        assert munich_probability_exact(mos(X), mos(Y), eps) == munich_brute_force(X, Y, eps, 2)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_random_instances_bit_exact(p):
    rng = np.random.default_rng(p)
    for _ in range(60):
        X, Y = random_munich_instance(rng)
        eps = float(rng.uniform(0.0, 4.0))
        exact = munich_probability_exact(mos(X), mos(Y), eps, p)
        assert exact == munich_brute_force(X, Y, eps, p)


def test_exact_at_materialised_distances():
    # eps equal to an attained distance exercises the <= boundary
    rng = np.random.default_rng(17)
    for _ in range(40):
        X, Y = random_munich_instance(rng)
        d = lp_naive([s[0] for s in X], [s[-1] for s in Y], 2)
        assert munich_probability_exact(mos(X), mos(Y), d) == munich_brute_force(X, Y, d, 2)


def test_cap_enforced():
    X = mos([[0.0, 1.0, 2.0]] * 4)
    assert combination_count(X, X) == 9**4
    with pytest.raises(InstanceTooLarge, match="instance too large for exact enumeration"):
        munich_probability_exact(X, X, 1.0, cap=1000)


def test_dp_encloses_exact():
    rng = np.random.default_rng(5)
    for _ in range(100):
        X, Y = random_munich_instance(rng)
        eps = float(rng.uniform(0.05, 4.0))
        exact = munich_brute_force(X, Y, eps, 2)
        est = munich_probability_dp(mos(X), mos(Y), eps, 2, bins=16)
        assert est.lower <= exact <= est.upper
        assert est.lower <= est.probability <= est.upper


def test_dp_single_samples_is_binary(rng):
    for _ in range(20):
        x, y = rng.normal(size=5), rng.normal(size=5)
        d = lp_naive(x, y, 2)
        for eps in (0.5 * d, 2.0 * d):
            est = munich_probability_dp(mos([[v] for v in x]), mos([[v] for v in y]), eps)
            assert est.probability == (1.0 if d <= eps else 0.0)


def test_dp_refinement_never_widens():
    rng = np.random.default_rng(8)
    for _ in range(20):
        X, Y = random_munich_instance(rng, max_n=4, max_s=4)
        eps = float(rng.uniform(0.5, 3.0))
        widths = [munich_probability_dp(mos(X), mos(Y), eps, 2, b).width for b in (16, 32, 64, 128, 256)]
        assert all(b <= a + 1e-12 for a, b in zip(widths, widths[1:]))


def test_dp_validation():
    X = mos([[0.0]])
    with pytest.raises(ValidationError):
        munich_probability_dp(X, X, 1.0, bins=8)
    with pytest.raises(ValidationError):
        munich_probability_dp(X, mos([[0.0], [1.0]]), 1.0)


def test_bounds_examples():
    X = mos([[0.0, 2.0], [1.0]])
    Y = mos([[1.0, 3.0], [0.5, 1.5]])
    assert munich_bounds(X, Y).lower == 0.0
    x, y = [1.0, 2.0, 3.0], [0.0, 0.5, -1.0]
    b = munich_bounds(mos([[v] for v in x]), mos([[v] for v in y]))
    assert b.lower == b.upper == lp_naive(x, y, 2)


@given(st.integers(0, 10**6))
def test_bounds_contain_every_materialisation(seed):
    import itertools

    rng = np.random.default_rng(seed)
    X, Y = random_munich_instance(rng)
    b = munich_bounds(mos(X), mos(Y))
    assert b.lower <= b.upper
    for xs in itertools.product(*X):
        for ys in itertools.product(*Y):
            d = lp_naive(xs, ys, 2)
            assert b.lower <= d <= b.upper


@given(st.integers(0, 10**6))
def test_exact_monotone_in_eps_and_bounded(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_munich_instance(rng)
    b = munich_bounds(mos(X), mos(Y))
    probs = [munich_probability_exact(mos(X), mos(Y), e) for e in np.linspace(0, 5, 30)]
    assert all(0.0 <= p <= 1.0 for p in probs)
    assert all(b2 >= a for a, b2 in zip(probs, probs[1:]))
    assert munich_probability_exact(mos(X), mos(Y), b.upper) == 1.0
    if b.lower > 0:
        assert munich_probability_exact(mos(X), mos(Y), np.nextafter(b.lower, 0)) == 0.0


@given(st.integers(0, 10**6))
def test_prefilter_does_not_change_value(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_munich_instance(rng)
    eps = float(rng.uniform(0, 4))
    assert munich_probability(mos(X), mos(Y), eps) == munich_brute_force(X, Y, eps, 2)


def test_large_instance_falls_back_to_dp(rng):
    X = mos([rng.normal(size=5) for _ in range(6)])
    Y = mos([rng.normal(size=5) for _ in range(6)])
    eps = 3.0
    est = munich_probability_dp(X, Y, eps)
    assert munich_probability(X, Y, eps, exact_cap=10**6) == est.probability
    exact = munich_probability_exact(X, Y, eps, cap=10**9)
    assert est.lower <= exact <= est.upper
