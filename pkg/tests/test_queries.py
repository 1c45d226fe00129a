import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import lp_naive, munich_brute_force
from uncertts.core import MultiObservationSeries, ProbabilisticSeries, TimeSeries, ValidationError
from uncertts.distances import DustTables, munich_bounds
from uncertts.queries import (
    QuerySpec,
    Technique,
    calibrate_thresholds,
    ground_truth,
    knn,
    probabilistic_range_query,
    range_query,
    run_query,
    tenth_neighbor,
)


def pool(rng, m=50, n=8):
    return [TimeSeries(r) for r in rng.normal(size=(m, n))]


def ps(obs, std):
    obs = np.asarray(obs, dtype=float)
    return ProbabilisticSeries(obs, np.full(obs.size, float(std)), np.ones(obs.size, dtype=np.int8))


def test_range_query_examples(rng):
    C = pool(rng)
    assert range_query(C[3], C, 0.0) == {3}
    assert range_query(C[3], C, 1e9) == set(range(len(C)))


def test_range_query_matches_scan(rng):
    C = pool(rng)
    q = TimeSeries(rng.normal(size=8))
    eps = 3.0
    want = {i for i, s in enumerate(C) if lp_naive(q.values, s.values, 2) <= eps}
    assert range_query(q, C, eps) == want


@given(st.integers(0, 10**6), st.floats(0, 5), st.floats(0, 5))
def test_range_query_monotone_in_eps(seed, a, b):
    rng = np.random.default_rng(seed)
    C = pool(rng, 20, 4)
    lo, hi = sorted((a, b))
    assert range_query(C[0], C, lo) <= range_query(C[0], C, hi)


def test_knn_examples(rng):
    C = pool(rng)
    q = TimeSeries(rng.normal(size=8))
    d = [lp_naive(q.values, s.values, 2) for s in C]
    assert knn(q, C, len(C)) == sorted(range(len(C)), key=lambda i: (d[i], i))
    assert knn(C[7], C, 1) == [7]
    with pytest.raises(ValidationError):
        knn(q, C, len(C) + 1)


def test_knn_ties_by_index():
    C = [TimeSeries([1.0]), TimeSeries([-1.0]), TimeSeries([1.0]), TimeSeries([0.0])]
    assert knn(TimeSeries([0.0]), C, 4) == [3, 0, 1, 2]


@given(st.integers(0, 10**6), st.integers(1, 19))
def test_knn_prefix(seed, k):
    C = pool(np.random.default_rng(seed), 20, 3)
    q = TimeSeries([0.0, 0.0, 0.0])
    assert knn(q, C, k + 1)[:k] == knn(q, C, k)


def test_ground_truth(rng):
    C = pool(rng, 10)
    assert ground_truth(C[0], C) == set(range(10))
    C = pool(rng, 40)
    q = TimeSeries(rng.normal(size=8))
    d = [lp_naive(q.values, s.values, 2) for s in C]
    assert ground_truth(q, C) == set(sorted(range(40), key=lambda i: (d[i], i))[:10])
    with pytest.raises(ValidationError):
        ground_truth(q, C[:9])


def test_calibration():
    rng = np.random.default_rng(9)
    tables = DustTables()
    C = [ps(r, 0.5) for r in rng.normal(size=(30, 12))]
    q = ps(rng.normal(size=12), 0.5)
    t1 = calibrate_thresholds(q, C, tables)
    assert t1 == calibrate_thresholds(q, C, tables)
    e = run_query(q, C, QuerySpec("euclid", t1.eps_eucl), tables)
    d = run_query(q, C, QuerySpec("dust", t1.eps_dust), tables)
    assert e == d and len(e) == 10
    # exactly ten members: c is the farthest
    ten = C[:10]
    far = max(range(10), key=lambda i: lp_naive(q.observations, ten[i].observations, 2))
    assert tenth_neighbor(q, ten) == far
    with pytest.raises(ValidationError):
        calibrate_thresholds(q, C[:9], tables)


def test_query_spec_tau_rule():
    with pytest.raises(ValidationError):
        QuerySpec("proud", 1.0)
    with pytest.raises(ValidationError):
        QuerySpec("euclid", 1.0, tau=0.5)
    assert QuerySpec("munich", 1.0, tau=0.5).technique is Technique.MUNICH


def test_probabilistic_rejects_deterministic_technique(rng):
    with pytest.raises(ValidationError):
        probabilistic_range_query(None, [], QuerySpec("dust", 1.0))


def mos(rows):
    return MultiObservationSeries(tuple(np.asarray(r, dtype=float) for r in rows))


def test_munich_enclosing_eps(rng):
    X = [mos(rng.normal(size=(3, 2))) for _ in range(5)]
    eps = max(munich_bounds(X[0], y).upper for y in X)
    assert probabilistic_range_query(X[0], X, QuerySpec("munich", eps, tau=0.99)) == set(range(5))


def test_certain_data_matches_range_query(rng):
    rows = rng.normal(size=(12, 4))
    eps = 2.0
    want = range_query(TimeSeries(rows[0]), [TimeSeries(r) for r in rows], eps)
    single = [mos([[v] for v in r]) for r in rows]
    assert probabilistic_range_query(single[0], single, QuerySpec("munich", eps, tau=0.5)) == want
    # near-certain: a vanishing error leaves only the observed distance
    certain = [ProbabilisticSeries(r, np.full(4, 1e-9), np.ones(4, dtype=np.int8)) for r in rows]
    assert probabilistic_range_query(certain[0], certain, QuerySpec("proud", eps, tau=0.5)) == want


def test_munich_membership_against_oracle():
    rng = np.random.default_rng(77)
    raw = [[rng.normal(size=2) for _ in range(2)] for _ in range(5)]
    C = [mos(r) for r in raw]
    for eps in (0.5, 1.0, 2.0):
        for tau in (0.1, 0.5, 0.9):
            want = {i for i in range(5) if munich_brute_force(raw[0], raw[i], eps, 2) >= tau}
            assert probabilistic_range_query(C[0], C, QuerySpec("munich", eps, tau=tau)) == want


@given(st.integers(0, 10**6), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_munich_shrinks_with_tau(seed, a, b):
    rng = np.random.default_rng(seed)
    C = [mos(rng.normal(size=(2, 2))) for _ in range(6)]
    lo, hi = sorted((a, b))
    big = probabilistic_range_query(C[0], C, QuerySpec("munich", 1.5, tau=lo))
    small = probabilistic_range_query(C[0], C, QuerySpec("munich", 1.5, tau=hi))
    assert small <= big


def test_filters_through_run_query(rng):
    C = [ps(r, 0.3) for r in rng.normal(size=(20, 10))]
    got = run_query(C[0], C, QuerySpec("uema", 0.0, w=2, lam=1.0))
    assert 0 in got
