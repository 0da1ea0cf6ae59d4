import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpslam.config import GospaConfig
from dpslam.metrics import TrialRecord, aggregate, gospa


def brute_injective(X, Y, p, c, alpha):
    """Minimum over injective maps from the smaller set, with truncated costs."""
    if len(X) > len(Y):
        X, Y = Y, X
    best = math.inf
    for perm in itertools.permutations(range(len(Y)), len(X)):
        cost = sum(min(np.linalg.norm(X[i] - Y[j]), c) ** p for i, j in enumerate(perm))
        best = min(best, cost)
    if not len(X):
        best = 0.0
    return (best + c**p / alpha * (len(Y) - len(X))) ** (1 / p)


def brute_partial(X, Y, p, c):
    """Alpha = 2 form: minimum over partial assignments of matched cost plus c^p/2 per unmatched point."""
    best = math.inf
    for r in range(min(len(X), len(Y)) + 1):
        for xs in itertools.combinations(range(len(X)), r):
            for ys in itertools.permutations(range(len(Y)), r):
                cost = sum(np.linalg.norm(X[i] - Y[j]) ** p for i, j in zip(xs, ys))
                cost += c**p / 2 * (len(X) + len(Y) - 2 * r)
                best = min(best, cost)
    return best ** (1 / p)


def pts(rng, n, scale=15.0):
    return rng.normal(scale=scale, size=(n, 3))


def test_identical_sets_are_zero():
    X = np.array([[1.0, 2, 3], [4, 5, 6]])
    r = gospa(X, X)
    assert r.total == 0.0 and r.missed == 0 and r.false == 0


def test_single_miss():
    r = gospa(np.empty((0, 3)), np.array([[0.0, 0, 0]]))
    assert r.total == pytest.approx(math.sqrt(200), abs=1e-9)
    assert r.total == pytest.approx(14.142, abs=1e-3)
    assert r.missed == 1 and r.false == 0


def test_both_empty():
    assert gospa([], []).total == 0.0


def test_full_miss_of_four():
    assert gospa([], np.zeros((4, 3))).total == pytest.approx(math.sqrt(4 * 200))


def test_decomposition():
    T = np.array([[0.0, 0, 0], [100, 0, 0]])
    X = np.array([[3.0, 4, 0], [0, 100, 0], [0, -100, 0]])
    r = gospa(X, T)
    assert r.localization == pytest.approx(25.0)
    assert r.missed == 1 and r.false == 2
    assert r.total ** 2 == pytest.approx(25 + 200 * 3)


@pytest.mark.parametrize("alpha", [1.0, 2.0])
@pytest.mark.parametrize("p", [1, 2])
def test_matches_injective_oracle(p, alpha):
    rng = np.random.default_rng(int(10 * p + alpha))
    cfg = GospaConfig(p=p, c=20.0, alpha=alpha)
    for _ in range(60):
        X, Y = pts(rng, rng.integers(0, 5)), pts(rng, rng.integers(0, 5))
        assert gospa(X, Y, cfg).total == pytest.approx(brute_injective(X, Y, p, 20.0, alpha), rel=1e-9, abs=1e-12)


def test_matches_partial_assignment_oracle():
    rng = np.random.default_rng(5)
    for _ in range(60):
        X, Y = pts(rng, rng.integers(0, 5)), pts(rng, rng.integers(0, 5))
        assert gospa(X, Y).total == pytest.approx(brute_partial(X, Y, 2, 20.0), rel=1e-9, abs=1e-12)


point_sets = st.lists(
    st.tuples(*[st.floats(-50, 50, allow_nan=False)] * 3), min_size=0, max_size=4
).map(lambda xs: np.array(xs, dtype=float).reshape(-1, 3))


@settings(max_examples=60, deadline=None)
@given(point_sets, point_sets)
def test_symmetry(X, Y):
    assert gospa(X, Y).total == pytest.approx(gospa(Y, X).total, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(point_sets, point_sets, point_sets)
def test_triangle_inequality(X, Y, Z):
    assert gospa(X, Z).total <= gospa(X, Y).total + gospa(Y, Z).total + 1e-9


def test_removing_a_false_estimate_never_hurts():
    rng = np.random.default_rng(6)
    for _ in range(100):
        T = pts(rng, 3)
        X = np.vstack([T + rng.normal(scale=0.5, size=T.shape), rng.uniform(200, 300, (1, 3))])
        assert gospa(X[:-1], T).total <= gospa(X, T).total


def _record(truth, mean):
    K = len(truth)
    empty = [np.empty((0, 3))] * K
    return TrialRecord(
        seed=(0, (0,)), k=np.arange(1, K + 1), truth=truth, mean=mean, std=np.zeros_like(mean),
        dead_reckoning=mean.copy(), declared_va=empty, declared_sp=empty,
        true_va=np.zeros((4, 3)), true_sp=np.zeros((0, 3)), los_found=np.ones(K, bool),
    )


def test_aggregate_heading_rmse_and_position_mae():
    truth = np.zeros((5, 7))
    truth[:, 3] = 1.0
    a, b = truth.copy(), truth.copy()
    a[:, 3] += 0.1
    b[:, 3] -= 0.1
    a[:, 0] += 1.0
    b[:, 1] -= 1.0
    agg = aggregate([_record(truth, a), _record(truth, b)])
    assert np.allclose(agg.rmse_heading, 0.1)
    assert np.allclose(agg.mae_pos, 1.0)
    assert np.allclose(agg.rmse_bias, 0.0)
    assert np.allclose(agg.gospa_va, math.sqrt(800))
    assert np.allclose(agg.gospa_sp, 0.0)


def test_heading_error_wraps():
    truth = np.zeros((3, 7))
    truth[:, 3] = math.pi - 0.05
    est = truth.copy()
    est[:, 3] = -math.pi + 0.05
    agg = aggregate([_record(truth, est)])
    assert np.allclose(agg.rmse_heading, 0.1)
    shifted = truth.copy()
    shifted[:, 3] += 2 * math.pi
    assert np.allclose(aggregate([_record(truth, shifted)]).rmse_heading, 0.0, atol=1e-12)


def test_aggregate_rejects_empty():
    with pytest.raises(ValueError):
        aggregate([])
