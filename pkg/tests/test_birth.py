import numpy as np
import pytest

from dpslam.birth import (
    BirthKind, birth_covariance, bisector_intersection, sp_birth, unfold, va_birth,
)
from dpslam.config import ScenarioConfig
from dpslam.errors import DegenerateGeometry, NegativeRange
from dpslam.motion import GaussianState
from dpslam.world import Landmark, Plane, World, draw_clutter, los_form, measure

from conftest import central_diff, random_state

CFG = ScenarioConfig()
BS = CFG.bs
R = CFG.R


def exact(s):
    return GaussianState(np.asarray(s, dtype=float), np.diag([0.1, 0.1, 0, 0.1, 0, 0, 0.1]))


@pytest.fixture
def world():
    return World(CFG, sp_z=[20.0, 10.0, 30.0, 5.0])


def test_los_birth_lands_on_bs():
    rng = np.random.default_rng(0)
    for _ in range(200):
        s = random_state(rng)
        b = va_birth(los_form(s, BS), exact(s), R)
        assert np.allclose(b.mean, BS, atol=1e-9)
        assert b.kind is BirthKind.VA


def test_va_birth_round_trip(world):
    rng = np.random.default_rng(1)
    for _ in range(200):
        s = random_state(rng)
        s[:2] = rng.uniform(-90, 90, 2)
        for va in world.virtual_anchors:
            b = va_birth(measure(s, va, BS), exact(s), R)
            assert np.allclose(b.mean, va.position, atol=1e-8)


def test_sp_birth_round_trip_example():
    sp = Landmark.scatterer([65.0, 65.0, 20.0])
    s = np.array([40.0, 50.0, 0.0, 0.3, 10, 0.1, 300])
    b = sp_birth(measure(s, sp, BS), exact(s), R, BS)
    assert np.allclose(b.mean, [65.0, 65.0, 20.0], atol=1e-6)
    assert b.kind is BirthKind.SP


def test_sp_birth_round_trip_random():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        s = random_state(rng)
        p = np.array([rng.uniform(-90, 90), rng.uniform(-90, 90), rng.uniform(0, 40)])
        if np.linalg.norm(p - s[:3]) < 1 or np.linalg.norm(p - BS) < 1:
            continue
        b = sp_birth(measure(s, Landmark.scatterer(p), BS), exact(s), R, BS)
        worst = max(worst, np.linalg.norm(b.mean - p))
    assert worst < 1e-6


def test_sp_birth_equidistant_from_bs_and_unfolded_va():
    rng = np.random.default_rng(3)
    for _ in range(200):
        s = random_state(rng)
        z = los_form(s, BS) + np.array([rng.uniform(5, 80), *rng.uniform(-0.5, 0.5, 4)])
        m_va = unfold(z, s)
        try:
            m = bisector_intersection(m_va, s[:3], BS)
        except DegenerateGeometry:
            continue
        assert np.linalg.norm(m - BS) == pytest.approx(np.linalg.norm(m - m_va), rel=1e-9)


def _oracle_cov(m, pred, R):
    # numerical Jacobians wrt state and wrt the landmark
    Hs = central_diff(lambda s: los_form(s, m), pred.mean)
    Hx = central_diff(lambda p: los_form(pred.mean, p), m)
    S = Hs @ pred.cov @ Hs.T + R
    return np.linalg.inv(Hx.T @ np.linalg.inv(S) @ Hx)


def test_birth_covariance_matches_numeric_information(world):
    rng = np.random.default_rng(4)
    for _ in range(50):
        s = random_state(rng)
        s[:2] = rng.uniform(-90, 90, 2)
        pred = exact(s)
        for lm in world.virtual_anchors[:2]:
            m = lm.position
            C = birth_covariance(m, pred, R)
            assert np.allclose(C, C.T)
            assert np.linalg.eigvalsh(C).min() > 0
            assert np.allclose(C, _oracle_cov(m, pred, R), rtol=1e-4, atol=1e-9)


def test_smaller_noise_gives_smaller_covariance(world):
    s = np.array([30.0, -20.0, 0.0, 0.5, 10, 0.1, 300])
    pred = exact(s)
    m = world.virtual_anchors[0].position
    assert np.trace(birth_covariance(m, pred, R / 10)) < np.trace(birth_covariance(m, pred, R))


def test_unfold_negative_range():
    s = np.array([30.0, -20.0, 0.0, 0.5, 10, 0.1, 300])
    z = los_form(s, BS)
    z[0] = 299.0
    with pytest.raises(NegativeRange):
        unfold(z, s)
    with pytest.raises(NegativeRange):
        va_birth(z, exact(s), R)


def test_bisector_degenerate_cases():
    xs = np.array([10.0, 0.0, 0.0])
    with pytest.raises(DegenerateGeometry):
        bisector_intersection(BS.copy(), xs, BS)
    # segment lying in a plane parallel to the bisector plane
    m_va = np.array([0.0, 0.0, -40.0])
    with pytest.raises(DegenerateGeometry):
        bisector_intersection(m_va, np.array([10.0, 0.0, -40.0]), BS)
    # crossing beyond the vehicle end of the segment
    with pytest.raises(DegenerateGeometry):
        bisector_intersection(m_va, np.array([1.0, 0.0, -30.0]), BS)


def test_clutter_births_do_not_pile_up():
    rng = np.random.default_rng(5)
    s = np.array(CFG.initial_state)
    s[6] = 0.0
    pred = exact(s)
    births = []
    for z in draw_clutter(rng, 300, CFG.max_range):
        try:
            births.append(va_birth(z, pred, R).mean)
        except NegativeRange:
            pass
    pts = np.array(births)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    np.fill_diagonal(d, np.inf)
    assert len(pts) > 250
    assert np.median(d.min(axis=1)) > 5.0


def test_mirror_position_of_wall_x100():
    lm = Landmark.virtual_anchor(BS, Plane.make([100, 0, 0], [1, 0, 0]))
    assert np.allclose(lm.position, [200, 0, 40])
