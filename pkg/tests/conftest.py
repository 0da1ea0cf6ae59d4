import numpy as np
import pytest

from dpslam.config import ScenarioConfig


def central_diff(f, x, h=1e-6):
    """Central finite-difference Jacobian of ``f`` at ``x``."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x))
    J = np.zeros((f0.size, x.size))
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h)
    return J


def max_rel_err(A, B, floor=1e-3):
    """Entrywise relative error, measured against ``max(|B|, floor)``."""
    return float(np.max(np.abs(A - B) / np.maximum(np.abs(B), floor)))


def random_state(rng, bs=(0.0, 0.0, 40.0), min_horizontal=5.0):
    """Vehicle state well away from the BS vertical axis."""
    while True:
        s = np.array([
            rng.uniform(-150, 150), rng.uniform(-150, 150), rng.uniform(-5, 5),
            rng.uniform(-np.pi, np.pi), rng.uniform(1, 30),
            rng.choice([-1, 1]) * rng.uniform(0.05, 1.0), rng.uniform(-50, 400),
        ])
        if np.hypot(s[0] - bs[0], s[1] - bs[1]) > min_horizontal:
            return s


@pytest.fixture
def cfg():
    return ScenarioConfig()


@pytest.fixture
def noise_free_cfg():
    return ScenarioConfig(
        add_measurement_noise=False,
        clutter_rate=0.0,
        detection_probability=1.0,
        sample_initial_estimate=False,
    )
