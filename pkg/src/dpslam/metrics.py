"""Mapping and localization accuracy metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from dpslam.config import GospaConfig
from dpslam.world import BIAS, HEADING, wrap_angle


@dataclass(frozen=True)
class GospaResult:
    """GOSPA distance with its decomposition.

    ``localization`` is the summed ``d**p`` over assigned pairs closer than
    the cutoff; ``missed`` and ``false`` are counts of unmatched truth and
    estimate points.
    """

    total: float
    localization: float
    missed: int
    false: int


def gospa(estimates, truth, cfg: GospaConfig | None = None) -> GospaResult:
    """GOSPA distance between two finite point sets.

    Truncated distances ``min(d, c)**p`` are assigned optimally, and every
    point left over by the cardinality mismatch costs ``c**p / alpha``.
    """
    cfg = cfg or GospaConfig()
    p, c, alpha = cfg.p, cfg.c, cfg.alpha
    X = np.asarray(estimates, dtype=float).reshape(-1, 3) if len(estimates) else np.empty((0, 3))
    T = np.asarray(truth, dtype=float).reshape(-1, 3) if len(truth) else np.empty((0, 3))
    n_est, n_true = len(X), len(T)
    cardinality = c**p / alpha * abs(n_est - n_true)
    if n_est == 0 or n_true == 0:
        return GospaResult(cardinality ** (1.0 / p), 0.0, n_true, n_est)

    dist = cdist(T, X)
    cost = np.minimum(dist, c) ** p
    rows, cols = linear_sum_assignment(cost)
    matched = dist[rows, cols] < c
    total = cost[rows, cols].sum() + cardinality
    localization = float((dist[rows, cols][matched] ** p).sum())
    n_matched = int(matched.sum())
    return GospaResult(float(total ** (1.0 / p)), localization, n_true - n_matched, n_est - n_matched)


@dataclass
class TrialRecord:
    """Everything recorded for one Monte-Carlo trial, indexed by step k = 1..k_max.

    ``declared_va[k]`` and ``declared_sp[k]`` are ``(n, 3)`` arrays of the
    landmarks declared after step ``k``. ``dead_reckoning`` holds the
    prediction-only estimate started from the same initial estimate.
    """

    seed: tuple
    k: np.ndarray
    truth: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    dead_reckoning: np.ndarray
    declared_va: list[np.ndarray]
    declared_sp: list[np.ndarray]
    true_va: np.ndarray
    true_sp: np.ndarray
    los_found: np.ndarray
    measurements: list = field(default_factory=list, repr=False)
    births: list = field(default_factory=list, repr=False)
    maps: list = field(default_factory=list, repr=False)
    errors: list[str] = field(default_factory=list)


@dataclass
class Aggregates:
    k: np.ndarray
    mae_pos: np.ndarray
    rmse_bias: np.ndarray
    rmse_heading: np.ndarray
    gospa_va: np.ndarray
    gospa_sp: np.ndarray
    mae_pos_dead_reckoning: np.ndarray

    COLUMNS = ("k", "mae_pos", "rmse_bias", "rmse_heading", "gospa_va", "gospa_sp", "mae_pos_dead_reckoning")

    def rows(self):
        for i in range(len(self.k)):
            yield [int(self.k[i])] + [float(getattr(self, c)[i]) for c in self.COLUMNS[1:]]


def position_errors(estimate: np.ndarray, truth: np.ndarray) -> np.ndarray:
    return np.linalg.norm(estimate[..., :3] - truth[..., :3], axis=-1)


def aggregate(trials: list[TrialRecord], cfg: GospaConfig | None = None) -> Aggregates:
    """Per-step means across trials: position MAE, bias/heading RMSE and GOSPA."""
    if not trials:
        raise ValueError("aggregate needs at least one trial")
    cfg = cfg or GospaConfig()
    truth = np.stack([t.truth for t in trials])
    mean = np.stack([t.mean for t in trials])
    dr = np.stack([t.dead_reckoning for t in trials])
    heading_err = wrap_angle(mean[..., HEADING] - truth[..., HEADING])
    bias_err = mean[..., BIAS] - truth[..., BIAS]
    g_va = np.array(
        [[gospa(t.declared_va[i], t.true_va, cfg).total for i in range(len(t.k))] for t in trials]
    )
    g_sp = np.array(
        [[gospa(t.declared_sp[i], t.true_sp, cfg).total for i in range(len(t.k))] for t in trials]
    )
    return Aggregates(
        k=trials[0].k.copy(),
        mae_pos=position_errors(mean, truth).mean(axis=0),
        rmse_bias=np.sqrt((bias_err**2).mean(axis=0)),
        rmse_heading=np.sqrt((heading_err**2).mean(axis=0)),
        gospa_va=g_va.mean(axis=0),
        gospa_sp=g_sp.mean(axis=0),
        mae_pos_dead_reckoning=position_errors(dr, truth).mean(axis=0),
    )
