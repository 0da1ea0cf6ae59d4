"""Extended Kalman filter over the 7D vehicle state.

Prediction runs through the coordinated-turn transition; correction uses the
LOS measurement only (TOA, DOA and DOD of the direct BS path).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dpslam.errors import DegenerateGeometry, SingularInnovation
from dpslam.world import (
    AZIMUTH_ROWS,
    BIAS,
    HEADING,
    SPEED,
    STRAIGHT_LINE_TURN,
    TURN,
    X,
    Y,
    los_form,
    transition,
    wrap_angle,
)

_MAX_CONDITION = 1e12


@dataclass
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def copy(self) -> "GaussianState":
        return GaussianState(self.mean.copy(), self.cov.copy())

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))


def symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def jacobian_g(s: np.ndarray, dt: float) -> np.ndarray:
    """Analytic Jacobian of :func:`dpslam.world.transition` at ``s``.

    The position block is the identity; heading advances by ``turn_rate * dt``
    and the remaining states (speed, turn rate, clock bias) are carried over.
    """
    G = np.eye(7)
    a, v, w = s[HEADING], s[SPEED], s[TURN]
    G[HEADING, TURN] = dt
    if abs(w) < STRAIGHT_LINE_TURN:
        ca, sa = math.cos(a), math.sin(a)
        G[X, HEADING] = -v * dt * sa
        G[Y, HEADING] = v * dt * ca
        G[X, SPEED] = dt * ca
        G[Y, SPEED] = dt * sa
        G[X, TURN] = -0.5 * v * dt * dt * sa
        G[Y, TURN] = 0.5 * v * dt * dt * ca
        return G
    b = a + w * dt
    sa, ca, sb, cb = math.sin(a), math.cos(a), math.sin(b), math.cos(b)
    r = v / w
    G[X, HEADING] = r * (cb - ca)
    G[Y, HEADING] = r * (sb - sa)
    G[X, SPEED] = (sb - sa) / w
    G[Y, SPEED] = (ca - cb) / w
    G[X, TURN] = r * (cb * dt + (sa - sb) / w)
    G[Y, TURN] = r * (sb * dt - (ca - cb) / w)
    return G


def jacobian_h_los(s: np.ndarray, source) -> np.ndarray:
    """Analytic 5x7 Jacobian of the direct-path measurement from ``source``.

    ``source`` is the BS for the EKF update; birth generation passes a
    landmark hypothesis instead. The derivative with respect to the source
    position equals minus the position block.
    """
    d = np.asarray(source, dtype=float) - s[:3]
    phi2 = d[0] ** 2 + d[1] ** 2
    phi = math.sqrt(phi2)
    if phi < 1e-12:
        raise DegenerateGeometry("vehicle on the vertical axis of the source")
    rho2 = phi2 + d[2] ** 2
    rho = math.sqrt(rho2)

    H = np.zeros((5, 7))
    H[0, :3] = -d / rho
    H[0, BIAS] = 1.0
    az_row = np.array([d[1] / phi2, -d[0] / phi2, 0.0])
    el_row = np.array([d[2] * d[0] / (rho2 * phi), d[2] * d[1] / (rho2 * phi), -phi / rho2])
    H[1, :3] = az_row
    H[1, HEADING] = -1.0
    H[2, :3] = el_row
    H[3, :3] = az_row
    H[4, :3] = -el_row
    return H


def predict(prior: GaussianState, Q: np.ndarray, dt: float) -> GaussianState:
    G = jacobian_g(prior.mean, dt)
    return GaussianState(transition(prior.mean, dt), symmetrize(G @ prior.cov @ G.T + Q))


def innovation(z: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    nu = np.asarray(z, dtype=float) - predicted
    nu[list(AZIMUTH_ROWS)] = wrap_angle(nu[list(AZIMUTH_ROWS)])
    return nu


def update_los(pred: GaussianState, z_los, R: np.ndarray, bs) -> GaussianState:
    """EKF correction with the LOS measurement ``z_los``.

    Raises
    ------
    SingularInnovation
        If the innovation covariance has condition number above 1e12.
    DegenerateGeometry
        If the predicted vehicle sits on the BS vertical axis.
    """
    s, P = pred.mean, pred.cov
    H = jacobian_h_los(s, bs)
    S = H @ P @ H.T + R
    if np.linalg.cond(S) > _MAX_CONDITION:
        raise SingularInnovation("innovation covariance is numerically singular")
    K = np.linalg.solve(S, H @ P).T
    nu = innovation(z_los, los_form(s, bs))
    mean = s + K @ nu
    mean[HEADING] = wrap_angle(mean[HEADING])
    A = np.eye(7) - K @ H
    # Joseph form keeps the covariance PSD
    cov = symmetrize(A @ P @ A.T + K @ R @ K.T)
    return GaussianState(mean, cov)
