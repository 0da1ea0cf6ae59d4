"""Landmark-position hypotheses ("birth points") generated from single measurements.

Every measurement is inverted twice: once assuming it arrived from a virtual
anchor (straight-line unfolding of the path along the DOA), and once assuming
it was scattered by a point, which must then lie on the perpendicular
bisector plane between the BS and the unfolded VA position.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from dpslam.errors import DegenerateGeometry, NegativeRange, SingularCovariance
from dpslam.motion import GaussianState, jacobian_h_los
from dpslam.world import BIAS, DOA_AZ, DOA_EL, HEADING, TOA


class BirthKind(enum.Enum):
    VA = "VA"
    SP = "SP"


@dataclass
class BirthPoint:
    mean: np.ndarray
    cov: np.ndarray
    source_index: int
    kind: BirthKind


def birth_covariance(m: np.ndarray, pred: GaussianState, R: np.ndarray) -> np.ndarray:
    """First-order landmark covariance ``(Hx^T S^-1 Hx)^-1``.

    ``S = Hs V Hs^T + R`` propagates the predicted vehicle uncertainty and
    the measurement noise; both Jacobians are of the direct-path model with
    the landmark hypothesis ``m`` in place of the BS.
    """
    Hs = jacobian_h_los(pred.mean, m)
    Hx = -Hs[:, :3]
    S = Hs @ pred.cov @ Hs.T + R
    try:
        info = Hx.T @ np.linalg.solve(S, Hx)
        C = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(str(exc)) from exc
    return 0.5 * (C + C.T)


def unfold(z: np.ndarray, pred_mean: np.ndarray) -> np.ndarray:
    """Position at path length ``toa - bias`` along the DOA from the predicted vehicle."""
    path = z[TOA] - pred_mean[BIAS]
    if path <= 0:
        raise NegativeRange(f"toa {z[TOA]:.3f} does not exceed predicted bias {pred_mean[BIAS]:.3f}")
    az = z[DOA_AZ] + pred_mean[HEADING]
    el = z[DOA_EL]
    r = path * math.cos(el)
    return pred_mean[:3] + np.array([r * math.cos(az), r * math.sin(az), path * math.sin(el)])


def va_birth(z, pred: GaussianState, R: np.ndarray, source_index: int = 0) -> BirthPoint:
    """VA birth point of measurement ``z``; LOS paths land on the BS."""
    m = unfold(np.asarray(z, dtype=float), pred.mean)
    return BirthPoint(m, birth_covariance(m, pred, R), source_index, BirthKind.VA)


def bisector_intersection(m_va: np.ndarray, xs: np.ndarray, bs: np.ndarray) -> np.ndarray:
    """Point where the segment from ``m_va`` to ``xs`` crosses the bisector plane of ``[bs, m_va]``.

    Raises
    ------
    DegenerateGeometry
        If ``m_va`` coincides with the BS, the segment is parallel to the
        plane, or the crossing lies outside the segment.
    """
    axis = bs - m_va
    length = np.linalg.norm(axis)
    if length < 1e-9:
        raise DegenerateGeometry("VA hypothesis coincides with the BS")
    u = axis / length
    f = 0.5 * (bs + m_va)
    ray = xs - m_va
    den = float(u @ ray)
    if abs(den) < 1e-9:
        raise DegenerateGeometry("path parallel to the bisector plane")
    t = float(u @ (f - m_va)) / den
    if not 0.0 < t <= 1.0:
        raise DegenerateGeometry(f"bisector crossing outside the path (t={t:.3g})")
    return m_va + t * ray


def sp_birth(z, pred: GaussianState, R: np.ndarray, bs, source_index: int = 0) -> BirthPoint:
    """SP birth point of measurement ``z``."""
    bs = np.asarray(bs, dtype=float)
    m_va = unfold(np.asarray(z, dtype=float), pred.mean)
    m = bisector_intersection(m_va, pred.mean[:3], bs)
    return BirthPoint(m, birth_covariance(m, pred, R), source_index, BirthKind.SP)
