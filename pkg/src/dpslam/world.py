"""Ground truth, propagation geometry and measurement synthesis.

Vehicle states are 7-vectors ``[x, y, z, heading, speed, turn_rate, bias]``
and measurements are 5-vectors ``[toa, doa_az, doa_el, dod_az, dod_el]``.
TOA is range-equivalent (meters) and includes the clock bias. DOA angles are
expressed in the vehicle frame (azimuth reduced by the heading), DOD angles in
the global frame at the BS.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from dpslam.config import ScenarioConfig
from dpslam.errors import DegenerateGeometry

X, Y, Z, HEADING, SPEED, TURN, BIAS = range(7)
TOA, DOA_AZ, DOA_EL, DOD_AZ, DOD_EL = range(5)
AZIMUTH_ROWS = (DOA_AZ, DOD_AZ)
STRAIGHT_LINE_TURN = 1e-6
_HORIZONTAL_EPS = 1e-12


def wrap_angle(a):
    """Map angles to (-pi, pi]."""
    return a - 2.0 * np.pi * np.ceil((a - np.pi) / (2.0 * np.pi))


def direction_angles(v: np.ndarray) -> tuple[float, float]:
    """Azimuth and elevation of direction ``v``.

    Raises
    ------
    DegenerateGeometry
        If ``v`` has no horizontal extent, so the azimuth is undefined.
    """
    horizontal = math.hypot(v[0], v[1])
    if horizontal < _HORIZONTAL_EPS:
        raise DegenerateGeometry("azimuth undefined: zero horizontal distance")
    return math.atan2(v[1], v[0]), math.atan2(v[2], horizontal)


@dataclass(frozen=True)
class VehicleState:
    """Vehicle kinematic and clock state."""

    x: float
    y: float
    z: float
    heading: float
    speed: float
    turn_rate: float
    clock_bias: float

    @classmethod
    def from_array(cls, s) -> "VehicleState":
        return cls(*(float(v) for v in s))

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.x, self.y, self.z, self.heading, self.speed, self.turn_rate, self.clock_bias]
        )

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def transition(s: np.ndarray, dt: float) -> np.ndarray:
    """Coordinated-turn transition ``g(s)``; straight line when the turn rate vanishes."""
    out = np.array(s, dtype=float)
    a, v, w = s[HEADING], s[SPEED], s[TURN]
    if abs(w) < STRAIGHT_LINE_TURN:
        out[X] += v * dt * math.cos(a)
        out[Y] += v * dt * math.sin(a)
    else:
        b = a + w * dt
        out[X] += v / w * (math.sin(b) - math.sin(a))
        out[Y] += v / w * (math.cos(a) - math.cos(b))
    out[HEADING] = wrap_angle(a + w * dt)
    return out


def ground_truth_step(state: VehicleState, dt: float) -> VehicleState:
    """Noise-free ground-truth transition of ``state`` over ``dt`` seconds."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return VehicleState.from_array(transition(state.as_array(), dt))


class LandmarkKind(enum.Enum):
    BS = "BS"
    VA = "VA"
    SP = "SP"


@dataclass(frozen=True)
class Plane:
    point: np.ndarray
    normal: np.ndarray

    @classmethod
    def make(cls, point, normal) -> "Plane":
        n = np.asarray(normal, dtype=float)
        return cls(np.asarray(point, dtype=float), n / np.linalg.norm(n))


@dataclass(frozen=True)
class Landmark:
    """A BS, virtual anchor or scattering point.

    ``plane`` is the reflecting surface and is set only for virtual anchors.
    """

    kind: LandmarkKind
    position: np.ndarray
    plane: Plane | None = None
    ident: int = 0

    @classmethod
    def base_station(cls, bs) -> "Landmark":
        return cls(LandmarkKind.BS, np.asarray(bs, dtype=float))

    @classmethod
    def virtual_anchor(cls, bs, plane: Plane, ident: int = 0) -> "Landmark":
        bs = np.asarray(bs, dtype=float)
        u = plane.normal
        mirrored = bs - 2.0 * float(u @ (bs - plane.point)) * u
        return cls(LandmarkKind.VA, mirrored, plane, ident)

    @classmethod
    def scatterer(cls, position, ident: int = 0) -> "Landmark":
        return cls(LandmarkKind.SP, np.asarray(position, dtype=float), None, ident)

    @property
    def tag(self) -> str:
        if self.kind is LandmarkKind.BS:
            return "LOS"
        return f"{self.kind.value}{self.ident}"


def los_form(s: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Direct-path measurement from a source at ``p`` to the vehicle state ``s``."""
    d = np.asarray(p, dtype=float) - s[:3]
    doa_az, doa_el = direction_angles(d)
    dod_az, dod_el = direction_angles(-d)
    return np.array(
        [np.linalg.norm(d) + s[BIAS], wrap_angle(doa_az - s[HEADING]), doa_el, dod_az, dod_el]
    )


def measure(state, landmark: Landmark, bs) -> np.ndarray:
    """Noise-free measurement of the path through ``landmark``.

    ``state`` is a :class:`VehicleState` or a 7-vector.
    """
    s = state.as_array() if isinstance(state, VehicleState) else np.asarray(state, dtype=float)
    bs = np.asarray(bs, dtype=float)
    xs = s[:3]
    if landmark.kind is LandmarkKind.BS:
        return los_form(s, bs)

    lm = landmark.position
    to_lm = lm - xs
    doa_az, doa_el = direction_angles(to_lm)
    doa_az = wrap_angle(doa_az - s[HEADING])
    if landmark.kind is LandmarkKind.VA:
        plane = landmark.plane
        seg = xs - lm
        den = float(plane.normal @ seg)
        if abs(den) < _HORIZONTAL_EPS:
            raise DegenerateGeometry("VA segment parallel to its reflecting plane")
        t = float(plane.normal @ (plane.point - lm)) / den
        q = lm + t * seg
        toa = np.linalg.norm(to_lm) + s[BIAS]
        dod_az, dod_el = direction_angles(q - bs)
    else:
        toa = np.linalg.norm(lm - bs) + np.linalg.norm(to_lm) + s[BIAS]
        dod_az, dod_el = direction_angles(lm - bs)
    return np.array([toa, doa_az, doa_el, dod_az, dod_el])


@dataclass
class Measurement:
    """One path observation.

    ``tag`` is simulation-only ground truth (``LOS``, ``VA<i>``, ``SP<i>`` or
    ``CLUTTER``); estimators only ever receive :meth:`MeasurementSet.as_array`.
    """

    values: np.ndarray
    tag: str

    @property
    def toa(self) -> float:
        return float(self.values[TOA])

    @property
    def doa(self) -> tuple[float, float]:
        return float(self.values[DOA_AZ]), float(self.values[DOA_EL])

    @property
    def dod(self) -> tuple[float, float]:
        return float(self.values[DOD_AZ]), float(self.values[DOD_EL])


@dataclass
class MeasurementSet:
    k: int
    items: list[Measurement] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.items)

    def as_array(self) -> np.ndarray:
        """Estimator view: an ``(I, 5)`` array without truth tags."""
        if not self.items:
            return np.empty((0, 5))
        return np.vstack([m.values for m in self.items])

    @property
    def tags(self) -> list[str]:
        return [m.tag for m in self.items]


def clamp_measurement(z: np.ndarray) -> np.ndarray:
    """Bring a noisy measurement back to the valid angle/TOA ranges."""
    z = np.array(z, dtype=float)
    z[TOA] = max(z[TOA], 0.0)
    z[[DOA_AZ, DOD_AZ]] = wrap_angle(z[[DOA_AZ, DOD_AZ]])
    z[[DOA_EL, DOD_EL]] = np.clip(z[[DOA_EL, DOD_EL]], -np.pi / 2, np.pi / 2)
    return z


class World:
    """Static landmark geometry of one trial.

    Parameters
    ----------
    cfg:
        Scenario description.
    sp_z:
        Heights of the scatterers. Drawn from ``cfg.sp_z_range`` with ``rng``
        when omitted.
    """

    def __init__(self, cfg: ScenarioConfig, rng: np.random.Generator | None = None, sp_z=None):
        self.cfg = cfg
        self.bs = cfg.bs
        self.base_station = Landmark.base_station(self.bs)
        self.virtual_anchors = [
            Landmark.virtual_anchor(self.bs, Plane.make(w.point, w.normal), i)
            for i, w in enumerate(cfg.walls)
        ]
        if sp_z is None:
            if rng is None:
                raise ValueError("either rng or sp_z is required")
            sp_z = rng.uniform(*cfg.sp_z_range, size=len(cfg.sp_xy))
        self.scatterers = [
            Landmark.scatterer([x, y, z], i) for i, ((x, y), z) in enumerate(zip(cfg.sp_xy, sp_z))
        ]

    @property
    def va_positions(self) -> np.ndarray:
        return np.array([lm.position for lm in self.virtual_anchors]).reshape(-1, 3)

    @property
    def sp_positions(self) -> np.ndarray:
        return np.array([lm.position for lm in self.scatterers]).reshape(-1, 3)

    def visible(self, state: VehicleState) -> list[Landmark]:
        xs = state.position
        out = [self.base_station, *self.virtual_anchors]
        out += [sp for sp in self.scatterers if np.linalg.norm(sp.position - xs) <= self.cfg.sp_fov]
        return out

    def synthesize(self, state: VehicleState, rng: np.random.Generator, k: int = 0) -> MeasurementSet:
        return synthesize(state, self, rng, k)

    def trajectory(self) -> list[VehicleState]:
        """True states for k = 0..k_max."""
        states = [VehicleState.from_array(self.cfg.initial_state)]
        for _ in range(self.cfg.k_max):
            states.append(ground_truth_step(states[-1], self.cfg.dt))
        return states


def draw_clutter(rng: np.random.Generator, n: int, max_range: float) -> np.ndarray:
    """``n`` clutter vectors uniform over the measurement hyper-rectangle."""
    lo = np.array([0.0, -np.pi, -np.pi / 2, -np.pi, -np.pi / 2])
    hi = np.array([max_range, np.pi, np.pi / 2, np.pi, np.pi / 2])
    z = rng.uniform(lo, hi, size=(n, 5))
    z[:, [DOA_AZ, DOD_AZ]] = wrap_angle(z[:, [DOA_AZ, DOD_AZ]])
    return z


def clutter_intensity(clutter_rate: float, max_range: float) -> float:
    """Uniform clutter intensity ``lambda / (4 R_max pi^4)`` over measurement space."""
    return clutter_rate / (4.0 * max_range * np.pi**4)


def synthesize(state: VehicleState, world: World, rng: np.random.Generator, k: int = 0) -> MeasurementSet:
    """Detected, noisy landmark measurements plus Poisson clutter, in random order."""
    cfg = world.cfg
    std = np.sqrt(np.asarray(cfg.measurement_noise_diag, dtype=float))
    items = []
    for lm in world.visible(state):
        if rng.random() >= cfg.detection_probability:
            continue
        z = measure(state, lm, world.bs)
        if cfg.add_measurement_noise:
            z = clamp_measurement(z + std * rng.standard_normal(5))
        items.append(Measurement(z, lm.tag))
    n_clutter = rng.poisson(cfg.clutter_rate)
    for z in draw_clutter(rng, n_clutter, cfg.max_range):
        items.append(Measurement(z, "CLUTTER"))
    order = rng.permutation(len(items))
    return MeasurementSet(k, [items[i] for i in order])
