"""Scenario, DP and GOSPA configuration.

Configurations are plain dataclasses. They round-trip through a TOML file
with one table per dataclass (``[scenario]``, ``[dp]``, ``[gospa]``) and an
array of ``[[scenario.walls]]`` tables for the reflecting planes. Every field
is optional in the file; missing keys take the defaults below, which describe
the nominal circular-road scenario (single BS, four walls, four scatterers).
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from dpslam.errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib


def _diag(values) -> np.ndarray:
    return np.diag(np.asarray(values, dtype=float))


@dataclass
class Wall:
    """Infinite reflecting plane through ``point`` with unit ``normal``."""

    point: tuple[float, float, float]
    normal: tuple[float, float, float]


@dataclass
class DPConfig:
    """Dirichlet-process mapping parameters.

    Attributes
    ----------
    omega:
        Concentration parameter.
    mu0, sigma0_diag:
        Mean and diagonal covariance of the new-cluster density.
    n_va, n_sp:
        Count thresholds at which a cluster is declared a landmark.
    anchor_diag:
        Diagonal covariance of the BS-anchored cluster in the VA map.
    likelihood:
        ``"predictive"`` scores a birth point against cluster ``j`` with
        ``N(m; c_j, Sigma_j + C)``, accounting for the birth covariance ``C``;
        ``"cluster"`` uses ``N(m; c_j, Sigma_j)`` alone. The new-cluster
        density is ``N(m; mu0, Sigma0)`` either way.
    sp_exclusion:
        Which measurements are withheld from the SP map. ``"joined"``: any
        whose VA birth joined an existing VA cluster (anchor, declared or
        not). ``"declared"``: only those that joined the anchor or a declared
        VA cluster.
    """

    omega: float = 0.9
    mu0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    sigma0_diag: tuple[float, float, float] = (100.0, 100.0, 100.0)
    n_va: int = 10
    n_sp: int = 5
    anchor_diag: tuple[float, float, float] = (0.01, 0.01, 0.01)
    likelihood: str = "predictive"
    sp_exclusion: str = "joined"

    @property
    def sigma0(self) -> np.ndarray:
        return _diag(self.sigma0_diag)

    @property
    def anchor_cov(self) -> np.ndarray:
        return _diag(self.anchor_diag)

    def validate(self) -> None:
        if not self.omega > 0:
            raise ConfigError(f"dp.omega must be > 0, got {self.omega}")
        if self.n_va < 1 or self.n_sp < 1:
            raise ConfigError("dp.n_va and dp.n_sp must be >= 1")
        if min(self.sigma0_diag) <= 0 or min(self.anchor_diag) <= 0:
            raise ConfigError("dp covariances must be positive definite")
        if self.likelihood not in ("predictive", "cluster"):
            raise ConfigError(f"dp.likelihood must be 'predictive' or 'cluster', got {self.likelihood!r}")
        if self.sp_exclusion not in ("joined", "declared"):
            raise ConfigError(f"dp.sp_exclusion must be 'joined' or 'declared', got {self.sp_exclusion!r}")
        _check_len("dp.mu0", self.mu0, 3)
        _check_len("dp.sigma0_diag", self.sigma0_diag, 3)
        _check_len("dp.anchor_diag", self.anchor_diag, 3)


@dataclass
class GospaConfig:
    """GOSPA order ``p``, cutoff ``c`` (meters) and cardinality weight ``alpha``."""

    p: float = 2.0
    c: float = 20.0
    alpha: float = 2.0

    def validate(self) -> None:
        if self.p < 1:
            raise ConfigError(f"gospa.p must be >= 1, got {self.p}")
        if not self.c > 0:
            raise ConfigError(f"gospa.c must be > 0, got {self.c}")
        if not 0 < self.alpha <= 2:
            raise ConfigError(f"gospa.alpha must lie in (0, 2], got {self.alpha}")


def _default_walls() -> list[Wall]:
    return [
        Wall((100.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
        Wall((0.0, 100.0, 0.0), (0.0, 1.0, 0.0)),
        Wall((-100.0, 0.0, 0.0), (-1.0, 0.0, 0.0)),
        Wall((0.0, -100.0, 0.0), (0.0, -1.0, 0.0)),
    ]


def _default_sp_xy() -> list[tuple[float, float]]:
    return [(65.0, 65.0), (-65.0, 65.0), (-65.0, -65.0), (65.0, -65.0)]


@dataclass
class ScenarioConfig:
    """Full experiment description.

    State vectors use the layout ``[x, y, z, heading, speed, turn_rate,
    clock_bias]``; measurement vectors use ``[toa, doa_az, doa_el, dod_az,
    dod_el]``. Noise matrices are given by their diagonals.
    """

    k_max: int = 40
    dt: float = 0.5
    initial_state: tuple[float, ...] = (0.7285, 0.0, 0.0, math.pi / 2, 22.22, math.pi / 10, 300.0)
    prior_std: tuple[float, ...] = (0.3, 0.3, 0.0, 0.3, 0.0, 0.0, 0.3)
    process_noise_diag: tuple[float, ...] = (0.2, 0.2, 0.0, 0.01, 0.0, 0.0, 0.2)
    measurement_noise_diag: tuple[float, ...] = (1e-2, 1e-4, 1e-4, 1e-4, 1e-4)
    bs_position: tuple[float, float, float] = (0.0, 0.0, 40.0)
    walls: list[Wall] = field(default_factory=_default_walls)
    sp_xy: list[tuple[float, float]] = field(default_factory=_default_sp_xy)
    sp_z_range: tuple[float, float] = (0.0, 40.0)
    detection_probability: float = 0.9
    sp_fov: float = 50.0
    clutter_rate: float = 1.0
    max_range: float = 200.0
    # when False, measurements are synthesized noise-free (the filter still uses R)
    add_measurement_noise: bool = True
    # when False, the filter starts exactly at initial_state instead of a prior draw
    sample_initial_estimate: bool = True
    trials: int = 50
    seed: int = 0
    workers: int = 1
    dp: DPConfig = field(default_factory=DPConfig)
    gospa: GospaConfig = field(default_factory=GospaConfig)

    @property
    def Q(self) -> np.ndarray:
        return _diag(self.process_noise_diag)

    @property
    def R(self) -> np.ndarray:
        return _diag(self.measurement_noise_diag)

    @property
    def bs(self) -> np.ndarray:
        return np.asarray(self.bs_position, dtype=float)

    def validate(self) -> "ScenarioConfig":
        if self.k_max < 1:
            raise ConfigError("k_max must be >= 1")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        _check_len("initial_state", self.initial_state, 7)
        _check_len("prior_std", self.prior_std, 7)
        _check_len("process_noise_diag", self.process_noise_diag, 7)
        _check_len("measurement_noise_diag", self.measurement_noise_diag, 5)
        _check_len("bs_position", self.bs_position, 3)
        if min(self.prior_std) < 0 or min(self.process_noise_diag) < 0:
            raise ConfigError("noise entries must be >= 0")
        if min(self.measurement_noise_diag) < 0:
            raise ConfigError("noise entries must be >= 0")
        if not 0 <= self.detection_probability <= 1:
            raise ConfigError("detection_probability must lie in [0, 1]")
        if self.clutter_rate < 0:
            raise ConfigError("clutter_rate must be >= 0")
        if not self.max_range > 0 or self.sp_fov < 0:
            raise ConfigError("max_range must be > 0 and sp_fov >= 0")
        if self.initial_state[4] < 0:
            raise ConfigError("initial speed must be >= 0")
        lo, hi = self.sp_z_range
        if hi < lo:
            raise ConfigError("sp_z_range must be ordered (low, high)")
        for xy in self.sp_xy:
            _check_len("sp_xy entry", xy, 2)
        for wall in self.walls:
            _check_len("wall point", wall.point, 3)
            _check_len("wall normal", wall.normal, 3)
            if np.linalg.norm(wall.normal) < 1e-12:
                raise ConfigError("wall normal must be non-zero")
        if self.trials < 1 or self.workers < 1:
            raise ConfigError("trials and workers must be >= 1")
        self.dp.validate()
        self.gospa.validate()
        return self

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _check_len(name: str, values, n: int) -> None:
    if len(values) != n:
        raise ConfigError(f"{name} must have {n} entries, got {len(values)}")


def _tuple(value):
    if isinstance(value, list):
        return tuple(_tuple(v) for v in value)
    return value


def _build(cls, table: dict[str, Any], where: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**{k: _tuple(v) for k, v in table.items()})
    except TypeError as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def config_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Build and validate a :class:`ScenarioConfig` from parsed TOML tables."""
    unknown = set(data) - {"scenario", "dp", "gospa"}
    if unknown:
        raise ConfigError(f"unknown table(s): {', '.join(sorted(unknown))}")
    scenario = dict(data.get("scenario", {}))
    walls = scenario.pop("walls", None)
    if "sp_xy" in scenario:
        scenario["sp_xy"] = [tuple(xy) for xy in scenario["sp_xy"]]
    cfg = _build(ScenarioConfig, scenario, "scenario")
    if walls is not None:
        cfg.walls = [_build(Wall, w, "scenario.walls") for w in walls]
    cfg.sp_xy = [tuple(xy) for xy in cfg.sp_xy]
    cfg.dp = _build(DPConfig, data.get("dp", {}), "dp")
    cfg.gospa = _build(GospaConfig, data.get("gospa", {}), "gospa")
    return cfg.validate()


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a TOML scenario file; raises :class:`ConfigError` on bad input."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return '"' + value + '"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot format {value!r}")


_COMMENTS = {
    "k_max": "number of time steps",
    "dt": "seconds between steps",
    "initial_state": "[x m, y m, z m, heading rad, speed m/s, turn_rate rad/s, clock_bias m]",
    "prior_std": "std of the initial estimate, same layout as initial_state",
    "process_noise_diag": "diag(Q), same layout as initial_state",
    "measurement_noise_diag": "diag(R): [toa m^2, doa_az, doa_el, dod_az, dod_el rad^2]",
    "bs_position": "base station [x, y, z] m",
    "sp_xy": "scatterer [x, y] m; z is drawn per trial from sp_z_range",
    "detection_probability": "p_D for every landmark in view",
    "sp_fov": "scatterers are visible within this distance (m)",
    "clutter_rate": "mean number of clutter measurements per step",
    "max_range": "clutter TOA upper bound (m)",
    "omega": "DP concentration",
    "mu0": "new-cluster mean (m)",
    "sigma0_diag": "new-cluster covariance diagonal (m^2)",
    "n_va": "VA declaration threshold (cluster count)",
    "n_sp": "SP declaration threshold (cluster count)",
    "anchor_diag": "BS-anchored cluster covariance diagonal (m^2)",
    "likelihood": "cluster score: \"predictive\" N(m; c, Sigma + C) or \"cluster\" N(m; c, Sigma)",
    "sp_exclusion": "withhold from SP map: \"joined\" any VA-cluster join, \"declared\" anchor/declared only",
    "p": "GOSPA order",
    "c": "GOSPA cutoff (m)",
    "alpha": "GOSPA cardinality weight",
}


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize ``cfg`` to commented TOML accepted by :func:`load_config`."""
    lines = ["# dpslam scenario configuration", "", "[scenario]"]

    def emit(obj, skip=()):
        for f in dataclasses.fields(obj):
            if f.name in skip:
                continue
            note = _COMMENTS.get(f.name)
            if note:
                lines.append(f"# {note}")
            lines.append(f"{f.name} = {_fmt(getattr(obj, f.name))}")

    emit(cfg, skip=("walls", "dp", "gospa"))
    for wall in cfg.walls:
        lines += ["", "[[scenario.walls]]", f"point = {_fmt(wall.point)}", f"normal = {_fmt(wall.normal)}"]
    lines += ["", "[dp]"]
    emit(cfg.dp)
    lines += ["", "[gospa]"]
    emit(cfg.gospa)
    return "\n".join(lines) + "\n"
