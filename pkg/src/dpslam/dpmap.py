"""Streaming Dirichlet-process clustering of birth points.

Two cluster maps are kept per trial. The VA map starts with a single cluster
anchored at the known BS; birth points joining it identify the LOS
measurement. The SP map starts empty and only receives measurements that the
VA map did not explain.

Each birth point is assigned once, in arrival order, to the cluster with the
largest Chinese-restaurant posterior weight

    existing j:  N(m; c_j, Sigma_j) * d_j   / (D - 1 + omega)
    new:         N(m; mu0, Sigma0)  * omega / (D - 1 + omega)

where ``D - 1`` is the number of points assigned before the current one, and
is then fused into that cluster in information form.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from dpslam.birth import BirthKind, BirthPoint, sp_birth, va_birth
from dpslam.config import DPConfig
from dpslam.errors import DPSlamError
from dpslam.motion import GaussianState

log = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)
_MAX_CONDITION = 1e12
_JITTER = 1e-9


@dataclass
class Cluster:
    center: np.ndarray
    cov: np.ndarray
    count: int = 1
    anchor: bool = False


@dataclass
class ClusterMap:
    """Clusters of one landmark type.

    ``total_count`` is the running number of points ever assigned to the map,
    including the anchor's initial unit count.
    """

    kind: BirthKind
    clusters: list[Cluster] = field(default_factory=list)
    total_count: int = 0

    def __len__(self) -> int:
        return len(self.clusters)

    def copy(self) -> "ClusterMap":
        return ClusterMap(
            self.kind,
            [Cluster(c.center.copy(), c.cov.copy(), c.count, c.anchor) for c in self.clusters],
            self.total_count,
        )

    def threshold(self, cfg: DPConfig) -> int:
        return cfg.n_va if self.kind is BirthKind.VA else cfg.n_sp

    def is_declared(self, j: int, cfg: DPConfig) -> bool:
        c = self.clusters[j]
        return not c.anchor and c.count >= self.threshold(cfg)


@dataclass
class Maps:
    va: ClusterMap
    sp: ClusterMap

    def copy(self) -> "Maps":
        return Maps(self.va.copy(), self.sp.copy())


def init_maps(bs, cfg: DPConfig) -> Maps:
    anchor = Cluster(np.asarray(bs, dtype=float).copy(), cfg.anchor_cov, 1, anchor=True)
    return Maps(ClusterMap(BirthKind.VA, [anchor], 1), ClusterMap(BirthKind.SP, [], 0))


def gaussian_logpdf(x: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """Log density of ``x`` under each of the stacked Gaussians ``(means[j], covs[j])``."""
    L = np.linalg.cholesky(covs)
    diff = (x - means)[..., None]
    w = np.linalg.solve(L, diff)[..., 0]
    maha = np.einsum("...i,...i->...", w, w)
    logdet = 2.0 * np.log(np.diagonal(L, axis1=-2, axis2=-1)).sum(axis=-1)
    return -0.5 * (maha + logdet + x.shape[-1] * _LOG_2PI)


@dataclass
class Assignment:
    """Result of :func:`assign`.

    ``log_weights`` are the unnormalized log posterior weights of every
    existing cluster followed by the new-cluster option; ``probabilities``
    is their normalization.
    """

    index: int
    log_weights: np.ndarray
    probabilities: np.ndarray

    @property
    def is_new(self) -> bool:
        return self.index == len(self.log_weights) - 1

    @property
    def probability(self) -> float:
        return float(self.probabilities[self.index])


def assign(b: BirthPoint, cmap: ClusterMap, cfg: DPConfig) -> Assignment:
    m = np.asarray(b.mean, dtype=float)
    denom = math.log(cmap.total_count + cfg.omega)
    logw = np.empty(len(cmap) + 1)
    if cmap.clusters:
        centers = np.array([c.center for c in cmap.clusters])
        covs = np.array([c.cov for c in cmap.clusters])
        counts = np.array([c.count for c in cmap.clusters], dtype=float)
        if cfg.likelihood == "predictive":
            covs = covs + b.cov
        logw[:-1] = gaussian_logpdf(m, centers, covs) + np.log(counts) - denom
    mu0 = np.asarray(cfg.mu0, dtype=float)
    logw[-1] = gaussian_logpdf(m, mu0, cfg.sigma0) + math.log(cfg.omega) - denom
    logw = np.where(np.isnan(logw), -np.inf, logw)
    if np.isneginf(logw).all():
        index = len(logw) - 1
        probs = np.zeros_like(logw)
        probs[-1] = 1.0
        return Assignment(index, logw, probs)
    # argmax returns the first maximum: lowest existing index, existing before new
    index = int(np.argmax(logw))
    top = logw[index]
    probs = np.exp(logw - top)
    probs /= probs.sum()
    return Assignment(index, logw, probs)


def _information(P: np.ndarray) -> np.ndarray:
    if np.linalg.cond(P) > _MAX_CONDITION:
        log.warning("ill-conditioned covariance in fusion; adding %.0e jitter", _JITTER)
        P = P + _JITTER * np.eye(len(P))
    return np.linalg.inv(P)


def fuse(cluster: Cluster, b: BirthPoint) -> Cluster:
    """Information-form fusion of birth point ``b`` into ``cluster``."""
    Ic = _information(cluster.cov)
    Ib = _information(b.cov)
    cov = np.linalg.inv(Ic + Ib)
    cov = 0.5 * (cov + cov.T)
    center = cov @ (Ic @ cluster.center + Ib @ b.mean)
    return Cluster(center, cov, cluster.count + 1, cluster.anchor)


def add_point(cmap: ClusterMap, b: BirthPoint, cfg: DPConfig) -> Assignment:
    """Assign ``b`` and fold it into ``cmap`` (the only mutating map operation)."""
    a = assign(b, cmap, cfg)
    if a.is_new:
        cmap.clusters.append(Cluster(b.mean.copy(), b.cov.copy(), 1))
    else:
        cmap.clusters[a.index] = fuse(cmap.clusters[a.index], b)
    cmap.total_count += 1
    return a


def declared_landmarks(cmap: ClusterMap, cfg: DPConfig) -> np.ndarray:
    """Centers of clusters whose count reached the declaration threshold, anchor excluded."""
    out = [c.center for j, c in enumerate(cmap.clusters) if cmap.is_declared(j, cfg)]
    return np.array(out).reshape(-1, 3)


@dataclass
class BirthRecord:
    kind: BirthKind
    source_index: int
    mean: np.ndarray
    cluster: int
    probability: float


@dataclass
class StepResult:
    """Outcome of one mapping step.

    ``labels[i]`` is ``"LOS"``, ``"VA"``, ``"SP"`` or ``None`` for measurement
    ``i``: the path type inferred from the cluster its birth point joined
    (``"SP"`` only when that SP cluster is declared).
    """

    los: np.ndarray | None
    los_index: int | None
    labels: list[str | None]
    births: list[BirthRecord]
    maps: Maps


def step(Z, pred: GaussianState, maps: Maps, cfg: DPConfig, R: np.ndarray, bs) -> StepResult:
    """Run the VA phase then the SP phase on measurement array ``Z`` of shape ``(I, 5)``.

    ``maps`` is updated in place. Measurements whose birth generation fails
    are skipped and logged.
    """
    Z = np.asarray(Z, dtype=float).reshape(-1, 5)
    bs = np.asarray(bs, dtype=float)
    labels: list[str | None] = [None] * len(Z)
    births: list[BirthRecord] = []
    sp_candidates = []
    los_index, los_prob = None, -1.0

    for i, z in enumerate(Z):
        try:
            b = va_birth(z, pred, R, i)
        except DPSlamError as exc:
            log.debug("VA birth skipped for measurement %d: %s", i, exc)
            continue
        a = add_point(maps.va, b, cfg)
        births.append(BirthRecord(BirthKind.VA, i, b.mean, a.index, a.probability))
        if maps.va.clusters[a.index].anchor:
            labels[i] = "LOS"
            if a.probability > los_prob:
                los_index, los_prob = i, a.probability
        elif maps.va.is_declared(a.index, cfg):
            labels[i] = "VA"
        elif cfg.sp_exclusion == "declared" or a.is_new:
            sp_candidates.append(i)

    for i in sp_candidates:
        try:
            b = sp_birth(Z[i], pred, R, bs, i)
        except DPSlamError as exc:
            log.debug("SP birth skipped for measurement %d: %s", i, exc)
            continue
        a = add_point(maps.sp, b, cfg)
        births.append(BirthRecord(BirthKind.SP, i, b.mean, a.index, a.probability))
        if maps.sp.is_declared(a.index, cfg):
            labels[i] = "SP"

    los = None if los_index is None else Z[los_index].copy()
    return StepResult(los, los_index, labels, births, maps)
