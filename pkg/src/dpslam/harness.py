"""Seeded Monte-Carlo runner: predict -> DP mapping -> LOS update, per step.

Trial ``i`` of a run with master seed ``S`` draws all of its randomness from
``numpy.random.SeedSequence(S, spawn_key=(i,))``, so results do not depend
on how trials are scheduled over workers.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from dpslam import dpmap
from dpslam.config import ScenarioConfig, dump_config
from dpslam.errors import DPSlamError
from dpslam.metrics import Aggregates, TrialRecord, aggregate
from dpslam.motion import GaussianState, predict, update_los
from dpslam.world import World, VehicleState, ground_truth_step

log = logging.getLogger(__name__)


def trial_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def initial_estimate(cfg: ScenarioConfig, rng: np.random.Generator) -> GaussianState:
    s0 = np.asarray(cfg.initial_state, dtype=float)
    std = np.asarray(cfg.prior_std, dtype=float)
    mean = s0 + std * rng.standard_normal(7) if cfg.sample_initial_estimate else s0.copy()
    return GaussianState(mean, np.diag(std**2))


def run_trial(cfg: ScenarioConfig, seed=0, *, keep_logs: bool = True, update: bool = True) -> TrialRecord:
    """Run one trial of ``cfg.k_max`` steps.

    ``seed`` is an int or a :class:`numpy.random.SeedSequence`. With
    ``update=False`` the LOS correction is never applied. ``keep_logs``
    retains measurements, births and map snapshots for CSV export.
    """
    cfg.validate()
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.default_rng(seq)
    world = World(cfg, rng)
    Q, R, bs = cfg.Q, cfg.R, cfg.bs

    state = VehicleState.from_array(cfg.initial_state)
    est = initial_estimate(cfg, rng)
    dr = est.copy()
    maps = dpmap.init_maps(bs, cfg.dp)

    K = cfg.k_max
    rec = TrialRecord(
        seed=(seq.entropy, tuple(seq.spawn_key)),
        k=np.arange(1, K + 1),
        truth=np.empty((K, 7)),
        mean=np.empty((K, 7)),
        std=np.empty((K, 7)),
        dead_reckoning=np.empty((K, 7)),
        declared_va=[],
        declared_sp=[],
        true_va=world.va_positions,
        true_sp=world.sp_positions,
        los_found=np.zeros(K, dtype=bool),
    )
    for i, k in enumerate(rec.k):
        state = ground_truth_step(state, cfg.dt)
        Zk = world.synthesize(state, rng, int(k))
        est = predict(est, Q, cfg.dt)
        dr = predict(dr, Q, cfg.dt)
        result = dpmap.step(Zk.as_array(), est, maps, cfg.dp, R, bs)
        if update and result.los is not None:
            try:
                est = update_los(est, result.los, R, bs)
                rec.los_found[i] = True
            except DPSlamError as exc:
                rec.errors.append(f"k={k}: {exc}")
                log.info("step %d: LOS update skipped: %s", k, exc)

        rec.truth[i] = state.as_array()
        rec.mean[i] = est.mean
        rec.std[i] = est.std
        rec.dead_reckoning[i] = dr.mean
        rec.declared_va.append(dpmap.declared_landmarks(maps.va, cfg.dp))
        rec.declared_sp.append(dpmap.declared_landmarks(maps.sp, cfg.dp))
        if keep_logs:
            rec.measurements.append(Zk)
            rec.births.append(result.births)
            rec.maps.append(_snapshot(maps, cfg))
    return rec


def _snapshot(maps: dpmap.Maps, cfg: ScenarioConfig) -> list[tuple]:
    rows = []
    for cmap in (maps.va, maps.sp):
        for j, c in enumerate(cmap.clusters):
            kind = "BS" if c.anchor else cmap.kind.value
            rows.append((kind, j, *c.center.tolist(), c.count, int(cmap.is_declared(j, cfg.dp))))
    return rows


def _run_indexed(args):
    cfg, master_seed, index, keep_logs = args
    t0 = time.perf_counter()
    try:
        rec = run_trial(cfg, trial_seed(master_seed, index), keep_logs=keep_logs)
        return index, rec, None, time.perf_counter() - t0
    except Exception as exc:  # reported in the manifest, remaining trials continue
        return index, None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0


@dataclass
class MonteCarloResult:
    records: list[TrialRecord]
    aggregates: Aggregates
    manifest: dict = field(default_factory=dict)


def run_monte_carlo(
    cfg: ScenarioConfig,
    trials: int | None = None,
    master_seed: int | None = None,
    *,
    workers: int | None = None,
    keep_logs: bool = False,
) -> MonteCarloResult:
    cfg.validate()
    trials = cfg.trials if trials is None else trials
    master_seed = cfg.seed if master_seed is None else master_seed
    workers = cfg.workers if workers is None else workers
    if trials < 1:
        raise ValueError("trials must be >= 1")

    jobs = [(cfg, master_seed, i, keep_logs) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_indexed, jobs))
    else:
        results = [_run_indexed(job) for job in jobs]
    results.sort(key=lambda r: r[0])

    records = [r[1] for r in results if r[1] is not None]
    failures = {r[0]: r[2] for r in results if r[2] is not None}
    if not records:
        raise RuntimeError(f"all {trials} trials failed: {failures}")
    aggregates = aggregate(records, cfg.gospa)
    manifest = {
        "config": dump_config(cfg),
        "master_seed": master_seed,
        "seed_rule": "numpy.random.SeedSequence(master_seed, spawn_key=(trial_index,))",
        "trials": trials,
        "workers": workers,
        "trial_seeds": [[master_seed, [r[0]]] for r in results],
        "failures": {str(k): v for k, v in failures.items()},
        "wall_clock_s": [round(r[3], 6) for r in results],
    }
    return MonteCarloResult(records, aggregates, manifest)


# ---------------------------------------------------------------- CSV output

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


STATE_FIELDS = ("x", "y", "z", "heading", "speed", "turn_rate", "clock_bias")


def states_csv(records: list[TrialRecord]) -> str:
    header = ["trial", "k", *STATE_FIELDS, *(f"std_{f}" for f in STATE_FIELDS)]
    rows = (
        [t, int(k), *r.mean[i].tolist(), *r.std[i].tolist()]
        for t, r in enumerate(records)
        for i, k in enumerate(r.k)
    )
    return _csv_text(header, rows)


def truth_csv(records: list[TrialRecord]) -> str:
    header = ["trial", "k", *STATE_FIELDS]
    rows = ([t, int(k), *r.truth[i].tolist()] for t, r in enumerate(records) for i, k in enumerate(r.k))
    return _csv_text(header, rows)


def measurements_csv(records: list[TrialRecord]) -> str:
    header = ["trial", "k", "tag", "toa", "doa_az", "doa_el", "dod_az", "dod_el"]
    rows = (
        [t, Z.k, m.tag, *m.values.tolist()]
        for t, r in enumerate(records)
        for Z in r.measurements
        for m in Z.items
    )
    return _csv_text(header, rows)


def births_csv(records: list[TrialRecord]) -> str:
    header = ["trial", "k", "kind", "source_index", "source_tag", "x", "y", "z", "cluster", "probability"]

    def rows():
        for t, r in enumerate(records):
            for Z, births in zip(r.measurements, r.births):
                tags = Z.tags
                for b in births:
                    yield [t, Z.k, b.kind.value, b.source_index, tags[b.source_index],
                           *b.mean.tolist(), b.cluster, b.probability]

    return _csv_text(header, rows())


def maps_csv(records: list[TrialRecord]) -> str:
    header = ["trial", "k", "kind", "cluster", "x", "y", "z", "count", "declared"]
    rows = (
        [t, int(k), *row]
        for t, r in enumerate(records)
        for k, snap in zip(r.k, r.maps)
        for row in snap
    )
    return _csv_text(header, rows)


def metrics_csv(agg: Aggregates) -> str:
    return _csv_text(Aggregates.COLUMNS, agg.rows())


def write_outputs(result: MonteCarloResult, out_dir: str | Path) -> dict[str, str]:
    """Write every CSV artifact plus ``manifest.json``; returns file checksums."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "states.csv": states_csv(result.records),
        "truth.csv": truth_csv(result.records),
        "metrics.csv": metrics_csv(result.aggregates),
    }
    if all(r.measurements for r in result.records):
        files["measurements.csv"] = measurements_csv(result.records)
        files["births.csv"] = births_csv(result.records)
        files["maps.csv"] = maps_csv(result.records)
    checksums = {}
    for name, text in files.items():
        data = text.encode()
        (out / name).write_bytes(data)
        checksums[name] = hashlib.sha256(data).hexdigest()
    manifest = dict(result.manifest, checksums=checksums)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return checksums
