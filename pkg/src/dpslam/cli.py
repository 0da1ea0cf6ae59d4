"""Command-line entry point.

Examples
--------
::

    dpslam default-config > nominal.toml
    dpslam validate-config nominal.toml
    dpslam run --config nominal.toml --trials 50 --seed 7 --out results/
    dpslam dump-truth --config nominal.toml --seed 7 --out truth/
    dpslam dump-births --config nominal.toml --seed 7 --out births/
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from dpslam.config import ScenarioConfig, dump_config, load_config
from dpslam.errors import ConfigError
from dpslam import harness


def _load(path: str | None) -> ScenarioConfig:
    return load_config(path) if path else ScenarioConfig().validate()


def _single_trial(args) -> harness.MonteCarloResult:
    cfg = _load(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    return harness.run_monte_carlo(cfg, 1, seed, workers=1, keep_logs=True)


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def cmd_run(args) -> int:
    cfg = _load(args.config)
    result = harness.run_monte_carlo(
        cfg, args.trials, args.seed, workers=args.workers, keep_logs=not args.no_logs
    )
    checksums = harness.write_outputs(result, args.out)
    failures = result.manifest["failures"]
    for name in sorted(checksums):
        print(f"wrote {Path(args.out) / name}")
    if failures:
        print(f"{len(failures)} trial(s) failed; see manifest.json", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.path)
    print(f"{args.path}: ok ({cfg.k_max} steps, {len(cfg.walls)} walls, {len(cfg.sp_xy)} scatterers)")
    return 0


def cmd_dump_truth(args) -> int:
    result = _single_trial(args)
    out = Path(args.out)
    _write(out, "truth.csv", harness.truth_csv(result.records))
    _write(out, "measurements.csv", harness.measurements_csv(result.records))
    print(f"wrote {out / 'truth.csv'} and {out / 'measurements.csv'}")
    return 0


def cmd_dump_births(args) -> int:
    result = _single_trial(args)
    out = Path(args.out)
    _write(out, "births.csv", harness.births_csv(result.records))
    _write(out, "maps.csv", harness.maps_csv(result.records))
    print(f"wrote {out / 'births.csv'} and {out / 'maps.csv'}")
    return 0


def cmd_default_config(args) -> int:
    sys.stdout.write(dump_config(ScenarioConfig()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpslam", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log estimator events")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded Monte-Carlo trials and write CSV artifacts")
    run.add_argument("--config", help="TOML scenario file (defaults to the nominal scenario)")
    run.add_argument("--trials", type=int, help="number of trials (default: from config)")
    run.add_argument("--seed", type=int, help="master seed (default: from config)")
    run.add_argument("--workers", type=int, help="worker processes (default: from config)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--no-logs", action="store_true", help="skip measurements/births/maps CSVs")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate-config", help="check a scenario file")
    val.add_argument("path")
    val.set_defaults(func=cmd_validate)

    for name, func, helptext in (
        ("dump-truth", cmd_dump_truth, "write ground truth and measurements of one trial"),
        ("dump-births", cmd_dump_births, "write birth points and map snapshots of one trial"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    dc = sub.add_parser("default-config", help="print the nominal scenario as TOML")
    dc.set_defaults(func=cmd_default_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
