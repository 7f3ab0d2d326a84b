"""Command line entry point.

::

    nkfb run --config FILE [--override section.key=value ...] [--check K]
    nkfb preset NAME --out DIR [--set key=value ...]
    nkfb validate --config FILE

Exit codes: 0 success, 1 invalid configuration, 2 runtime failure,
3 failed ``--check`` against the analytic reference.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .config import ConfigError, _parse_value, load_config
from .engine import ConfigError as EngineConfigError
from .ensemble import run_ensemble, validate_against_oracle
from .kernels import TrajectoryError
from .output import build_id, emit, write_manifest
from .presets import PRESETS, oracle_for, run_preset, task_from_config
from .quantum import ValidationError
from .sme import StepFailure

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3


def _parser():
    ap = argparse.ArgumentParser(prog="nkfb", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one ensemble from a TOML config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    run.add_argument("--check", type=float, default=None, metavar="K",
                     help="compare with the analytic reference; fail if fewer than 99%% of points lie within K SEM")

    pre = sub.add_parser("preset", help="run a figure preset")
    pre.add_argument("name", choices=sorted(PRESETS))
    pre.add_argument("--out", required=True, type=Path)
    pre.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="settings",
                     help="override a preset parameter, e.g. n_traj=1000")

    val = sub.add_parser("validate", help="check a config file and print the resolved values")
    val.add_argument("--config", required=True, type=Path)
    return ap


def _settings(items):
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError([f"setting {item!r} is not key=value"])
        out[key.strip()] = _parse_value(value.strip())
    return out


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.override)
    task = task_from_config(cfg)
    out = Path(cfg.output.dir)
    ext = cfg.output.format
    start = time.perf_counter()
    result = run_ensemble(task, cfg.ensemble.n_traj, cfg.ensemble.master_seed, cfg.ensemble.workers)
    elapsed = time.perf_counter() - start
    manifest = {
        "preset": None,
        "params": cfg.params(),
        "seed": cfg.ensemble.master_seed,
        "n_traj": cfg.ensemble.n_traj,
        "workers": cfg.ensemble.workers,
        "build_id": build_id(),
        "elapsed_s": round(elapsed, 3),
        "config_digest": result.config_digest,
    }
    # data files carry the manifest minus wall time so reruns stay byte-identical
    stable = {k: v for k, v in manifest.items() if k != "elapsed_s"}
    emit(result, out / f"ensemble.{ext}", ext, stable)
    oracle, t_range = oracle_for(cfg, result.times)
    emit(oracle, out / f"oracle.{ext}", ext, dict(stable, oracle=oracle.label, oracle_t_range=list(t_range)))
    write_manifest(out, manifest)
    print(f"wrote {out}/ensemble.{ext} ({len(result.times)} points, {result.n_traj} trajectories, {elapsed:.1f} s)")
    if args.check is not None:
        report = validate_against_oracle(result, oracle, k_sigma=args.check, t_range=t_range)
        print(f"check vs {oracle.label} on t in [{t_range[0]:g}, {t_range[1]:g}]: {report.summary()}")
        return EXIT_OK if report.passed else EXIT_CHECK
    return EXIT_OK


def cmd_preset(args) -> int:
    files = run_preset(args.name, _settings(args.settings), args.out)
    for f in files:
        print(f)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    for key, value in cfg.params().items():
        print(f"{key} = {value}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": cmd_run, "preset": cmd_preset, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except (EngineConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TrajectoryError, StepFailure, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
