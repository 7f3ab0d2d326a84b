"""Shared argument handling for the preset scripts."""

import argparse
import sys

from nkfb.config import ConfigError
from nkfb.presets import run_preset


def main(preset, description):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--out", default=f"out/{preset}", help="output directory")
    ap.add_argument("--n-traj", type=int, default=None, help="trajectories per ensemble")
    ap.add_argument("--seed", type=int, default=None, help="master seed")
    args = ap.parse_args()
    overrides = {}
    if args.n_traj is not None:
        overrides["n_traj"] = args.n_traj
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    try:
        paths = run_preset(preset, overrides, args.out)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit("run one of the fig_*.py or *_sweep.py scripts instead")
