#!/usr/bin/env python3
"""Compare dictionary families on one plant across seeds.

Reproduces the headline orderings at desk scale: for a chosen plant family
(eg4 = smooth saturating gain, eg5/eg6 = sinusoidal gain) it runs every
member preset over a seed list and prints median late-window errors plus the
identified-gain snapshot ranges.

Usage: python3 scripts/dictionary_sweep.py --family eg4 [--seeds 1,2,3,4,5]
"""

import argparse
import statistics
import sys

import numpy as np

from plmpc import config as config_mod
from plmpc.model import coeff_g_grid
from plmpc.plant import SimulationAborted, metrics, preset, preset_names, run_closed_loop


def run_one(cfg):
    try:
        return run_closed_loop(cfg), None
    except SimulationAborted as exc:
        return exc.partial, exc.step


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--family", default="eg4",
                        help="preset prefix, e.g. eg4, eg5, eg6")
    parser.add_argument("--seeds", default="1,2,3,4,5")
    parser.add_argument("--window", default="301:500")
    args = parser.parse_args()

    seeds = [int(s) for s in args.seeds.split(",") if s]
    lo, hi = (int(v) for v in args.window.split(":"))
    members = [n for n in preset_names() if n.startswith(args.family + "-")]
    if not members:
        print(f"no presets start with {args.family!r}", file=sys.stderr)
        return 2

    print(f"{'preset':<9} {'median mean|e_c|':>17} {'median mean|e_p|':>17} "
          f"{'aborts':>6}   identified gain over y in [-6,6] (snapshot)")
    for name in members:
        ecs, eps, aborts = [], [], 0
        snapshot = None
        for seed in seeds:
            cfg = config_mod.with_overrides(preset(name), seed=seed)
            log, aborted = run_one(cfg)
            if aborted is not None or log.steps < hi:
                aborts += 1
                continue
            m = metrics(log, (lo, hi))
            ecs.append(m.mean_abs_ec)
            eps.append(m.mean_abs_ep)
            if snapshot is None:
                step = min(cfg.output.snapshot_step, log.steps)
                ys = np.linspace(-6.0, 6.0, 61)
                snapshot = coeff_g_grid(cfg.structure, log.theta[step - 1], 1, ys)
        if ecs:
            grange = (f"[{snapshot.min():+.2f}, {snapshot.max():+.2f}]"
                      if snapshot is not None else "-")
            print(f"{name:<9} {statistics.median(ecs):>17.4g} "
                  f"{statistics.median(eps):>17.4g} {aborts:>6}   {grange}")
        else:
            print(f"{name:<9} {'-':>17} {'-':>17} {aborts:>6}   every seed stopped early")
    return 0


if __name__ == "__main__":
    sys.exit(main())
