#!/usr/bin/env python3
"""Run every preset once and tabulate windowed errors.

Writes per-run CSV/JSON artifacts under --out-dir and prints one row per
preset. Presets whose solver gives up mid-run are reported with the step at
which they stopped instead of window metrics.

Usage: python3 scripts/run_benchmarks.py [--out-dir out/benchmarks] [--seed 1]
"""

import argparse
import sys
import time

from plmpc import cli as cli_mod
from plmpc import config as config_mod
from plmpc.plant import SimulationAborted, metrics, preset, preset_names, run_closed_loop


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="out/benchmarks")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--presets", nargs="*", default=None,
                        help="subset to run (default: all)")
    args = parser.parse_args()

    names = args.presets or preset_names()
    print(f"{'preset':<9} {'steps':>5} {'mean|e_c| 1-100':>16} "
          f"{'mean|e_c| 301-500':>18} {'max|u|':>10} {'time':>7}")
    for name in names:
        cfg = config_mod.with_overrides(preset(name), seed=args.seed)
        t0 = time.perf_counter()
        aborted = None
        try:
            log = run_closed_loop(cfg)
        except SimulationAborted as exc:
            log, aborted = exc.partial, exc.step
        dt = time.perf_counter() - t0
        cli_mod.write_outputs(cfg, log, args.out_dir, dt,
                              aborted_step=aborted, quiet=True)
        if aborted is not None:
            print(f"{name:<9} {log.steps:>5} {'stopped at ' + str(aborted):>35} "
                  f"{'-':>10} {dt:>6.2f}s")
            continue
        early = metrics(log, (1, 100))
        late = metrics(log, (301, 500))
        print(f"{name:<9} {log.steps:>5} {early.mean_abs_ec:>16.4g} "
              f"{late.mean_abs_ec:>18.4g} {late.max_abs_u:>10.3g} {dt:>6.2f}s")
    print(f"\nartifacts in {args.out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
