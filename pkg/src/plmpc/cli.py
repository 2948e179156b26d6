"""Command-line front end: run experiments, compare presets, self-test.

Exit codes: 0 success, 2 configuration error, 3 runtime/solver error.
The per-step CSV schema is fixed: header
k,y,u,r,e_c,e_p,log10_abs_ec,log10_abs_ep,subiters,qp_ridge
with floats at 17 significant digits and a -16 sentinel for the decimal log
of an exact zero, so identical configs and seeds give identical bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import statistics
import sys
import tempfile
import time

import numpy as np

from . import __version__, config as config_mod, selftest as selftest_mod
from .model import coeff_g_grid
from .plant import (
    RunLog,
    SimulationAborted,
    log10_abs,
    metrics,
    preset,
    preset_names,
    run_closed_loop,
)

CSV_HEADER = "k,y,u,r,e_c,e_p,log10_abs_ec,log10_abs_ep,subiters,qp_ridge"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def render_csv(log: RunLog) -> str:
    ec_log = log10_abs(log.e_c)
    ep_log = log10_abs(log.e_p)
    lines = [CSV_HEADER]
    for i in range(log.steps):
        lines.append(",".join([
            str(int(log.k[i])),
            _g17(log.y[i]), _g17(log.u[i]), _g17(log.r[i]),
            _g17(log.e_c[i]), _g17(log.e_p[i]),
            _g17(ec_log[i]), _g17(ep_log[i]),
            str(int(log.subiters[i])), str(int(log.qp_ridge[i])),
        ]))
    return "\n".join(lines) + "\n"


def render_ghat_grid(cfg, log: RunLog) -> str:
    """Identified first input coefficient over the output grid at the snapshot step."""
    step = min(cfg.output.snapshot_step, log.steps)
    theta = log.theta[step - 1]
    ys = np.linspace(cfg.output.grid_lo, cfg.output.grid_hi, cfg.output.grid_points)
    gs = coeff_g_grid(cfg.structure, theta, 1, ys)
    lines = ["y,ghat_1"]
    for yv, gv in zip(ys, gs):
        lines.append(f"{_g17(yv)},{_g17(gv)}")
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_summary(cfg, log: RunLog, elapsed_s: float, aborted_step=None) -> dict:
    doc = config_mod.to_document(cfg)
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    window_metrics = {}
    for window in cfg.output.windows:
        if window[1] <= log.steps:
            m = metrics(log, window)
            window_metrics[f"{window[0]}-{window[1]}"] = {
                "mean_abs_ec": m.mean_abs_ec,
                "mean_abs_ep": m.mean_abs_ep,
                "max_abs_u": m.max_abs_u,
            }
    return {
        "schema_version": "1",
        "name": cfg.name,
        "seed": cfg.seed,
        "steps": log.steps,
        "aborted_at_step": aborted_step,
        "config": doc,
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
        "metrics": window_metrics,
        "final_theta": [float(v) for v in log.theta[-1]] if log.steps else [],
        "rng": "pcg64",
        "warmup_noise": "standard-deviation",
        "timing": {
            "total_s": elapsed_s,
            "mean_step_ms": float(np.mean(log.wall_ms)) if log.steps else 0.0,
            "max_step_ms": float(np.max(log.wall_ms)) if log.steps else 0.0,
        },
        "versions": {
            "plmpc": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
    }


def write_outputs(cfg, log: RunLog, out_dir: str, elapsed_s: float,
                  aborted_step=None, quiet=False) -> str:
    os.makedirs(out_dir, exist_ok=True)
    stem = cfg.name
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    _atomic_write(csv_path, render_csv(log))
    summary = build_summary(cfg, log, elapsed_s, aborted_step)
    _atomic_write(os.path.join(out_dir, f"{stem}_summary.json"),
                  json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if log.steps:
        _atomic_write(os.path.join(out_dir, f"{stem}_ghat.csv"),
                      render_ghat_grid(cfg, log))
    if not quiet:
        for key, vals in summary["metrics"].items():
            print(f"{stem} steps {key}: mean|e_c|={vals['mean_abs_ec']:.6g} "
                  f"mean|e_p|={vals['mean_abs_ep']:.6g}")
        print(f"wrote {csv_path}")
    return csv_path


def _load_cfg(args) -> "config_mod.SimConfig":
    if bool(args.preset) == bool(args.config):
        raise config_mod.ConfigError("give exactly one of --preset or --config")
    if args.preset:
        try:
            cfg = preset(args.preset)
        except KeyError as exc:
            raise config_mod.ConfigError(str(exc.args[0])) from exc
    else:
        cfg = config_mod.load_config_file(args.config)
    return config_mod.with_overrides(
        cfg, seed=args.seed, steps=args.steps, snapshot_step=args.snapshot_step)


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    t0 = time.perf_counter()
    try:
        log = run_closed_loop(cfg)
    except SimulationAborted as exc:
        write_outputs(cfg, exc.partial, args.out_dir, time.perf_counter() - t0,
                      aborted_step=exc.step, quiet=args.quiet)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    write_outputs(cfg, log, args.out_dir, time.perf_counter() - t0, quiet=args.quiet)
    return EXIT_OK


def _parse_window(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise config_mod.ConfigError(
            f"window must look like START:END, got {text!r}") from None


def cmd_compare(args) -> int:
    names = args.presets
    seeds = [int(s) for s in args.seeds.split(",") if s]
    if not seeds:
        raise config_mod.ConfigError("need at least one seed")
    window = _parse_window(args.window)
    rows = []
    for name in names:
        try:
            base = preset(name)
        except KeyError as exc:
            raise config_mod.ConfigError(str(exc.args[0])) from exc
        if args.steps is not None:
            base = config_mod.with_overrides(base, steps=args.steps)
        if window[1] > base.steps:
            raise config_mod.ConfigError(
                f"window {args.window} exceeds run length {base.steps}")
        ec_means, ep_means = [], []
        for seed in seeds:
            log = run_closed_loop(config_mod.with_overrides(base, seed=seed))
            m = metrics(log, window)
            ec_means.append(m.mean_abs_ec)
            ep_means.append(m.mean_abs_ep)
        rows.append((name, statistics.median(ec_means), statistics.median(ep_means)))

    width = max(len(r[0]) for r in rows)
    print(f"{'preset':<{width}}  median mean|e_c|  median mean|e_p|   "
          f"(steps {window[0]}..{window[1]}, {len(seeds)} seeds)")
    for name, ec, ep in rows:
        print(f"{name:<{width}}  {ec:>16.6g}  {ep:>16.6g}")
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            na, ea = rows[i][0], rows[i][1]
            nb, eb = rows[j][0], rows[j][1]
            ratio = eb / ea if ea else float("inf")
            print(f"ratio {nb}/{na}: {ratio:.6g}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    report = (lambda _msg: None) if args.quiet else print
    failures = selftest_mod.run_checks(report=report)
    if failures:
        print(f"{len(failures)} of {len(selftest_mod.CHECKS)} checks failed",
              file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet:
        print(f"all {len(selftest_mod.CHECKS)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plmpc",
        description="Adaptive receding-horizon control benchmarks for scalar "
                    "pseudo-linear systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one closed-loop experiment")
    run_p.add_argument("--preset", help=f"one of: {', '.join(preset_names())}")
    run_p.add_argument("--config", help="path to a YAML config document")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--steps", type=int, default=None)
    run_p.add_argument("--out-dir", default="out")
    run_p.add_argument("--snapshot-step", type=int, default=None,
                       help="step whose coefficients feed the ghat grid table")
    run_p.add_argument("--quiet", action="store_true")
    run_p.set_defaults(fn=cmd_run)

    cmp_p = sub.add_parser("compare", help="run presets over seeds and compare errors")
    cmp_p.add_argument("presets", nargs="+")
    cmp_p.add_argument("--seeds", default="1,2,3,4,5")
    cmp_p.add_argument("--steps", type=int, default=None)
    cmp_p.add_argument("--window", default="301:500")
    cmp_p.set_defaults(fn=cmd_compare)

    st_p = sub.add_parser("selftest", help="run the built-in diagnostic checks")
    st_p.add_argument("--quiet", action="store_true")
    st_p.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except config_mod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (RuntimeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
