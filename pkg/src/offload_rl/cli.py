"""Command line entry point: ``offload-rl <verb> [--config ...]``.

Errors are reported on stderr as one JSON object with a ``category`` field,
and the exit code identifies the category (see ``errors``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, runners
from .config import Mode, load_config, preset_names
from .errors import ConfigError, OffloadError, ReportIOError
from .reports import Chart, Series, read_csv, write_svg

LOG_ENV = "OFFLOAD_RL_LOG"

DEFAULT_PRESET = {
    Mode.SWEEP: "sweep",
    Mode.TRAIN: "heterogeneity",
    Mode.DEPLOY: "deploy",
    Mode.COMPARE: "compare",
    Mode.CROSS_MODEL: "cross_model",
}


def _seeds(values) -> list[int]:
    out = []
    for v in values or []:
        for part in str(v).split(","):
            if part.strip():
                try:
                    out.append(int(part))
                except ValueError:
                    raise ConfigError(f"seed {part!r} is not an integer") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="offload-rl", description="Adaptive offloading for federated learning, simulated.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)
    for mode in Mode:
        sp = sub.add_parser(mode.value, help=f"run a {mode.value} experiment")
        sp.add_argument("--config", "-c", default=DEFAULT_PRESET[mode],
                        help=f"YAML file or preset name (default {DEFAULT_PRESET[mode]}; presets: {', '.join(preset_names())})")
        sp.add_argument("--seed", "-s", action="append", help="seed(s) overriding the config; repeat or comma-separate")
        sp.add_argument("--out", "-o", help="output directory overriding the config")
        if mode in (Mode.DEPLOY, Mode.COMPARE, Mode.CROSS_MODEL, Mode.TRAIN):
            sp.add_argument("--checkpoint", help="checkpoint path, may contain {seed}")
    rp = sub.add_parser("report", help="re-render SVG charts from the CSVs in a run directory")
    rp.add_argument("run_dir")
    return p


def _summary(cfg, result) -> dict:
    if cfg.mode is Mode.SWEEP:
        return {
            "mare": result.mare,
            "argmin_matches": sum(result.argmin_matches().values()),
            "argmin_cells": len(result.argmin_matches()),
            "device_argmin_matches": sum(result.device_argmin_matches().values()),
        }
    if cfg.mode is Mode.TRAIN:
        return {
            "final_mean_actions": [round(float(x), 4) for x in result.final_average()],
            "best_ops": [op for op, _ in result.bands],
            "convergence_rounds": result.convergence_rounds(),
            "checkpoints": {str(k): str(v) for k, v in result.checkpoints.items()},
        }
    if cfg.mode is Mode.DEPLOY:
        return {str(s): float(rec.round_seconds().sum()) for s, rec in result.items()}
    return {
        "model": result.model,
        "ratio_rounds_0_49": round(result.ratio_first(), 4),
        "ratio_total": round(result.ratio_total(), 4),
    }


def rerender(run_dir) -> list[Path]:
    """Rebuild charts from a run directory's CSV outputs."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ReportIOError(f"no such run directory: {run_dir}")
    written = []
    actions = run_dir / "actions.csv"
    if actions.is_file():
        _, rows = read_csv(actions)
        if rows:
            G = 1 + max(int(r["group"]) for r in rows)
            R = 1 + max(int(r["round"]) for r in rows)
            arr = np.zeros((3, R, G))
            for r in rows:
                i, g = int(r["round"]), int(r["group"])
                arr[:, i, g] = float(r["mean_action"]), float(r["min_over_seeds"]), float(r["max_over_seeds"])
            from .presets import profile_for
            from .runners import actions_chart

            chart = actions_chart(np.arange(R), arr[0], arr[1], arr[2], profile_for("vgg5"), run_dir.name)
            written.append(write_svg(run_dir / "actions.svg", chart))
    for path in sorted(run_dir.glob("*_round_times.csv")):
        _, rows = read_csv(path)
        if not rows:
            continue
        x = [int(r["round"]) for r in rows]
        chart = Chart(f"Round time ({path.stem})", "round", "round time (s)")
        chart.series.append(Series("FedAdapt", x, [float(r["fedadapt_seconds"]) for r in rows]))
        chart.series.append(Series("classic FL", x, [float(r["classic_seconds"]) for r in rows]))
        from .presets import DROP_SLOTS

        chart.vlines = [(start, dev) for dev, start, _ in DROP_SLOTS if start <= x[-1]]
        written.append(write_svg(path.with_suffix(".svg"), chart))
    return written


def main(argv=None) -> int:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "report":
            paths = rerender(args.run_dir)
            print(json.dumps({"written": [str(p) for p in paths]}))
            return 0
        mode = Mode(args.verb)
        cfg = load_config(args.config)
        if cfg.mode is not mode:
            raise ConfigError(f"config {args.config!r} is a {cfg.mode.value} config, not {mode.value}")
        cfg = cfg.with_overrides(_seeds(args.seed), args.out, getattr(args, "checkpoint", None))
        result = runners.run(cfg)
        print(json.dumps({"run_dir": str(cfg.run_dir()), **_summary(cfg, result)}, default=str))
        return 0
    except OffloadError as exc:
        print(json.dumps({"category": exc.category, "error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
