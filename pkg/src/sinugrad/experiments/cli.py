"""Command-line entry point.

Subcommands mirror the experiments: ``landscape``, ``single``, ``multi``,
``fit``, plus ``summarize`` which recomputes aggregate tables from an
existing ``summary.csv`` for plotting. Configuration precedence is
built-in preset (selected by ``--scale``), then ``--config`` YAML file,
then explicit flags.
"""

import argparse
import sys
from dataclasses import replace

import numpy as np

from ..errors import SinugradError
from ..losses import DFT_MAG_MSE, TIME_MSE
from .analysis import mean_median_db
from .config import (
    DESK,
    FIT,
    LANDSCAPE,
    MULTI,
    PAPER,
    SINGLE,
    apply_overrides,
    default_config,
    load_config_file,
    validate_config,
)
from .io import read_csv, write_csv
from .runner import run_experiment

__all__ = ["main", "build_parser"]

_EXPERIMENTS = (LANDSCAPE, SINGLE, MULTI, FIT)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinugrad",
        description="Sinusoidal frequency/amplitude estimation experiments "
        "via a complex-exponential surrogate trained by gradient descent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        (LANDSCAPE, "loss value vs. candidate frequency between two sinusoids"),
        (SINGLE, "single-sinusoid frequency estimation over a (freq, SNR, seed) grid"),
        (MULTI, "multi-sinusoid surrogate vs. baseline vs. random control"),
        (FIT, "one densely-traced fit against a synthetic or file target"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="YAML overrides for the preset")
        p.add_argument(
            "--scale", choices=(DESK, PAPER), default=DESK,
            help="preset to start from (default: desk)",
        )
        p.add_argument("--seed", type=int, help="base RNG seed (default: 0)")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--jobs", type=int, help="worker threads (default: 1)")
        p.add_argument("--trace-every", type=int, metavar="N", help="trace sampling stride")
        p.add_argument(
            "--loss", choices=(TIME_MSE, DFT_MAG_MSE),
            help="restrict the run to one training loss",
        )
        if name == FIT:
            p.add_argument(
                "target_file", nargs="?", default=None, metavar="TARGET",
                help="optional sample file (.f64/.bin/.raw binary, else text)",
            )

    p = sub.add_parser("summarize", help="recompute aggregates from a summary.csv")
    p.add_argument("run_dir", metavar="DIR", help="directory containing summary.csv")
    return parser


def _resolve_config(args):
    config = default_config(args.command, args.scale)
    if args.config:
        config = apply_overrides(config, load_config_file(args.config))
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out"] = args.out
    if args.jobs is not None:
        updates["jobs"] = args.jobs
    if args.trace_every is not None:
        updates["trace_every"] = args.trace_every
    if updates:
        config = replace(config, **updates)
    settings = config.settings
    if args.loss is not None:
        if args.command == FIT:
            settings = replace(settings, loss=args.loss)
        else:
            settings = replace(settings, losses=(args.loss,))
    if args.command == FIT and args.target_file is not None:
        settings = replace(settings, target_file=args.target_file)
    if settings is not config.settings:
        config = replace(config, settings=settings)
    return validate_config(config)


def _summarize(run_dir: str) -> int:
    import os

    summary_path = os.path.join(run_dir, "summary.csv")
    if not os.path.exists(summary_path):
        print(f"error: {summary_path}: no such file", file=sys.stderr)
        return 2
    header, raw = read_csv(summary_path)
    col = {name: i for i, name in enumerate(header)}
    experiment = raw[0][col["experiment"]] if raw else ""
    if experiment == SINGLE:
        out_header = [
            "loss", "snr_index", "snr_db", "runs", "failures", "mean_db", "median_db",
        ]
        groups = {}
        for row in raw:
            key = (row[col["loss"]], int(row[col["snr_index"]]), row[col["snr_db"]])
            groups.setdefault(key, []).append(row)
        out_rows = []
        for (loss, si, snr), rows in sorted(groups.items()):
            ok = [r for r in rows if r[col["status"]] == "ok"]
            errors = [float(r[col["freq_sq_error"]]) for r in ok]
            mean_db = median_db = None
            if errors:
                mean_db, median_db = mean_median_db(errors)
            out_rows.append([loss, si, float(snr), len(rows), len(rows) - len(ok), mean_db, median_db])
    elif experiment == MULTI:
        out_header = [
            "k", "model", "loss", "runs", "failures", "mean_metric_db", "median_metric_db",
        ]
        groups = {}
        for row in raw:
            key = (int(row[col["k"]]), row[col["model"]], row[col["loss"]])
            groups.setdefault(key, []).append(row)
        model_order = {"surrogate": 0, "baseline": 1, "random": 2}
        out_rows = []
        for (k, model, loss), rows in sorted(
            groups.items(), key=lambda kv: (kv[0][0], model_order[kv[0][1]], kv[0][2])
        ):
            ok = [r for r in rows if r[col["status"]] == "ok"]
            scores = [float(r[col["final_metric_db"]]) for r in ok]
            mean_db = float(np.mean(scores)) if scores else None
            median_db = float(np.median(scores)) if scores else None
            out_rows.append([k, model, loss, len(rows), len(rows) - len(ok), mean_db, median_db])
    else:
        print(
            f"error: summarize supports single and multi runs, got {experiment!r}",
            file=sys.stderr,
        )
        return 2
    out_path = os.path.join(run_dir, "aggregates_recomputed.csv")
    write_csv(out_path, out_header, out_rows)
    print(out_path)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "summarize":
            return _summarize(args.run_dir)
        config = _resolve_config(args)
        result = run_experiment(config)
    except SinugradError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"{args.command}: {len(result.rows)} rows -> {result.summary_path}")
    if result.aggregates_path:
        print(f"aggregates -> {result.aggregates_path}")
    print(f"manifest -> {result.manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
