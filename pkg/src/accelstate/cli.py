"""Command-line entry point: ``accelstate <subcommand> ...``.

Exit codes: 0 success, 1 invalid usage or configuration, 2 failure while
running. Diagnostics go to stderr; set ``ACCELSTATE_LOG`` (DEBUG, INFO,
WARNING) for progress messages.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from typing import Sequence

from . import __version__
from .config import RunConfig, config_from_dict, load_config
from .dsp import WINDOW_SIZES_S, compute_derived_series
from .errors import AccelStateError, ConfigInvalid, UnknownSubcommand
from .evaluation import (
    METRICS,
    PAPER_K,
    EvalReport,
    outer_loaocv,
    sweep_csv,
    sweep_row,
    train_final_model,
)
from .features import LabeledDataset
from .inference import aggregate_daily_pattern, emit_plot_data, run_inference
from .ingest import parse_accel_csv
from .learn.model import ClassifierKind, load_model, save_model
from .pipeline import AnimalRecording, cohort_dataset, load_recording, manifest_paths
from .synth import SynthProfile, generate_cohort, write_cohort

log = logging.getLogger("accelstate")

HELP_WIDTH = 88
SUBCOMMANDS = ("synth", "ingest", "preprocess", "features", "evaluate", "train", "infer", "report")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}\n")


def _formatter(prog: str) -> argparse.HelpFormatter:
    return argparse.HelpFormatter(prog, width=HELP_WIDTH, max_help_position=32)


# --- argument definitions -------------------------------------------------------------


def _add_run_options(p: argparse.ArgumentParser) -> None:
    """Options mirrored by RunConfig fields; unset flags keep the config value."""
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--accel", nargs="+", help="accelerometer CSV files (t,ax,ay,az)")
    p.add_argument("--annotations", nargs="+", help="annotation CSV files, one per accelerometer file")
    p.add_argument("--manifest", help="synthetic cohort manifest listing accel/annotation files")
    p.add_argument("--use-drifted", action="store_true", default=None, help="read the drifted streams of a manifest")
    p.add_argument("--features-csv", help="precomputed feature dataset")
    p.add_argument("--out", dest="out_dir", metavar="DIR", help="output directory")
    p.add_argument("--window-size", dest="window_size_s", type=int, choices=WINDOW_SIZES_S, help="window length in seconds")
    p.add_argument("--classifier", choices=[k.value for k in ClassifierKind], help="rf, gb or svm")
    p.add_argument("--k", dest="k_features", type=int, metavar="K", help="number of top-ranked features kept")
    p.add_argument("--grid-preset", choices=("paper", "ci"), help="hyperparameter grid preset")
    p.add_argument("--cutoff-hz", type=float, help="static/dynamic low-pass cut-off")
    p.add_argument("--rate", dest="sample_rate_hz", type=float, metavar="HZ", help="declared sample rate in Hz")
    p.add_argument("--correct-drift", action="store_true", default=None, help="align annotations per sequence")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="worker processes for outer folds")
    p.add_argument("--paper-mode", action="store_true", default=None, help="sweep all window sizes, k and classifiers")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="accelstate", description="Activity-state pipeline for collar accelerometers.", formatter_class=_formatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<command>", parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic labelled cohort", formatter_class=_formatter)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-animals", type=int, default=16, help="number of animals")
    p.add_argument("--day-length-s", type=float, default=SynthProfile.day_length_s, help="stream length per animal")
    p.add_argument("--inactive-fraction", type=float, default=SynthProfile.inactive_fraction, help="target Inactive window share")
    p.add_argument("--drift-s-per-day", type=float, default=SynthProfile.drift_s_per_day, help="clock drift bound")
    p.add_argument("--fixed-drift", action="store_true", help="give every animal exactly the drift bound")
    p.add_argument("--start-clock-s", type=float, default=SynthProfile.start_clock_s, help="time of day of the first sample")
    p.add_argument("--nocturnal", action="store_true", help="concentrate activity between 22:00 and 05:00")
    p.add_argument("--no-drifted", action="store_true", help="skip the drifted accelerometer copies")
    p.add_argument("--seed", type=int, default=0, help="master seed")

    p = sub.add_parser("ingest", help="parse, align and label one recording", formatter_class=_formatter)
    p.add_argument("--accel", required=True, help="accelerometer CSV")
    p.add_argument("--annotations", required=True, help="annotation CSV")
    p.add_argument("--animal-id", help="animal to select from the annotations")
    p.add_argument("--rate", type=float, default=25.0, help="declared sample rate in Hz")
    p.add_argument("--correct-drift", action="store_true", help="estimate and remove per-sequence clock offsets")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("preprocess", help="write the derived series of one recording", formatter_class=_formatter)
    p.add_argument("--accel", required=True, help="accelerometer CSV")
    p.add_argument("--rate", type=float, default=25.0, help="declared sample rate in Hz")
    p.add_argument("--cutoff-hz", type=float, default=0.3, help="static/dynamic low-pass cut-off")
    p.add_argument("--out", default="-", help="output CSV, '-' for standard output")

    p = sub.add_parser("features", help="build the labelled feature dataset", formatter_class=_formatter)
    _add_run_options(p)
    p = sub.add_parser("evaluate", help="nested leave-one-animal-out evaluation", formatter_class=_formatter)
    _add_run_options(p)
    p = sub.add_parser("train", help="fit and save one final model", formatter_class=_formatter)
    _add_run_options(p)

    p = sub.add_parser("infer", help="score unlabelled streams and aggregate by time of day", formatter_class=_formatter)
    p.add_argument("--model", required=True, help="model JSON written by train")
    p.add_argument("--accel", nargs="+", required=True, help="accelerometer CSV files")
    p.add_argument("--window-size", type=int, help="window length in seconds (defaults to the model's)")
    p.add_argument("--rate", type=float, default=25.0, help="declared sample rate in Hz")
    p.add_argument("--bin-minutes", type=int, default=60, help="daily-pattern bin width")
    p.add_argument("--svg", action="store_true", help="also draw the daily pattern as SVG")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("report", help="print the summary of an evaluation report", formatter_class=_formatter)
    p.add_argument("--report", required=True, help="report JSON written by evaluate")
    return parser


# --- helpers --------------------------------------------------------------------


_RUN_FIELDS = (
    "accel",
    "annotations",
    "manifest",
    "use_drifted",
    "features_csv",
    "out_dir",
    "window_size_s",
    "classifier",
    "k_features",
    "grid_preset",
    "cutoff_hz",
    "sample_rate_hz",
    "correct_drift",
    "seed",
    "workers",
    "paper_mode",
)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file values overridden by any flag given on the command line."""
    cfg = load_config(args.config) if args.config else RunConfig()
    doc = cfg.to_dict()
    for name in _RUN_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            doc[name] = [os.path.abspath(p) for p in v] if name in ("accel", "annotations") else v
    for name in ("manifest", "features_csv", "out_dir"):
        if doc.get(name) is not None:
            doc[name] = os.path.abspath(doc[name])
    cfg = config_from_dict(doc)
    cfg.validate()
    if not cfg.has_inputs():
        raise ConfigInvalid("accel", "no inputs: give accel/annotations, a manifest or a features CSV")
    return cfg


def _recordings(cfg: RunConfig) -> list[AnimalRecording]:
    if cfg.manifest is not None:
        accel, ann = manifest_paths(cfg.manifest, drifted=cfg.use_drifted)
    else:
        accel, ann = cfg.accel, cfg.annotations
    recs = []
    for a, n in zip(accel, ann):
        log.info("loading %s", a)
        recs.append(load_recording(a, n, None, cfg.sample_rate_hz, cfg.correct_drift, cfg.cutoff_hz))
    return recs


def _datasets(cfg: RunConfig, window_sizes: Sequence[int]) -> dict[int, LabeledDataset]:
    if cfg.features_csv is not None:
        if len(window_sizes) != 1:
            raise ConfigInvalid("features_csv", "a feature CSV holds a single window size; paper mode needs raw inputs")
        return {window_sizes[0]: LabeledDataset.read_csv(cfg.features_csv, window_sizes[0])}
    recs = _recordings(cfg)
    return {w: cohort_dataset(recs, w, cfg.cutoff_hz) for w in window_sizes}


def _report_stem(kind: str, w: int, k: int) -> str:
    return f"report_{kind}_{w}s_k{k}"


# --- subcommands ----------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    profile = SynthProfile(
        n_animals=args.n_animals,
        day_length_s=args.day_length_s,
        inactive_fraction=args.inactive_fraction,
        drift_s_per_day=args.drift_s_per_day,
        drift_uniform=not args.fixed_drift,
        start_clock_s=args.start_clock_s,
        nocturnal=args.nocturnal,
        seed=args.seed,
    )
    path = write_cohort(generate_cohort(profile), args.out, drifted=not args.no_drifted)
    log.info("wrote %s", path)
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    from .ingest import label_samples

    rec = load_recording(args.accel, args.annotations, args.animal_id, args.rate, args.correct_drift)
    os.makedirs(args.out, exist_ok=True)
    aid = rec.series.animal_id
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["animal_id", "sequence_id", "start", "stop", "state"])
    for seg in label_samples(rec.series, rec.events):
        w.writerow([seg.animal_id, seg.sequence_id, seg.start, seg.stop, seg.state.value])
    with open(os.path.join(args.out, f"{aid}_segments.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    with open(os.path.join(args.out, f"{aid}_alignment.json"), "w", encoding="utf-8") as fh:
        json.dump({"animal_id": aid, "sequence_offsets_s": rec.offsets, "n_samples": len(rec.series)}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return 0


def cmd_preprocess(args: argparse.Namespace) -> int:
    series = parse_accel_csv(args.accel, args.rate)
    text = compute_derived_series(series, args.cutoff_hz).to_csv()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    sizes = WINDOW_SIZES_S if cfg.paper_mode else (cfg.window_size_s,)
    os.makedirs(cfg.out_dir, exist_ok=True)
    for w, ds in _datasets(cfg, sizes).items():
        ds.write_csv(os.path.join(cfg.out_dir, f"features_{w}s.csv"))
    cfg.write(cfg.out_dir)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    os.makedirs(cfg.out_dir, exist_ok=True)
    cfg.write(cfg.out_dir)
    if not cfg.paper_mode:
        ds = _datasets(cfg, (cfg.window_size_s,))[cfg.window_size_s]
        t0 = time.perf_counter()
        report = outer_loaocv(ds, cfg.classifier, cfg.grid_spec(), cfg.k_features, cfg.seed, cfg.workers)
        log.info("evaluated %d folds in %.1f s", len(report.folds), time.perf_counter() - t0)
        report.write(cfg.out_dir, "report")
        return 0
    rows = []
    datasets = _datasets(cfg, WINDOW_SIZES_S)
    for kind in ClassifierKind:
        for w in WINDOW_SIZES_S:
            for k in PAPER_K:
                log.info("paper sweep: %s %d s k=%d", kind.value, w, k)
                report = outer_loaocv(datasets[w], kind, cfg.grid_spec(kind.value), k, cfg.seed, cfg.workers)
                report.write(cfg.out_dir, _report_stem(kind.value, w, k))
                rows.append(sweep_row(report))
    with open(os.path.join(cfg.out_dir, "sweep.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(sweep_csv(rows))
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    ds = _datasets(cfg, (cfg.window_size_s,))[cfg.window_size_s]
    model = train_final_model(ds, cfg.classifier, cfg.grid_spec(), cfg.k_features, cfg.seed)
    os.makedirs(cfg.out_dir, exist_ok=True)
    save_model(model, os.path.join(cfg.out_dir, "model.json"))
    cfg.write(cfg.out_dir)
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    window = args.window_size or model.window_size_s
    if window is None:
        raise ConfigInvalid("window_size", "model does not record its window size; pass --window-size")
    os.makedirs(args.out, exist_ok=True)
    timelines = []
    for path in args.accel:
        stem = os.path.splitext(os.path.basename(path))[0]
        series = parse_accel_csv(path, args.rate, animal_id=stem)
        tl = run_inference(series, model, window)
        tl.write_csv(os.path.join(args.out, f"timeline_{stem}.csv"))
        timelines.append(tl)
    pattern = aggregate_daily_pattern(timelines, args.bin_minutes)
    emit_plot_data(
        pattern,
        os.path.join(args.out, "daily_pattern.csv"),
        os.path.join(args.out, "daily_pattern.svg") if args.svg else None,
    )
    return 0


def format_summary(report: EvalReport) -> str:
    lines = [f"{report.kind.value} window={report.window_size_s}s k={report.k} folds={len(report.folds)}"]
    for label, summary in (("G-mean threshold", report.summary), ("default threshold", report.summary_default)):
        lines.append(f"[{label}]")
        for m in METRICS:
            q = summary["metrics"][m]
            lines.append(f"  {m:<9} {q['median']:.3f} ({q['q1']:.3f}, {q['q3']:.3f})")
        cm = summary["confusion"]
        lines.append(
            "  confusion " + " ".join(f"{c}={cm[c]['median']:g} ({cm[c]['q1']:g}, {cm[c]['q3']:g})" for c in ("tp", "fp", "tn", "fn"))
        )
    return "\n".join(lines) + "\n"


def cmd_report(args: argparse.Namespace) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            report = EvalReport.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigInvalid("report", str(exc)) from None
    sys.stdout.write(format_summary(report))
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "preprocess": cmd_preprocess,
    "features": cmd_features,
    "evaluate": cmd_evaluate,
    "train": cmd_train,
    "infer": cmd_infer,
    "report": cmd_report,
}


def dispatch(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=os.environ.get("ACCELSTATE_LOG", "WARNING").upper(), stream=sys.stderr, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        if argv and not argv[0].startswith("-") and argv[0] not in _COMMANDS:
            raise UnknownSubcommand(argv[0])
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError(parser.format_usage() + "accelstate: error: a subcommand is required\n")
    except UnknownSubcommand as exc:
        sys.stderr.write(parser.format_usage() + f"accelstate: error: {exc}\n")
        return 1
    except _UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigInvalid as exc:
        sys.stderr.write(f"accelstate {args.command}: {exc}\n")
        return 1
    except (AccelStateError, OSError, ValueError) as exc:
        sys.stderr.write(f"accelstate {args.command}: {type(exc).__name__}: {exc}\n")
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
