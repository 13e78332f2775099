"""Command-line entry point.

Subcommands: ingest, pairs, calibrate, track, evaluate, simulate.  Every
run writes a ``run.json`` provenance record (argv, seed, versions) into the
output directory; re-running with that argv reproduces the primary outputs
byte for byte.

Exit codes: 0 success, 1 validation/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .backends import (
    NoiseConfig,
    NoisyCarComparator,
    NoisyStatusClassifier,
    OracleCarComparator,
    OracleStatusClassifier,
    ScoredCarComparator,
    ScoredStatusClassifier,
)
from .calibration import build_roc, eer_threshold, far_cap_threshold
from .io import (
    AnnotationError,
    ingest_annotations,
    load_scores,
    read_calibration,
    read_episodes,
    score_table,
    write_calibration,
    write_episodes,
)
from .metrics import evaluate_tracking, write_histogram_csv
from .pairs import car_map, generate_epoch_pairs, generate_eval_pairs, write_manifest
from .records import derive_all_ground_truth, summarize_sequences
from .simulate import preset_config, sweep, write_sweep_csv, write_sweep_summary
from .tracker import TrackingError, track_dataset

logger = logging.getLogger(__name__)


def _write_run_record(args: argparse.Namespace, argv: Sequence[str]) -> None:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = {k: v for k, v in vars(args).items() if k != "handler"}
    record = {
        "command": args.command,
        "argv": list(argv),
        "resolved": resolved,
        "seed": getattr(args, "seed", None),
        "package_version": __version__,
        "python_version": sys.version.split()[0],
    }
    with (out_dir / "run.json").open("w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")


def _apply_config_defaults(
    parser: argparse.ArgumentParser,
    subparsers: dict[str, argparse.ArgumentParser],
    args: argparse.Namespace,
    argv: Sequence[str],
) -> argparse.Namespace:
    """Re-parse with defaults taken from the --config JSON; explicit flags win."""
    with Path(args.config).open("r", encoding="utf-8") as fh:
        defaults = json.load(fh)
    if not isinstance(defaults, dict):
        raise ValueError(f"{args.config}: config must be a JSON object of flag defaults")
    sub = subparsers[args.command]
    settable = {
        action.dest
        for action in sub._actions
        if action.option_strings and action.dest not in ("help", "config")
    }
    unknown = set(defaults) - settable
    if unknown:
        raise ValueError(f"{args.config}: unknown option(s) for {args.command}: {sorted(unknown)}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _out_path(args: argparse.Namespace, name: str) -> Path:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / name


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--output-dir", default=".", help="directory for outputs and run.json")
    sub.add_argument("--seed", type=int, default=0, help="seed for all randomized steps")
    sub.add_argument("--parallelism", type=int, default=1, help="worker threads")
    sub.add_argument("--config", default=None,
                     help="JSON file of flag defaults; explicit flags override")


def _add_noise_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--p-occ-as-empty", type=float, default=0.0,
                     help="probability an occupied frame is classified empty")
    sub.add_argument("--p-empty-as-occ", type=float, default=0.0,
                     help="probability an empty frame is classified occupied")
    sub.add_argument("--far", type=float, default=0.0,
                     help="probability a different-car pair is judged same")
    sub.add_argument("--frr", type=float, default=0.0,
                     help="probability a same-car pair is judged different")


def _noise_from_args(args: argparse.Namespace) -> NoiseConfig:
    return NoiseConfig(
        p_occ_as_empty=args.p_occ_as_empty,
        p_empty_as_occ=args.p_empty_as_occ,
        far=args.far,
        frr=args.frr,
        seed=args.seed,
    )


def cmd_ingest(args: argparse.Namespace) -> int:
    sequences = ingest_annotations(
        args.annotations, k_seconds=args.k_seconds, split_on_gap=not args.no_split_on_gap
    )
    summary = summarize_sequences(sequences)
    print(f"observations: {summary.n_observations}")
    print(f"  occupied:   {summary.n_occupied}")
    print(f"  empty:      {summary.n_empty}")
    print(f"sequences:    {summary.n_sequences}")
    print(f"spaces:       {summary.n_spaces}")
    print(f"cameras:      {summary.n_cameras}")
    print(f"distinct cars: {summary.n_cars}")
    return 0


def cmd_pairs(args: argparse.Namespace) -> int:
    sequences = ingest_annotations(args.annotations, k_seconds=args.k_seconds)
    cars = car_map(sequences)
    if args.mode == "epoch":
        entries = generate_epoch_pairs(cars, count=args.count, seed=args.seed)
    else:
        result = generate_eval_pairs(cars, seed=args.seed)
        entries = list(result.entries)
        if result.missing_positive_cars:
            print(
                f"positive-pair shortfall: {len(result.missing_positive_cars)} car(s) "
                "with a single image",
                file=sys.stderr,
            )
    out = _out_path(args, args.out)
    write_manifest(entries, out)
    print(f"wrote {len(entries)} pairs to {out}")
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    records = load_scores(args.scores)
    method = args.method.replace("-", "_")
    polarity = args.polarity
    if polarity is None:
        polarity = "distance" if method == "far_cap" else "likelihood"
    roc = build_roc(records, polarity)
    if method == "eer":
        calibration = eer_threshold(roc)
    else:
        calibration = far_cap_threshold(roc, args.cap)
    out = _out_path(args, args.out)
    write_calibration(
        out,
        method=calibration.method,
        threshold=calibration.threshold,
        far=calibration.far_at_threshold,
        frr=calibration.frr_at_threshold,
        polarity=polarity,
        cap=args.cap if method == "far_cap" else None,
        source_file=str(args.scores),
    )
    print(
        f"{calibration.method}: threshold={calibration.threshold:g} "
        f"far={calibration.far_at_threshold:.4f} frr={calibration.frr_at_threshold:.4f}"
    )
    print(f"wrote {out}")
    return 0


def _resolve_threshold(value: Optional[float], calibration_path: Optional[str]) -> float:
    if value is not None and calibration_path is not None:
        raise ValueError("give either an explicit threshold or a calibration file, not both")
    if value is not None:
        return value
    if calibration_path is not None:
        return float(read_calibration(calibration_path)["threshold"])
    raise ValueError("scored backend needs --*-threshold or --*-calibration")


def _build_classifier(args: argparse.Namespace):
    if args.classifier == "oracle":
        return OracleStatusClassifier()
    if args.classifier == "noisy":
        return NoisyStatusClassifier.from_config(_noise_from_args(args))
    if args.status_scores is None:
        raise ValueError("--classifier scored needs --status-scores")
    threshold = _resolve_threshold(args.status_threshold, args.status_calibration)
    return ScoredStatusClassifier(
        score_table(load_scores(args.status_scores)), threshold, missing=args.status_missing
    )


def _build_comparator(args: argparse.Namespace):
    if args.comparator == "oracle":
        return OracleCarComparator()
    if args.comparator == "noisy":
        return NoisyCarComparator.from_config(_noise_from_args(args))
    if args.pair_scores is None:
        raise ValueError("--comparator scored needs --pair-scores")
    threshold = _resolve_threshold(args.pair_threshold, args.pair_calibration)
    return ScoredCarComparator(score_table(load_scores(args.pair_scores)), threshold)


def cmd_track(args: argparse.Namespace) -> int:
    sequences = ingest_annotations(args.annotations, k_seconds=args.k_seconds)
    episodes = track_dataset(
        sequences,
        _build_classifier(args),
        _build_comparator(args),
        parallelism=args.parallelism,
        fail_fast=not args.keep_going,
    )
    out = _out_path(args, args.out)
    write_episodes(episodes, out)
    print(f"wrote {len(episodes)} episodes to {out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    sequences = ingest_annotations(args.annotations, k_seconds=args.k_seconds)
    stays = derive_all_ground_truth(sequences)
    episodes = read_episodes(args.episodes)
    report = evaluate_tracking(
        stays,
        episodes,
        bin_width_seconds=args.bin_width,
        max_seconds=args.histogram_max,
        include_spurious=not args.exclude_spurious,
    )
    report_path = _out_path(args, "report.json")
    with report_path.open("w", encoding="utf-8") as fh:
        json.dump(dataclasses.asdict(report), fh, indent=2)
        fh.write("\n")
    write_histogram_csv(report.histogram, _out_path(args, "histogram.csv"))
    print(f"comparisons (N):     {report.n_comparisons}")
    print(f"ground-truth stays:  {report.total_cars}")
    print(f"MAE:                 {report.mae_seconds:.1f} s")
    print(f"RMSE:                {report.rmse_seconds:.1f} s")
    print(f"perfect predictions: {report.perfect_fraction:.3f}")
    for kind, count in report.counts.items():
        print(f"  {kind}: {count}")
    if args.exclude_spurious:
        n_spurious = len(episodes) - (
            report.counts["matched_first"] + report.counts["extra_fragment"]
        )
        print(f"  excluded spurious episodes: {n_spurious}")
    print(f"wrote {report_path}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    overrides = {}
    for flag, field in [
        ("n_spaces", "n_spaces"),
        ("k_seconds", "k_seconds"),
        ("horizon_frames", "horizon_frames"),
        ("arrival_prob", "arrival_prob"),
        ("dwell_mean", "dwell_frames_mean"),
        ("dwell_distribution", "dwell_distribution"),
        ("lognormal_sigma", "lognormal_sigma"),
    ]:
        value = getattr(args, flag)
        if value is not None:
            overrides[field] = value
    if args.allow_handover:
        overrides["allow_handover"] = True
    base = preset_config(args.preset, seed=args.seed, **overrides)
    noise = _noise_from_args(args)
    values = [float(v) for v in args.values.split(",") if v != ""]
    seeds = [int(s) for s in args.seeds.split(",") if s != ""]
    result = sweep(
        base,
        noise,
        axis=args.axis,
        values=values,
        seeds=seeds,
        parallelism=args.parallelism,
        include_spurious=not args.exclude_spurious,
    )
    csv_path = _out_path(args, "sweep.csv")
    write_sweep_csv(result, csv_path)
    write_sweep_summary(result, _out_path(args, "sweep_summary.json"))
    print(f"axis: {result.axis}")
    for p in result.points:
        print(
            f"  value={p.value:g} mean_mae={p.mean_mae:.1f}s "
            f"mean_rmse={p.mean_rmse:.1f}s perfect={p.mean_perfect_fraction:.3f} "
            f"(stdev_mae={p.stdev_mae:.1f})"
        )
    print(f"wrote {csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    return _build_parser()[0]


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="parkdwell",
        description="Parking dwell-time estimation: tracking, calibration, "
        "evaluation and simulation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    registry: dict[str, argparse.ArgumentParser] = {}

    p = registry["ingest"] = subparsers.add_parser(
        "ingest", help="validate an annotation file and print counts"
    )
    p.add_argument("annotations", help="annotation JSONL file")
    p.add_argument("--k-seconds", type=int, default=None,
                   help="sampling interval (inferred if omitted)")
    p.add_argument("--no-split-on-gap", action="store_true",
                   help="treat multi-interval gaps as errors instead of splitting")
    _add_common(p)
    p.set_defaults(handler=cmd_ingest)

    p = registry["pairs"] = subparsers.add_parser("pairs", help="generate a car-pair manifest")
    p.add_argument("annotations")
    p.add_argument("--mode", choices=["epoch", "eval"], default="epoch")
    p.add_argument("--count", type=int, default=20000, help="pairs per epoch manifest")
    p.add_argument("--k-seconds", type=int, default=None)
    p.add_argument("--out", default="pairs.csv")
    _add_common(p)
    p.set_defaults(handler=cmd_pairs)

    p = registry["calibrate"] = subparsers.add_parser(
        "calibrate", help="derive a decision threshold from labeled scores"
    )
    p.add_argument("scores", help="CSV with header key,score,label")
    p.add_argument("--method", choices=["eer", "far-cap"], default="eer")
    p.add_argument("--cap", type=float, default=0.05, help="FAR cap for --method far-cap")
    p.add_argument("--polarity", choices=["likelihood", "distance"], default=None,
                   help="default: likelihood for eer, distance for far-cap")
    p.add_argument("--out", default="calibration.json")
    _add_common(p)
    p.set_defaults(handler=cmd_calibrate)

    p = registry["track"] = subparsers.add_parser(
        "track", help="compute dwell episodes from annotations"
    )
    p.add_argument("annotations")
    p.add_argument("--classifier", choices=["oracle", "noisy", "scored"], default="oracle")
    p.add_argument("--comparator", choices=["oracle", "noisy", "scored"], default="oracle")
    _add_noise_flags(p)
    p.add_argument("--status-scores", default=None, help="occupancy score CSV (key,score)")
    p.add_argument("--status-threshold", type=float, default=None)
    p.add_argument("--status-calibration", default=None, help="calibration JSON for statuses")
    p.add_argument("--status-missing", choices=["error", "empty"], default="error")
    p.add_argument("--pair-scores", default=None, help="pair distance CSV (key,score)")
    p.add_argument("--pair-threshold", type=float, default=None)
    p.add_argument("--pair-calibration", default=None)
    p.add_argument("--k-seconds", type=int, default=None)
    p.add_argument("--keep-going", action="store_true",
                   help="attempt every sequence and aggregate failures")
    p.add_argument("--out", default="episodes.jsonl")
    _add_common(p)
    p.set_defaults(handler=cmd_track)

    p = registry["evaluate"] = subparsers.add_parser(
        "evaluate", help="compare episodes against ground truth"
    )
    p.add_argument("annotations")
    p.add_argument("episodes", help="episode JSONL produced by track")
    p.add_argument("--bin-width", type=int, default=1800, help="histogram bin width in seconds")
    p.add_argument("--histogram-max", type=int, default=86400,
                   help="start of the final open-ended histogram bin")
    p.add_argument("--exclude-spurious", action="store_true",
                   help="drop episodes matching no ground-truth stay from the metrics")
    p.add_argument("--k-seconds", type=int, default=None)
    _add_common(p)
    p.set_defaults(handler=cmd_evaluate)

    p = registry["simulate"] = subparsers.add_parser(
        "simulate", help="run a synthetic-lot parameter sweep"
    )
    p.add_argument("--preset", choices=["pklot", "cnr"], default="pklot")
    p.add_argument("--n-spaces", type=int, default=None)
    p.add_argument("--k-seconds", type=int, default=None)
    p.add_argument("--horizon-frames", type=int, default=None)
    p.add_argument("--arrival-prob", type=float, default=None)
    p.add_argument("--dwell-mean", type=float, default=None)
    p.add_argument("--dwell-distribution", choices=["geometric", "lognormal"], default=None)
    p.add_argument("--lognormal-sigma", type=float, default=None)
    p.add_argument("--allow-handover", action="store_true",
                   help="allow a new car to replace the old one with no empty frame")
    _add_noise_flags(p)
    p.add_argument("--axis", default="p_occ_as_empty", help="config field to sweep")
    p.add_argument("--values", default="0,0.076", help="comma-separated axis values")
    p.add_argument("--seeds", default="0", help="comma-separated seeds")
    p.add_argument("--exclude-spurious", action="store_true")
    _add_common(p)
    p.set_defaults(handler=cmd_simulate)

    return parser, registry


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if argv is None:
        argv = sys.argv[1:]
    parser, subparsers = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "handler", None) is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        if getattr(args, "config", None):
            args = _apply_config_defaults(parser, subparsers, args, argv)
        _write_run_record(args, argv)
        return args.handler(args)
    except (AnnotationError, TrackingError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
