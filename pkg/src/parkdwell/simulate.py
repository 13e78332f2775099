"""Synthetic annotated lots and noise-parameter sweeps.

Each space alternates empty gaps (geometric in the arrival probability) and
car stays (run length from the configured dwell distribution), with a fresh
unique car id per stay.  Generation is keyed per space off the config seed,
so datasets are reproducible and independent of iteration order.  Sweeps
run the full pipeline (noisy classifier + noisy comparator -> tracking ->
evaluation) over a grid of one parameter crossed with a list of seeds.
"""

from __future__ import annotations

import csv
import json
import math
import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence, Union, get_type_hints

from .backends import NoiseConfig, NoisyCarComparator, NoisyStatusClassifier
from .metrics import (
    DEFAULT_BIN_WIDTH_SECONDS,
    DEFAULT_HISTOGRAM_MAX_SECONDS,
    ComparisonKind,
    EvalReport,
    dwell_histogram,
    evaluate_tracking,
)
from .records import (
    SpaceObservation,
    SpaceSequence,
    Status,
    derive_all_ground_truth,
)
from .rng import derived_seed
from .tracker import track_dataset
from .validation import check_one_of, check_positive_int, check_probability

SIM_CAMERA_ID = "sim"

GEOMETRIC = "geometric"
LOGNORMAL = "lognormal"


@dataclass(frozen=True)
class SimConfig:
    """Generator parameters for one synthetic lot."""

    n_spaces: int = 40
    k_seconds: int = 300
    horizon_frames: int = 150
    arrival_prob: float = 0.15
    dwell_frames_mean: float = 25.0
    dwell_distribution: str = GEOMETRIC
    lognormal_sigma: float = 0.5
    seed: int = 0
    allow_handover: bool = False

    def __post_init__(self) -> None:
        check_positive_int(self.n_spaces, "n_spaces")
        check_positive_int(self.k_seconds, "k_seconds")
        check_positive_int(self.horizon_frames, "horizon_frames")
        check_probability(self.arrival_prob, "arrival_prob")
        check_one_of(self.dwell_distribution, (GEOMETRIC, LOGNORMAL), "dwell_distribution")
        if self.dwell_frames_mean < 1.0:
            raise ValueError(
                f"dwell_frames_mean must be >= 1 frame, got {self.dwell_frames_mean}"
            )
        if self.lognormal_sigma <= 0:
            raise ValueError(f"lognormal_sigma must be positive, got {self.lognormal_sigma}")


# Sampling regimes of the two public lots this package is normally pointed
# at: 5-minute frames with ~25-frame mean stays, and 30-minute frames with
# ~12-frame mean stays.
PRESETS: dict[str, SimConfig] = {
    "pklot": SimConfig(k_seconds=300, dwell_frames_mean=25.0, horizon_frames=150),
    "cnr": SimConfig(k_seconds=1800, dwell_frames_mean=12.0, horizon_frames=48),
}


def preset_config(name: str, **overrides) -> SimConfig:
    check_one_of(name, tuple(PRESETS), "preset")
    return replace(PRESETS[name], **overrides)


def _geometric(rng: random.Random, p: float) -> int:
    """Number of Bernoulli(p) trials up to and including the first success."""
    if p >= 1.0:
        return 1
    u = rng.random()
    return int(math.log1p(-u) / math.log1p(-p)) + 1


def _draw_dwell_frames(rng: random.Random, cfg: SimConfig) -> int:
    if cfg.dwell_distribution == GEOMETRIC:
        return _geometric(rng, 1.0 / cfg.dwell_frames_mean)
    mu = math.log(cfg.dwell_frames_mean) - cfg.lognormal_sigma**2 / 2.0
    return max(1, round(rng.lognormvariate(mu, cfg.lognormal_sigma)))


def _generate_space(cfg: SimConfig, index: int) -> SpaceSequence:
    space_id = f"s{index:04d}"
    rng = random.Random(derived_seed(cfg.seed, "space", index))
    frames: list[Optional[str]] = []  # car id, or None for empty
    first_gap = True
    n_cars = 0
    while len(frames) < cfg.horizon_frames:
        if cfg.arrival_prob <= 0.0:
            break
        gap = _geometric(rng, cfg.arrival_prob)
        if first_gap or cfg.allow_handover:
            gap -= 1
        first_gap = False
        frames.extend([None] * gap)
        if len(frames) >= cfg.horizon_frames:
            break
        car_id = f"{space_id}-car{n_cars:04d}"
        n_cars += 1
        frames.extend([car_id] * _draw_dwell_frames(rng, cfg))
    frames = frames[: cfg.horizon_frames]
    frames.extend([None] * (cfg.horizon_frames - len(frames)))

    observations = tuple(
        SpaceObservation(
            camera_id=SIM_CAMERA_ID,
            space_id=space_id,
            timestamp=i * cfg.k_seconds,
            status=Status.OCCUPIED if car is not None else Status.EMPTY,
            car_id=car,
        )
        for i, car in enumerate(frames)
    )
    return SpaceSequence(SIM_CAMERA_ID, space_id, cfg.k_seconds, observations)


def generate_lot(cfg: SimConfig) -> list[SpaceSequence]:
    """Generate a fully annotated synthetic lot, one sequence per space."""
    return [_generate_space(cfg, i) for i in range(cfg.n_spaces)]


def run_simulation(
    sim_cfg: SimConfig,
    noise_cfg: NoiseConfig,
    parallelism: int = 1,
    bin_width_seconds: int = DEFAULT_BIN_WIDTH_SECONDS,
    max_seconds: int = DEFAULT_HISTOGRAM_MAX_SECONDS,
    include_spurious: bool = True,
) -> EvalReport:
    """Generate a lot, track it with noisy backends, and evaluate."""
    lot = generate_lot(sim_cfg)
    stays = derive_all_ground_truth(lot)
    episodes = track_dataset(
        lot,
        NoisyStatusClassifier.from_config(noise_cfg),
        NoisyCarComparator.from_config(noise_cfg),
        parallelism=parallelism,
    )
    if not stays:
        # Empty-lot corner (e.g. arrival_prob 0): every episode is spurious.
        used = episodes if include_spurious else []
        n = len(used)
        mae = sum(e.dwell_seconds for e in used) / n if n else 0.0
        rmse = math.sqrt(sum(e.dwell_seconds**2 for e in used) / n) if n else 0.0
        counts = {kind.value: 0 for kind in ComparisonKind}
        counts[ComparisonKind.SPURIOUS.value] = n
        return EvalReport(
            mae_seconds=mae,
            rmse_seconds=rmse,
            perfect_fraction=1.0 if n == 0 else 0.0,
            counts=counts,
            n_comparisons=n,
            total_cars=0,
            histogram=dwell_histogram(stays, episodes, bin_width_seconds, max_seconds),
        )
    return evaluate_tracking(
        stays,
        episodes,
        bin_width_seconds=bin_width_seconds,
        max_seconds=max_seconds,
        include_spurious=include_spurious,
    )


@dataclass(frozen=True)
class SweepCell:
    value: float
    seed: int
    mae: float
    rmse: float
    perfect_fraction: float


@dataclass(frozen=True)
class SweepPoint:
    value: float
    mean_mae: float
    mean_rmse: float
    mean_perfect_fraction: float
    stdev_mae: float


@dataclass(frozen=True)
class SweepResult:
    axis: str
    cells: tuple[SweepCell, ...]
    points: tuple[SweepPoint, ...]


_SIM_FIELDS = {f.name for f in fields(SimConfig)}
_NOISE_FIELDS = {f.name for f in fields(NoiseConfig)}


def _cast_axis_value(axis: str, value: float):
    # Sweep values arrive as floats; integer/bool config fields need their
    # declared type back.
    hints = get_type_hints(SimConfig if axis in _SIM_FIELDS else NoiseConfig)
    target = hints[axis]
    if target is bool:
        return bool(value)
    if target is int:
        if float(value) != int(value):
            raise ValueError(f"axis {axis!r} takes integer values, got {value!r}")
        return int(value)
    if target is float:
        return float(value)
    return value


def sweep(
    base: SimConfig,
    noise: NoiseConfig,
    axis: str,
    values: Sequence[float],
    seeds: Sequence[int],
    parallelism: int = 1,
    include_spurious: bool = True,
) -> SweepResult:
    """Run the pipeline over ``axis x seeds`` and aggregate per axis value.

    ``axis`` names a field of either config.  Each seed drives the lot
    directly and the noise stream through a derived sub-seed, so cells that
    share a seed also share their lot (and, along a noise-rate axis, their
    per-record noise draws), which keeps seed-averaged trends comparable
    across values.
    """
    if axis == "seed" or axis not in _SIM_FIELDS | _NOISE_FIELDS:
        raise ValueError(f"unknown sweep axis {axis!r}")
    if not values:
        raise ValueError("sweep needs at least one axis value")
    if not seeds:
        raise ValueError("sweep needs at least one seed")
    check_positive_int(parallelism, "parallelism")

    def run_cell(value: float, seed: int) -> SweepCell:
        cast_value = _cast_axis_value(axis, value)
        sim_kwargs = {axis: cast_value} if axis in _SIM_FIELDS else {}
        noise_kwargs = {axis: cast_value} if axis in _NOISE_FIELDS else {}
        sim_cfg = replace(base, seed=seed, **sim_kwargs)
        noise_cfg = replace(noise, seed=derived_seed(seed, "noise"), **noise_kwargs)
        report = run_simulation(
            sim_cfg, noise_cfg, parallelism=1, include_spurious=include_spurious
        )
        return SweepCell(value, seed, report.mae_seconds, report.rmse_seconds,
                         report.perfect_fraction)

    grid = [(value, seed) for value in values for seed in seeds]
    if parallelism == 1:
        cells = [run_cell(value, seed) for value, seed in grid]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(run_cell, value, seed) for value, seed in grid]
            cells = [f.result() for f in futures]

    points = []
    for value in sorted(set(values)):
        maes = [c.mae for c in cells if c.value == value]
        rmses = [c.rmse for c in cells if c.value == value]
        perfects = [c.perfect_fraction for c in cells if c.value == value]
        points.append(
            SweepPoint(
                value=value,
                mean_mae=statistics.mean(maes),
                mean_rmse=statistics.mean(rmses),
                mean_perfect_fraction=statistics.mean(perfects),
                stdev_mae=statistics.stdev(maes) if len(maes) > 1 else 0.0,
            )
        )
    return SweepResult(axis=axis, cells=tuple(cells), points=tuple(points))


def write_sweep_csv(result: SweepResult, path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value", "seed", "mae", "rmse", "perfect_fraction"])
        for c in result.cells:
            writer.writerow(
                [result.axis, repr(c.value), c.seed, repr(c.mae), repr(c.rmse),
                 repr(c.perfect_fraction)]
            )


def write_sweep_summary(result: SweepResult, path: Union[str, Path]) -> None:
    doc = {
        "axis": result.axis,
        "points": [
            {
                "value": p.value,
                "mean_mae": p.mean_mae,
                "mean_rmse": p.mean_rmse,
                "mean_perfect_fraction": p.mean_perfect_fraction,
                "stdev_mae": p.stdev_mae,
            }
            for p in result.points
        ],
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
