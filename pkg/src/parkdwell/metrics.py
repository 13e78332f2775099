"""Episode-vs-ground-truth evaluation: matching, MAE/RMSE, histograms.

Each predicted episode is assigned to the ground-truth stay whose interval
contains the episode's start timestamp.  Per stay, the earliest assigned
episode is the one compared against the true dwell; any further episodes
are fragments compared against zero.  Undetected stays are compared against
zero from the other side, and episodes starting outside every stay are
spurious (included with a zero ground truth by default, toggleable).
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .records import GroundTruthStay, PredictedEpisode
from .validation import check_positive_int

DEFAULT_BIN_WIDTH_SECONDS = 1800
DEFAULT_HISTOGRAM_MAX_SECONDS = 24 * 3600


class ComparisonKind(str, Enum):
    MATCHED_FIRST = "matched_first"
    EXTRA_FRAGMENT = "extra_fragment"
    MISSED_CAR = "missed_car"
    SPURIOUS = "spurious"


@dataclass(frozen=True)
class ComparisonRecord:
    """One (ground truth, prediction) residual entering the error metrics."""

    y_seconds: int
    yhat_seconds: int
    kind: ComparisonKind

    def __post_init__(self) -> None:
        if self.kind is ComparisonKind.MISSED_CAR and self.yhat_seconds != 0:
            raise ValueError("missed car must have zero prediction")
        if self.kind in (ComparisonKind.EXTRA_FRAGMENT, ComparisonKind.SPURIOUS):
            if self.y_seconds != 0:
                raise ValueError(f"{self.kind.value} must have zero ground truth")


@dataclass(frozen=True)
class HistogramBin:
    """Counts of stays/episodes with dwell in [start, start + width).

    ``width_seconds`` None marks the final open-ended bin.
    """

    start_seconds: int
    width_seconds: Optional[int]
    gt_count: int
    pred_count: int


@dataclass(frozen=True)
class EvalReport:
    mae_seconds: float
    rmse_seconds: float
    perfect_fraction: float
    counts: dict[str, int]
    n_comparisons: int
    total_cars: int
    histogram: tuple[HistogramBin, ...] = field(default_factory=tuple)


def _group(items, key):
    grouped: dict = {}
    for item in items:
        grouped.setdefault(key(item), []).append(item)
    return grouped


def match_episodes(
    stays: Sequence[GroundTruthStay],
    episodes: Sequence[PredictedEpisode],
) -> list[ComparisonRecord]:
    """Assign episodes to stays by start-timestamp containment.

    Ground-truth stays must be disjoint within a space; overlap is data
    corruption and raises.
    """
    stays_by_space = _group(stays, lambda s: (s.camera_id, s.space_id))
    eps_by_space = _group(episodes, lambda e: (e.camera_id, e.space_id))
    records: list[ComparisonRecord] = []

    for space in sorted(set(stays_by_space) | set(eps_by_space)):
        space_stays = sorted(stays_by_space.get(space, []), key=lambda s: s.first_ts)
        for prev, cur in zip(space_stays, space_stays[1:]):
            if cur.first_ts <= prev.last_ts:
                raise ValueError(
                    f"overlapping ground-truth stays in {space[0]}/{space[1]}: "
                    f"[{prev.first_ts}, {prev.last_ts}] and [{cur.first_ts}, {cur.last_ts}]"
                )
        space_eps = sorted(eps_by_space.get(space, []), key=lambda e: e.start_ts)
        starts = [s.first_ts for s in space_stays]
        assigned: dict[int, list[PredictedEpisode]] = {}
        spurious: list[PredictedEpisode] = []
        for ep in space_eps:
            idx = bisect_right(starts, ep.start_ts) - 1
            if idx >= 0 and ep.start_ts <= space_stays[idx].last_ts:
                assigned.setdefault(idx, []).append(ep)
            else:
                spurious.append(ep)
        for idx, stay in enumerate(space_stays):
            hits = assigned.get(idx, [])
            if not hits:
                records.append(
                    ComparisonRecord(stay.dwell_seconds, 0, ComparisonKind.MISSED_CAR)
                )
                continue
            records.append(
                ComparisonRecord(
                    stay.dwell_seconds, hits[0].dwell_seconds, ComparisonKind.MATCHED_FIRST
                )
            )
            for extra in hits[1:]:
                records.append(
                    ComparisonRecord(0, extra.dwell_seconds, ComparisonKind.EXTRA_FRAGMENT)
                )
        for ep in spurious:
            records.append(ComparisonRecord(0, ep.dwell_seconds, ComparisonKind.SPURIOUS))
    return records


def compute_metrics(
    records: Sequence[ComparisonRecord],
    total_cars: int,
    include_spurious: bool = True,
) -> EvalReport:
    """MAE, RMSE and perfect-prediction rate over comparison records.

    ``total_cars`` is the number of ground-truth stays and is the
    denominator of the perfect-prediction rate; MAE/RMSE divide by the
    number of records included.
    """
    if total_cars <= 0:
        raise ValueError(f"total_cars must be positive, got {total_cars}")
    used = [
        r for r in records if include_spurious or r.kind is not ComparisonKind.SPURIOUS
    ]
    if not used:
        raise ValueError("no comparison records to evaluate")
    n = len(used)
    abs_err = [abs(r.y_seconds - r.yhat_seconds) for r in used]
    mae = sum(abs_err) / n
    rmse = math.sqrt(sum(e * e for e in abs_err) / n)
    perfect = sum(
        1
        for r in used
        if r.kind is ComparisonKind.MATCHED_FIRST and r.y_seconds == r.yhat_seconds
    )
    counts = {kind.value: 0 for kind in ComparisonKind}
    for r in used:
        counts[r.kind.value] += 1
    return EvalReport(
        mae_seconds=mae,
        rmse_seconds=rmse,
        perfect_fraction=perfect / total_cars,
        counts=counts,
        n_comparisons=n,
        total_cars=total_cars,
    )


def dwell_histogram(
    stays: Sequence[GroundTruthStay],
    episodes: Sequence[PredictedEpisode],
    bin_width_seconds: int = DEFAULT_BIN_WIDTH_SECONDS,
    max_seconds: int = DEFAULT_HISTOGRAM_MAX_SECONDS,
) -> tuple[HistogramBin, ...]:
    """Parallel ground-truth / predicted dwell counts per fixed-width bin.

    Bins cover [i*w, (i+1)*w) up to ``max_seconds``; one final open-ended
    bin collects everything at or above it.
    """
    check_positive_int(bin_width_seconds, "bin_width_seconds")
    check_positive_int(max_seconds, "max_seconds")
    n_full = math.ceil(max_seconds / bin_width_seconds)
    gt_counts = [0] * (n_full + 1)
    pred_counts = [0] * (n_full + 1)
    for stay in stays:
        gt_counts[min(stay.dwell_seconds // bin_width_seconds, n_full)] += 1
    for ep in episodes:
        pred_counts[min(ep.dwell_seconds // bin_width_seconds, n_full)] += 1
    bins = [
        HistogramBin(i * bin_width_seconds, bin_width_seconds, gt_counts[i], pred_counts[i])
        for i in range(n_full)
    ]
    bins.append(
        HistogramBin(n_full * bin_width_seconds, None, gt_counts[n_full], pred_counts[n_full])
    )
    return tuple(bins)


def evaluate_tracking(
    stays: Sequence[GroundTruthStay],
    episodes: Sequence[PredictedEpisode],
    bin_width_seconds: int = DEFAULT_BIN_WIDTH_SECONDS,
    max_seconds: int = DEFAULT_HISTOGRAM_MAX_SECONDS,
    include_spurious: bool = True,
) -> EvalReport:
    """Match, compute metrics and attach the dwell histogram in one call."""
    records = match_episodes(stays, episodes)
    report = compute_metrics(records, total_cars=len(stays), include_spurious=include_spurious)
    histogram = dwell_histogram(stays, episodes, bin_width_seconds, max_seconds)
    return EvalReport(
        mae_seconds=report.mae_seconds,
        rmse_seconds=report.rmse_seconds,
        perfect_fraction=report.perfect_fraction,
        counts=report.counts,
        n_comparisons=report.n_comparisons,
        total_cars=report.total_cars,
        histogram=histogram,
    )


def write_histogram_csv(
    histogram: Iterable[HistogramBin], path: Union[str, Path]
) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_start", "bin_width", "gt_count", "pred_count"])
        for b in histogram:
            width = "inf" if b.width_seconds is None else b.width_seconds
            writer.writerow([b.start_seconds, width, b.gt_count, b.pred_count])
