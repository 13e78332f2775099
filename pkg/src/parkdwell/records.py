"""Canonical data model: observations, sequences, stays, episodes, scores.

All record types are immutable value objects that validate their invariants
at construction time, so anything downstream (tracking, evaluation,
simulation) can assume well-formed inputs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from .validation import check_fraction

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400


class Status(str, Enum):
    """Occupancy status of one parking space at one sampling instant."""

    OCCUPIED = "occupied"
    EMPTY = "empty"


@dataclass(frozen=True)
class SpaceObservation:
    """One (camera, space, timestamp) record.

    ``car_id`` is the ground-truth identity of the parked car when the data
    is annotated; ``image_ref`` is an opaque key used to look up externally
    produced scores.
    """

    camera_id: str
    space_id: str
    timestamp: int
    status: Status
    car_id: Optional[str] = None
    image_ref: Optional[str] = None

    def __post_init__(self) -> None:
        if not isinstance(self.timestamp, int) or isinstance(self.timestamp, bool):
            raise ValueError(f"timestamp must be an integer, got {self.timestamp!r}")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")
        if self.status is Status.EMPTY and self.car_id is not None:
            raise ValueError(
                f"empty observation at {self.camera_id}/{self.space_id}/"
                f"{self.timestamp} carries car_id {self.car_id!r}"
            )

    @property
    def key(self) -> str:
        """Score-table key: ``image_ref`` when present, else a canonical id."""
        if self.image_ref is not None:
            return self.image_ref
        return f"{self.camera_id}/{self.space_id}/{self.timestamp}"


def pair_key(a: SpaceObservation, b: SpaceObservation) -> str:
    """Canonical key for a same-space observation pair, timestamps sorted."""
    lo, hi = sorted((a.timestamp, b.timestamp))
    return f"{a.camera_id}/{a.space_id}/{lo}-{hi}"


@dataclass(frozen=True)
class SpaceSequence:
    """Time-ordered observations of one space, uniformly spaced by ``interval_k``."""

    camera_id: str
    space_id: str
    interval_k: int
    observations: tuple[SpaceObservation, ...]

    def __post_init__(self) -> None:
        if self.interval_k <= 0:
            raise ValueError(f"interval_k must be positive, got {self.interval_k}")
        obs = tuple(self.observations)
        object.__setattr__(self, "observations", obs)
        for o in obs:
            if (o.camera_id, o.space_id) != (self.camera_id, self.space_id):
                raise ValueError(
                    f"observation {o.camera_id}/{o.space_id} does not belong to "
                    f"sequence {self.camera_id}/{self.space_id}"
                )
        for prev, cur in zip(obs, obs[1:]):
            delta = cur.timestamp - prev.timestamp
            if delta != self.interval_k:
                raise ValueError(
                    f"non-uniform spacing in {self.camera_id}/{self.space_id}: "
                    f"{prev.timestamp} -> {cur.timestamp} (expected step {self.interval_k})"
                )

    def __len__(self) -> int:
        return len(self.observations)


@dataclass(frozen=True)
class GroundTruthStay:
    """A single car's annotated stay in one space: a closed frame interval."""

    car_id: str
    camera_id: str
    space_id: str
    first_ts: int
    last_ts: int
    dwell_seconds: int

    def __post_init__(self) -> None:
        if self.last_ts < self.first_ts:
            raise ValueError(f"last_ts {self.last_ts} precedes first_ts {self.first_ts}")
        if self.dwell_seconds != self.last_ts - self.first_ts:
            raise ValueError(
                f"dwell_seconds {self.dwell_seconds} != last_ts - first_ts "
                f"({self.last_ts - self.first_ts})"
            )


@dataclass(frozen=True)
class PredictedEpisode:
    """A tracked occupancy episode with its predicted dwell, in seconds."""

    camera_id: str
    space_id: str
    start_ts: int
    end_ts: int
    dwell_seconds: int

    def __post_init__(self) -> None:
        if self.end_ts < self.start_ts:
            raise ValueError(f"end_ts {self.end_ts} precedes start_ts {self.start_ts}")
        if self.dwell_seconds != self.end_ts - self.start_ts:
            raise ValueError(
                f"dwell_seconds {self.dwell_seconds} != end_ts - start_ts "
                f"({self.end_ts - self.start_ts})"
            )


SCORE_LABELS = ("pos", "neg")


@dataclass(frozen=True)
class ScoreRecord:
    """A labeled or unlabeled score keyed to an observation or a pair."""

    key: str
    score: float
    label: Optional[str] = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"score for {self.key!r} is not finite: {self.score!r}")
        if self.label is not None and self.label not in SCORE_LABELS:
            raise ValueError(f"label for {self.key!r} must be pos or neg, got {self.label!r}")


@dataclass(frozen=True)
class IngestSummary:
    """Counts reported after validating an annotation file."""

    n_observations: int = 0
    n_sequences: int = 0
    n_spaces: int = 0
    n_cameras: int = 0
    n_cars: int = 0
    n_occupied: int = 0
    n_empty: int = 0


def summarize_sequences(sequences: Sequence[SpaceSequence]) -> IngestSummary:
    spaces = {(s.camera_id, s.space_id) for s in sequences}
    cameras = {s.camera_id for s in sequences}
    cars = set()
    n_obs = n_occ = 0
    for seq in sequences:
        for obs in seq.observations:
            n_obs += 1
            if obs.status is Status.OCCUPIED:
                n_occ += 1
            if obs.car_id is not None:
                cars.add(obs.car_id)
    return IngestSummary(
        n_observations=n_obs,
        n_sequences=len(sequences),
        n_spaces=len(spaces),
        n_cameras=len(cameras),
        n_cars=len(cars),
        n_occupied=n_occ,
        n_empty=n_obs - n_occ,
    )


def derive_ground_truth(seq: SpaceSequence) -> list[GroundTruthStay]:
    """One stay per maximal run of consecutive observations sharing a car_id.

    Occupied observations without a car_id carry no identity and belong to no
    stay; they also terminate any open run.  A car reappearing in the same
    space after a gap yields a new, separate stay.
    """
    stays: list[GroundTruthStay] = []
    run_car: Optional[str] = None
    run_start: int = 0
    run_last: int = 0

    def close_run() -> None:
        nonlocal run_car
        if run_car is not None:
            stays.append(
                GroundTruthStay(
                    car_id=run_car,
                    camera_id=seq.camera_id,
                    space_id=seq.space_id,
                    first_ts=run_start,
                    last_ts=run_last,
                    dwell_seconds=run_last - run_start,
                )
            )
            run_car = None

    for obs in seq.observations:
        car = obs.car_id if obs.status is Status.OCCUPIED else None
        if car is None:
            close_run()
            continue
        if car == run_car:
            run_last = obs.timestamp
        else:
            close_run()
            run_car = car
            run_start = run_last = obs.timestamp
    close_run()
    return stays


def derive_all_ground_truth(sequences: Iterable[SpaceSequence]) -> list[GroundTruthStay]:
    stays: list[GroundTruthStay] = []
    for seq in sequences:
        stays.extend(derive_ground_truth(seq))
    return stays


def _day_of(timestamp: int, utc_offset_seconds: int) -> int:
    return (timestamp + utc_offset_seconds) // SECONDS_PER_DAY


def split_by_days(
    sequences: Sequence[SpaceSequence],
    train_fraction: float,
    utc_offset_seconds: int = 0,
) -> tuple[list[SpaceSequence], list[SpaceSequence]]:
    """Split per camera into (train, validation) along calendar-day boundaries.

    Per camera, the distinct observation days are sorted ascending and the
    first ``ceil(train_fraction * n_days)`` go to train, the rest to
    validation; no day straddles the boundary.  A sequence recorded across
    the boundary is cut at it.
    """
    check_fraction(train_fraction, "train_fraction")
    train_days: dict[str, set[int]] = {}
    for camera in sorted({s.camera_id for s in sequences}):
        days = sorted(
            {
                _day_of(o.timestamp, utc_offset_seconds)
                for s in sequences
                if s.camera_id == camera
                for o in s.observations
            }
        )
        # round() guards against float fuzz pushing an exact product over the
        # next integer (e.g. 0.7 * 10).
        n_train = math.ceil(round(train_fraction * len(days), 9))
        n_train = min(max(n_train, 1), len(days))
        if n_train == len(days):
            logger.warning(
                "camera %s: all %d day(s) assigned to train; validation is empty",
                camera,
                len(days),
            )
        train_days[camera] = set(days[:n_train])

    train: list[SpaceSequence] = []
    validation: list[SpaceSequence] = []
    for seq in sequences:
        in_train = train_days[seq.camera_id]
        chunk: list[SpaceObservation] = []
        chunk_is_train: Optional[bool] = None

        def flush() -> None:
            if chunk:
                piece = SpaceSequence(
                    camera_id=seq.camera_id,
                    space_id=seq.space_id,
                    interval_k=seq.interval_k,
                    observations=tuple(chunk),
                )
                (train if chunk_is_train else validation).append(piece)
                chunk.clear()

        for obs in seq.observations:
            obs_is_train = _day_of(obs.timestamp, utc_offset_seconds) in in_train
            if chunk_is_train is not None and obs_is_train != chunk_is_train:
                flush()
            chunk_is_train = obs_is_train
            chunk.append(obs)
        flush()
    return train, validation
