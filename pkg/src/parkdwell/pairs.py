"""Positive/negative car-pair manifests for comparator training and calibration.

A positive pair joins two different images of the same car; a negative pair
joins images of two different cars.  Generation is pure and seed-driven:
the same seed always yields the same manifest.
"""

from __future__ import annotations

import csv
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from .records import SpaceSequence, Status
from .validation import check_positive_int

logger = logging.getLogger(__name__)

_DUPLICATE_RETRIES = 10

MANIFEST_FIELDS = ("anchor_ref", "other_ref", "label", "car_a", "car_b")


@dataclass(frozen=True)
class PairManifestEntry:
    anchor_ref: str
    other_ref: str
    label: str
    car_a: str
    car_b: str

    def __post_init__(self) -> None:
        if self.label == "pos":
            if self.car_a != self.car_b:
                raise ValueError(f"positive pair must share a car: {self.car_a} vs {self.car_b}")
            if self.anchor_ref == self.other_ref:
                raise ValueError(f"positive pair repeats the same image {self.anchor_ref!r}")
        elif self.label == "neg":
            if self.car_a == self.car_b:
                raise ValueError(f"negative pair must differ in car, both {self.car_a}")
        else:
            raise ValueError(f"label must be pos or neg, got {self.label!r}")


@dataclass(frozen=True)
class EvalPairs:
    """Evaluation manifest plus the cars whose positive pair was impossible."""

    entries: tuple[PairManifestEntry, ...]
    missing_positive_cars: tuple[str, ...] = field(default_factory=tuple)


def car_map(sequences: Iterable[SpaceSequence]) -> dict[str, list[str]]:
    """Collect car -> observation-key list from annotated sequences."""
    cars: dict[str, list[str]] = {}
    for seq in sequences:
        for obs in seq.observations:
            if obs.status is Status.OCCUPIED and obs.car_id is not None:
                cars.setdefault(obs.car_id, []).append(obs.key)
    return cars


def _validate_car_map(cars: Mapping[str, Sequence[str]]) -> list[str]:
    if len(cars) < 2:
        raise ValueError(f"pair generation needs at least 2 cars, got {len(cars)}")
    for car, refs in cars.items():
        if len(refs) == 0:
            raise ValueError(f"car {car!r} has no observations")
    return sorted(cars)


def generate_epoch_pairs(
    cars: Mapping[str, Sequence[str]],
    count: int,
    seed: int,
) -> list[PairManifestEntry]:
    """Sample ``count/2`` positive and ``count/2`` negative pairs.

    Positives are drawn only from cars with at least two images.  Repeated
    identical pairs are re-sampled up to a bounded number of times and then
    accepted (a car with exactly two images can only ever repeat).
    """
    check_positive_int(count, "count")
    if count % 2 != 0:
        raise ValueError(f"count must be even, got {count}")
    order = _validate_car_map(cars)
    eligible = [car for car in order if len(cars[car]) >= 2]
    if not eligible:
        raise ValueError("no car has >= 2 observations; positive pairs impossible")
    rng = random.Random(seed)
    entries: list[PairManifestEntry] = []
    seen: set[tuple[str, ...]] = set()

    for _ in range(count // 2):
        for attempt in range(_DUPLICATE_RETRIES + 1):
            car = rng.choice(eligible)
            anchor, other = rng.sample(list(cars[car]), 2)
            dedupe = ("pos",) + tuple(sorted((anchor, other)))
            if dedupe not in seen or attempt == _DUPLICATE_RETRIES:
                break
        seen.add(dedupe)
        entries.append(PairManifestEntry(anchor, other, "pos", car, car))

    for _ in range(count // 2):
        for attempt in range(_DUPLICATE_RETRIES + 1):
            car_a, car_b = rng.sample(order, 2)
            anchor = rng.choice(list(cars[car_a]))
            other = rng.choice(list(cars[car_b]))
            dedupe = ("neg",) + tuple(sorted((anchor, other)))
            if dedupe not in seen or attempt == _DUPLICATE_RETRIES:
                break
        seen.add(dedupe)
        entries.append(PairManifestEntry(anchor, other, "neg", car_a, car_b))
    return entries


def generate_eval_pairs(cars: Mapping[str, Sequence[str]], seed: int) -> EvalPairs:
    """One positive and one negative test pair per car, anchored on one image.

    For each car a single anchor image is chosen at random.  The positive
    pair uses another image of the same car when one exists (otherwise the
    car is recorded as a shortfall); the negative pair uses a random image
    of a random other car.  A dataset of n cars thus yields at most 2n pairs.
    """
    order = _validate_car_map(cars)
    rng = random.Random(seed)
    entries: list[PairManifestEntry] = []
    missing: list[str] = []
    for car in order:
        refs = list(cars[car])
        anchor = rng.choice(refs)
        alternatives = [r for r in refs if r != anchor]
        if alternatives:
            entries.append(PairManifestEntry(anchor, rng.choice(alternatives), "pos", car, car))
        else:
            missing.append(car)
        other_car = rng.choice([c for c in order if c != car])
        other = rng.choice(list(cars[other_car]))
        entries.append(PairManifestEntry(anchor, other, "neg", car, other_car))
    if missing:
        logger.warning(
            "%d car(s) have a single image; their positive pairs were skipped", len(missing)
        )
    return EvalPairs(entries=tuple(entries), missing_positive_cars=tuple(missing))


def write_manifest(entries: Iterable[PairManifestEntry], path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for e in entries:
            writer.writerow([e.anchor_ref, e.other_ref, e.label, e.car_a, e.car_b])


def read_manifest(path: Union[str, Path]) -> list[PairManifestEntry]:
    entries: list[PairManifestEntry] = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(MANIFEST_FIELDS)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MANIFEST_FIELDS):
                raise ValueError(f"{path} line {line_no}: expected {len(MANIFEST_FIELDS)} columns")
            entries.append(PairManifestEntry(*row))
    return entries
