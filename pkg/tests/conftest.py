"""Shared builders and independent reference implementations for the tests.

``brute_force_episodes`` is a deliberately literal re-statement of the
per-frame timer update (keep a timer value per frame, then cut episodes
where the timer restarts); it shares no code with the engine under test.
"""

from __future__ import annotations

import random
from typing import Optional

import pytest

from parkdwell.records import PredictedEpisode, SpaceObservation, SpaceSequence, Status


def build_sequence(
    pattern: str,
    k: int = 300,
    camera: str = "c0",
    space: str = "s0",
    start_ts: int = 0,
    image_refs: bool = False,
) -> SpaceSequence:
    """Compact sequence builder: '.' empty, a letter names a car, '?' is
    occupied without an identity."""
    observations = []
    for i, ch in enumerate(pattern):
        ts = start_ts + i * k
        if ch == ".":
            status, car = Status.EMPTY, None
        elif ch == "?":
            status, car = Status.OCCUPIED, None
        else:
            status, car = Status.OCCUPIED, f"car-{ch}"
        observations.append(
            SpaceObservation(
                camera_id=camera,
                space_id=space,
                timestamp=ts,
                status=status,
                car_id=car,
                image_ref=f"img-{space}-{ts}" if image_refs else None,
            )
        )
    return SpaceSequence(camera, space, k, tuple(observations))


def brute_force_episodes(seq: SpaceSequence, classifier, comparator) -> list[PredictedEpisode]:
    obs = seq.observations
    k = seq.interval_k
    statuses = [classifier.classify(o) for o in obs]
    time: list[Optional[int]] = [None] * len(obs)
    for i in range(len(obs)):
        if statuses[i] is Status.EMPTY:
            continue
        if i == 0 or statuses[i - 1] is Status.EMPTY:
            time[i] = 0
            continue
        if comparator.same_car(obs[i], obs[i - 1]):
            time[i] = time[i - 1] + k
        else:
            time[i] = 0

    episodes: list[PredictedEpisode] = []
    start: Optional[int] = None

    def close(last: int) -> None:
        episodes.append(
            PredictedEpisode(
                camera_id=seq.camera_id,
                space_id=seq.space_id,
                start_ts=obs[start].timestamp,
                end_ts=obs[last].timestamp,
                dwell_seconds=time[last],
            )
        )

    for i in range(len(obs)):
        if time[i] is None:
            if start is not None:
                close(i - 1)
            start = None
        elif time[i] == 0:
            if start is not None:
                close(i - 1)
            start = i
    if start is not None:
        close(len(obs) - 1)
    return episodes


def random_annotated_sequence(
    rng: random.Random,
    max_len: int = 64,
    k: int = 300,
    camera: str = "c0",
    space: str = "s0",
) -> SpaceSequence:
    """Random ground-truth stream with empty runs, stays and direct handovers."""
    n = rng.randint(1, max_len)
    pattern = []
    letters = "abcdefghijklmnopqrstuvwxyz"
    car_index = 0
    current: Optional[str] = None
    for _ in range(n):
        u = rng.random()
        if current is None:
            if u < 0.5:
                current = letters[car_index % len(letters)]
                car_index += 1
        else:
            if u < 0.25:
                current = None
            elif u < 0.40:  # same-frame handover to a new car
                current = letters[car_index % len(letters)]
                car_index += 1
        pattern.append(current or ".")
    return build_sequence("".join(pattern), k=k, camera=camera, space=space)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
