"""Per-space dwell tracking.

The single-pair update rule: given the current frame p and the previous
frame q taken k seconds earlier, an empty p stops any running timer; an
occupied p after an empty q starts a timer at zero; when both are occupied
the comparator decides whether the timer advances by k or is restarted for
a new car.  Folding this rule over a sequence yields closed episodes, each
carrying its predicted dwell in seconds.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

from sklearn.base import BaseEstimator

from .backends import (
    CarComparator,
    OracleCarComparator,
    OracleStatusClassifier,
    StatusClassifier,
)
from .records import PredictedEpisode, SpaceObservation, SpaceSequence, Status
from .validation import check_positive_int


class TrackingError(RuntimeError):
    """Backend failure during tracking, with record context attached."""

    def __init__(self, message: str, failures: Optional[list[str]] = None):
        super().__init__(message)
        self.failures = failures if failures is not None else [message]


@dataclass
class EpisodeState:
    """The live timer for one space: an episode that has not closed yet."""

    space_id: str
    start_ts: int
    elapsed_seconds: int
    last_obs: SpaceObservation


def _close(state: EpisodeState) -> PredictedEpisode:
    return PredictedEpisode(
        camera_id=state.last_obs.camera_id,
        space_id=state.space_id,
        start_ts=state.start_ts,
        end_ts=state.start_ts + state.elapsed_seconds,
        dwell_seconds=state.elapsed_seconds,
    )


def dwell_step(
    p_obs: SpaceObservation,
    p_status: Status,
    q_obs: Optional[SpaceObservation],
    q_status: Optional[Status],
    k: int,
    comparator: CarComparator,
    state: Optional[EpisodeState],
) -> tuple[Optional[EpisodeState], Optional[PredictedEpisode]]:
    """Advance one space by one frame; return (new state, closed episode).

    ``q_obs``/``q_status`` are None at the start of a sequence.  The
    comparator is consulted only when both frames are classified occupied.
    """
    if p_status is Status.EMPTY:
        return None, _close(state) if state is not None else None

    if q_obs is None or q_status is Status.EMPTY:
        closed = _close(state) if state is not None else None
        return EpisodeState(p_obs.space_id, p_obs.timestamp, 0, p_obs), closed

    # Both occupied.  A missing state here means the caller stepped in
    # mid-stream; the open episode then began at q with a zero timer.
    if state is None:
        state = EpisodeState(q_obs.space_id, q_obs.timestamp, 0, q_obs)
    if comparator.same_car(p_obs, q_obs):
        return replace(state, elapsed_seconds=state.elapsed_seconds + k, last_obs=p_obs), None
    return EpisodeState(p_obs.space_id, p_obs.timestamp, 0, p_obs), _close(state)


def track_sequence(
    seq: SpaceSequence,
    classifier: StatusClassifier,
    comparator: CarComparator,
) -> list[PredictedEpisode]:
    """Classify every frame and fold the dwell rule over consecutive pairs.

    An episode still open at the end of the sequence is closed at the final
    timestamp with its current elapsed value.
    """
    episodes: list[PredictedEpisode] = []
    state: Optional[EpisodeState] = None
    q_obs: Optional[SpaceObservation] = None
    q_status: Optional[Status] = None
    for obs in seq.observations:
        try:
            status = classifier.classify(obs)
            state, closed = dwell_step(
                obs, status, q_obs, q_status, seq.interval_k, comparator, state
            )
        except Exception as exc:
            raise TrackingError(
                f"backend failure at {obs.camera_id}/{obs.space_id}/"
                f"{obs.timestamp}: {exc}"
            ) from exc
        if closed is not None:
            episodes.append(closed)
        q_obs, q_status = obs, status
    if state is not None:
        episodes.append(_close(state))
    return episodes


def track_dataset(
    sequences: Sequence[SpaceSequence],
    classifier: StatusClassifier,
    comparator: CarComparator,
    parallelism: int = 1,
    fail_fast: bool = True,
    progress: Optional[Callable[[int, int], None]] = None,
) -> list[PredictedEpisode]:
    """Track every sequence and merge the episodes in canonical order.

    Output is identical for any parallelism level.  With ``fail_fast=False``
    all sequences are attempted and the per-sequence failures are raised
    together at the end.
    """
    check_positive_int(parallelism, "parallelism")
    sequences = list(sequences)
    total = len(sequences)

    def run_one(seq: SpaceSequence) -> list[PredictedEpisode]:
        return track_sequence(seq, classifier, comparator)

    results: list[Optional[list[PredictedEpisode]]] = [None] * total
    failures: list[str] = []
    if parallelism == 1:
        for i, seq in enumerate(sequences):
            try:
                results[i] = run_one(seq)
            except TrackingError as exc:
                if fail_fast:
                    raise
                failures.extend(exc.failures)
            if progress is not None:
                progress(i + 1, total)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(run_one, seq) for seq in sequences]
            for i, future in enumerate(futures):
                try:
                    results[i] = future.result()
                except TrackingError as exc:
                    if fail_fast:
                        raise
                    failures.extend(exc.failures)
                if progress is not None:
                    progress(i + 1, total)
    if failures:
        raise TrackingError(
            f"{len(failures)} sequence(s) failed: " + "; ".join(failures), failures
        )
    episodes = [ep for eps in results if eps is not None for ep in eps]
    episodes.sort(key=lambda e: (e.camera_id, e.space_id, e.start_ts))
    return episodes


class DwellTimeTracker(BaseEstimator):
    """Estimator wrapper around the tracking engine.

    Rule-based and stateless: ``fit`` only validates parameters.  ``predict``
    maps a list of :class:`SpaceSequence` to the merged, canonically sorted
    list of :class:`PredictedEpisode`.  Backends default to the oracles.
    """

    def __init__(
        self,
        classifier: Optional[StatusClassifier] = None,
        comparator: Optional[CarComparator] = None,
        n_jobs: int = 1,
        fail_fast: bool = True,
    ):
        self.classifier = classifier
        self.comparator = comparator
        self.n_jobs = n_jobs
        self.fail_fast = fail_fast

    def fit(self, X=None, y=None) -> "DwellTimeTracker":
        check_positive_int(self.n_jobs, "n_jobs")
        return self

    def predict(self, X: Iterable[SpaceSequence]) -> list[PredictedEpisode]:
        self.fit()
        classifier = self.classifier if self.classifier is not None else OracleStatusClassifier()
        comparator = self.comparator if self.comparator is not None else OracleCarComparator()
        return track_dataset(
            list(X),
            classifier,
            comparator,
            parallelism=self.n_jobs,
            fail_fast=self.fail_fast,
        )
