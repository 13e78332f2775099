"""Pluggable perception backends.

Two questions are answered per frame pair: "is this space occupied?"
(status classifier) and "is this the same car as at t - k?" (car
comparator).  Oracle backends answer from ground truth, noisy backends
flip oracle answers at configured rates, and scored backends threshold
externally produced score tables.

All stochastic decisions are hash-keyed per record (see :mod:`.rng`), so a
backend is a pure function of its configuration and the observation
identity: replays and parallel runs are decision-for-decision identical.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Protocol

from sklearn.base import BaseEstimator

from .records import SpaceObservation, Status, pair_key
from .rng import unit_uniform
from .validation import check_one_of, check_probability

logger = logging.getLogger(__name__)


class StatusClassifier(Protocol):
    def classify(self, obs: SpaceObservation) -> Status: ...


class CarComparator(Protocol):
    def same_car(self, a: SpaceObservation, b: SpaceObservation) -> bool: ...


@dataclass(frozen=True)
class NoiseConfig:
    """Error rates for the noisy backends.

    ``p_occ_as_empty``/``p_empty_as_occ`` are per-frame status flip
    probabilities; ``far`` is the chance a different-car pair is judged
    same, ``frr`` the chance a same-car pair is judged different.
    """

    p_occ_as_empty: float = 0.0
    p_empty_as_occ: float = 0.0
    far: float = 0.0
    frr: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        check_probability(self.p_occ_as_empty, "p_occ_as_empty")
        check_probability(self.p_empty_as_occ, "p_empty_as_occ")
        check_probability(self.far, "far")
        check_probability(self.frr, "frr")


def _ground_truth_same(a: SpaceObservation, b: SpaceObservation) -> bool:
    """Ground-truth identity of a pair.

    A ground-truth-occupied observation without a car_id is unanswerable
    (unannotated data) and raises.  A ground-truth-empty observation in the
    pair makes it a different-pair: there is no car on that side, which is
    exactly what happens when a misclassified empty frame reaches the
    comparator.
    """
    for obs in (a, b):
        if obs.status is Status.OCCUPIED and obs.car_id is None:
            raise ValueError(
                f"occupied observation {obs.camera_id}/{obs.space_id}/"
                f"{obs.timestamp} has no car_id; ground-truth comparison impossible"
            )
    return a.car_id is not None and a.car_id == b.car_id


class OracleStatusClassifier(BaseEstimator):
    """Returns the ground-truth status unchanged."""

    def classify(self, obs: SpaceObservation) -> Status:
        return obs.status


class NoisyStatusClassifier(BaseEstimator):
    """Flips the ground-truth status at configured per-frame rates."""

    def __init__(self, p_occ_as_empty: float = 0.0, p_empty_as_occ: float = 0.0, seed: int = 0):
        self.p_occ_as_empty = p_occ_as_empty
        self.p_empty_as_occ = p_empty_as_occ
        self.seed = seed

    @classmethod
    def from_config(cls, cfg: NoiseConfig) -> "NoisyStatusClassifier":
        return cls(cfg.p_occ_as_empty, cfg.p_empty_as_occ, cfg.seed)

    def classify(self, obs: SpaceObservation) -> Status:
        check_probability(self.p_occ_as_empty, "p_occ_as_empty")
        check_probability(self.p_empty_as_occ, "p_empty_as_occ")
        u = unit_uniform(self.seed, "status", obs.camera_id, obs.space_id, obs.timestamp)
        if obs.status is Status.OCCUPIED:
            return Status.EMPTY if u < self.p_occ_as_empty else Status.OCCUPIED
        return Status.OCCUPIED if u < self.p_empty_as_occ else Status.EMPTY


class ScoredStatusClassifier(BaseEstimator):
    """Thresholds an occupancy-likelihood score table: occupied iff score >= threshold.

    ``missing="error"`` (default) raises on an unscored observation;
    ``missing="empty"`` falls back to Empty with a warning.
    """

    def __init__(self, scores: Mapping[str, float], threshold: float, missing: str = "error"):
        self.scores = scores
        self.threshold = threshold
        self.missing = missing

    def classify(self, obs: SpaceObservation) -> Status:
        check_one_of(self.missing, ("error", "empty"), "missing")
        score = self.scores.get(obs.key)
        if score is None:
            if self.missing == "error":
                raise KeyError(f"no status score for observation key {obs.key!r}")
            logger.warning("no status score for %r; falling back to empty", obs.key)
            return Status.EMPTY
        return Status.OCCUPIED if score >= self.threshold else Status.EMPTY


class OracleCarComparator(BaseEstimator):
    """Answers from ground-truth identifiers: same iff car_id equal."""

    def same_car(self, a: SpaceObservation, b: SpaceObservation) -> bool:
        return _ground_truth_same(a, b)


class NoisyCarComparator(BaseEstimator):
    """Flips ground-truth pair identity at the configured FAR/FRR rates."""

    def __init__(self, far: float = 0.0, frr: float = 0.0, seed: int = 0):
        self.far = far
        self.frr = frr
        self.seed = seed

    @classmethod
    def from_config(cls, cfg: NoiseConfig) -> "NoisyCarComparator":
        return cls(cfg.far, cfg.frr, cfg.seed)

    def same_car(self, a: SpaceObservation, b: SpaceObservation) -> bool:
        check_probability(self.far, "far")
        check_probability(self.frr, "frr")
        truth = _ground_truth_same(a, b)
        lo, hi = sorted((a.key, b.key))
        u = unit_uniform(self.seed, "pair", lo, hi)
        if truth:
            return not (u < self.frr)
        return u < self.far


class ScoredCarComparator(BaseEstimator):
    """Thresholds a pair-distance score table: same iff distance <= threshold."""

    def __init__(self, scores: Mapping[str, float], threshold: float):
        self.scores = scores
        self.threshold = threshold

    def same_car(self, a: SpaceObservation, b: SpaceObservation) -> bool:
        key = pair_key(a, b)
        score = self.scores.get(key)
        if score is None:
            raise KeyError(f"no pair score for key {key!r}")
        return score <= self.threshold
