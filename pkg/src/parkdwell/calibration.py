"""Decision-threshold calibration from labeled validation scores.

Two operating-point rules are supported: the equal-error-rate point for
occupancy likelihood scores (accept iff score >= threshold) and the largest
threshold keeping the false-accept rate under a cap for pair distance
scores (same iff score <= threshold).  Rates are exhaustive counts over the
calibration set; the boundary is inclusive on the accept side in both
polarities, matching how the rates are counted.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .records import ScoreRecord
from .validation import check_one_of

logger = logging.getLogger(__name__)

LIKELIHOOD = "likelihood"
DISTANCE = "distance"


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    far: float
    frr: float


@dataclass(frozen=True)
class RocCurve:
    """Exhaustively counted (threshold, FAR, FRR) points, sorted by threshold.

    One point per distinct score, plus sentinels at -inf and +inf.
    """

    points: tuple[RocPoint, ...]
    polarity: str

    @property
    def finite_points(self) -> tuple[RocPoint, ...]:
        return tuple(p for p in self.points if math.isfinite(p.threshold))


@dataclass(frozen=True)
class ThresholdCalibration:
    """A chosen threshold with its recounted rates on the calibration set."""

    threshold: float
    far_at_threshold: float
    frr_at_threshold: float
    method: str

    def __post_init__(self) -> None:
        if not (0.0 <= self.far_at_threshold <= 1.0 and 0.0 <= self.frr_at_threshold <= 1.0):
            raise ValueError("calibrated rates must be in [0, 1]")
        check_one_of(self.method, ("eer", "far_cap"), "method")


def _split_scores(records: Sequence[ScoreRecord]) -> tuple[np.ndarray, np.ndarray]:
    pos = np.sort(np.array([r.score for r in records if r.label == "pos"], dtype=float))
    neg = np.sort(np.array([r.score for r in records if r.label == "neg"], dtype=float))
    unlabeled = sum(1 for r in records if r.label is None)
    if unlabeled:
        raise ValueError(f"{unlabeled} score record(s) carry no label")
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError(
            f"calibration needs both classes; got {len(pos)} pos and {len(neg)} neg"
        )
    return pos, neg


def build_roc(records: Sequence[ScoreRecord], polarity: str) -> RocCurve:
    """Count FAR/FRR at every distinct score value (plus +-inf sentinels).

    Likelihood polarity accepts (positive) iff score >= threshold; distance
    polarity accepts (same) iff score <= threshold.
    """
    check_one_of(polarity, (LIKELIHOOD, DISTANCE), "polarity")
    pos, neg = _split_scores(records)
    thresholds = np.unique(np.concatenate([pos, neg]))
    if polarity == LIKELIHOOD:
        far = (len(neg) - np.searchsorted(neg, thresholds, side="left")) / len(neg)
        frr = np.searchsorted(pos, thresholds, side="left") / len(pos)
        head = RocPoint(float("-inf"), 1.0, 0.0)
        tail = RocPoint(float("inf"), 0.0, 1.0)
    else:
        far = np.searchsorted(neg, thresholds, side="right") / len(neg)
        frr = (len(pos) - np.searchsorted(pos, thresholds, side="right")) / len(pos)
        head = RocPoint(float("-inf"), 0.0, 1.0)
        tail = RocPoint(float("inf"), 1.0, 0.0)
    body = tuple(
        RocPoint(float(t), float(fa), float(fr)) for t, fa, fr in zip(thresholds, far, frr)
    )
    return RocCurve(points=(head,) + body + (tail,), polarity=polarity)


def _clamped_threshold(curve: RocCurve, value: float) -> float:
    # Interpolation endpoints must be finite; pull sentinels one unit beyond
    # the extreme scores.
    if math.isfinite(value):
        return value
    finite = curve.finite_points
    return finite[0].threshold - 1.0 if value < 0 else finite[-1].threshold + 1.0


def eer_threshold(curve: RocCurve) -> ThresholdCalibration:
    """The operating point where FAR equals FRR.

    With a perfectly separating gap (EER 0) the gap midpoint is returned;
    an exact nonzero crossing on the grid is returned unmodified; otherwise
    the crossing is linearly interpolated between the bracketing points.
    A fully degenerate curve (a single distinct score) yields that score
    with rates 0.5 and a warning.
    """
    pts = curve.points
    if len(curve.finite_points) == 1:
        only = curve.finite_points[0]
        logger.warning(
            "degenerate score set (single distinct value %g); EER undefined", only.threshold
        )
        return ThresholdCalibration(only.threshold, 0.5, 0.5, "eer")

    diffs = [p.far - p.frr for p in pts]
    zeros = [i for i, d in enumerate(diffs) if d == 0.0]
    if zeros:
        if pts[zeros[0]].far == 0.0:
            # Separable: a whole threshold interval achieves FAR = FRR = 0;
            # return its midpoint.  The interval is left-open for likelihood
            # (rates at t cover (t_prev, t]) and right-open for distance.
            if curve.polarity == LIKELIHOOD:
                i = zeros[0]
                lo, hi = pts[i - 1].threshold, pts[i].threshold
            else:
                i = zeros[-1]
                lo, hi = pts[i].threshold, pts[i + 1].threshold
            return ThresholdCalibration((lo + hi) / 2.0, 0.0, 0.0, "eer")
        i = zeros[0]
        return ThresholdCalibration(pts[i].threshold, pts[i].far, pts[i].frr, "eer")

    for i in range(len(pts) - 1):
        if diffs[i] * diffs[i + 1] < 0:
            alpha = diffs[i] / (diffs[i] - diffs[i + 1])
            lo = _clamped_threshold(curve, pts[i].threshold)
            hi = _clamped_threshold(curve, pts[i + 1].threshold)
            threshold = lo + alpha * (hi - lo)
            far = pts[i].far + alpha * (pts[i + 1].far - pts[i].far)
            frr = pts[i].frr + alpha * (pts[i + 1].frr - pts[i].frr)
            return ThresholdCalibration(threshold, far, frr, "eer")
    raise ValueError("ROC curve has no FAR/FRR crossing; curve is malformed")


def far_cap_threshold(curve: RocCurve, cap: float) -> ThresholdCalibration:
    """Largest distance threshold whose counted FAR stays at or under ``cap``.

    When even the smallest distinct score exceeds the cap, returns the -inf
    sentinel (reject everything) with a warning.
    """
    if not (0.0 < cap < 1.0):
        raise ValueError(f"cap must be in (0, 1), got {cap!r}")
    if curve.polarity != DISTANCE:
        raise ValueError(f"far_cap_threshold requires distance polarity, got {curve.polarity!r}")
    admissible = [p for p in curve.finite_points if p.far <= cap]
    if not admissible:
        logger.warning(
            "no threshold satisfies FAR <= %g; rejecting every pair", cap
        )
        return ThresholdCalibration(float("-inf"), 0.0, 1.0, "far_cap")
    best = admissible[-1]
    return ThresholdCalibration(best.threshold, best.far, best.frr, "far_cap")


def _coerce_labels(y) -> list[str]:
    labels = []
    for value in y:
        if value in ("pos", "neg"):
            labels.append(value)
        elif value in (1, True):
            labels.append("pos")
        elif value in (0, False):
            labels.append("neg")
        else:
            raise ValueError(f"label must be pos/neg or 0/1, got {value!r}")
    return labels


class ThresholdCalibrator(BaseEstimator):
    """Estimator facade: fit a decision threshold from labeled scores.

    Parameters
    ----------
    method : "eer" or "far_cap"
    polarity : "likelihood" (accept iff score >= threshold) or "distance"
        (accept iff score <= threshold)
    cap : maximum allowed false-accept rate, used by "far_cap" only

    After ``fit(X, y)`` (X: 1-d scores, y: pos/neg or 1/0 labels) the chosen
    operating point is available as ``threshold_``, ``far_``, ``frr_`` and
    ``calibration_``; ``predict`` applies the threshold to new scores.
    """

    def __init__(self, method: str = "eer", polarity: str = LIKELIHOOD, cap: float = 0.05):
        self.method = method
        self.polarity = polarity
        self.cap = cap

    def fit(self, X, y) -> "ThresholdCalibrator":
        method = check_one_of(self.method.replace("-", "_"), ("eer", "far_cap"), "method")
        check_one_of(self.polarity, (LIKELIHOOD, DISTANCE), "polarity")
        scores = np.asarray(X, dtype=float).ravel()
        labels = _coerce_labels(np.asarray(y).ravel().tolist())
        if len(scores) != len(labels):
            raise ValueError(f"got {len(scores)} scores but {len(labels)} labels")
        records = [
            ScoreRecord(key=str(i), score=float(s), label=lab)
            for i, (s, lab) in enumerate(zip(scores, labels))
        ]
        self.roc_ = build_roc(records, self.polarity)
        if method == "eer":
            calibration = eer_threshold(self.roc_)
        else:
            calibration = far_cap_threshold(self.roc_, self.cap)
        self.calibration_ = calibration
        self.threshold_ = calibration.threshold
        self.far_ = calibration.far_at_threshold
        self.frr_ = calibration.frr_at_threshold
        return self

    def predict(self, X) -> np.ndarray:
        """Boolean accept decisions for new scores under the fitted threshold."""
        check_is_fitted(self, "threshold_")
        scores = np.asarray(X, dtype=float).ravel()
        if self.polarity == LIKELIHOOD:
            return scores >= self.threshold_
        return scores <= self.threshold_
