from __future__ import annotations

import random

import numpy as np
import pytest

from parkdwell.calibration import (
    ThresholdCalibrator,
    build_roc,
    eer_threshold,
    far_cap_threshold,
)
from parkdwell.records import ScoreRecord


def _records(pos, neg):
    return [ScoreRecord(f"p{i}", s, "pos") for i, s in enumerate(pos)] + [
        ScoreRecord(f"n{i}", s, "neg") for i, s in enumerate(neg)
    ]


def brute_rates(pos, neg, t, polarity):
    if polarity == "likelihood":
        far = sum(1 for s in neg if s >= t) / len(neg)
        frr = sum(1 for s in pos if s < t) / len(pos)
    else:
        far = sum(1 for s in neg if s <= t) / len(neg)
        frr = sum(1 for s in pos if s > t) / len(pos)
    return far, frr


# --- build_roc ------------------------------------------------------------


def test_roc_rejects_single_class_and_unlabeled():
    with pytest.raises(ValueError, match="both classes"):
        build_roc([ScoreRecord("p", 0.5, "pos")], "likelihood")
    with pytest.raises(ValueError, match="no label"):
        build_roc([ScoreRecord("p", 0.5, "pos"), ScoreRecord("n", 0.1)], "likelihood")
    with pytest.raises(ValueError, match="polarity"):
        build_roc(_records([0.5], [0.1]), "similarity")


def test_roc_separable_has_zero_error_point():
    roc = build_roc(_records([0.9, 0.8], [0.1, 0.2]), "likelihood")
    assert any(p.far == 0.0 and p.frr == 0.0 for p in roc.points)


def test_roc_has_sentinels_and_sorted_thresholds():
    roc = build_roc(_records([0.9], [0.1]), "likelihood")
    thresholds = [p.threshold for p in roc.points]
    assert thresholds[0] == float("-inf") and thresholds[-1] == float("inf")
    assert thresholds == sorted(thresholds)
    assert len(roc.finite_points) == 2


def test_roc_monotone_rates_likelihood():
    rng = random.Random(1)
    pos = [rng.uniform(0.3, 1.0) for _ in range(80)]
    neg = [rng.uniform(0.0, 0.7) for _ in range(80)]
    roc = build_roc(_records(pos, neg), "likelihood")
    for a, b in zip(roc.points, roc.points[1:]):
        assert a.far >= b.far
        assert a.frr <= b.frr


def test_roc_matches_brute_force_overlapping_uniforms():
    rng = random.Random(2)
    pos = [rng.uniform(0.2, 1.0) for _ in range(100)]
    neg = [rng.uniform(0.0, 0.8) for _ in range(100)]
    for polarity in ("likelihood", "distance"):
        roc = build_roc(_records(pos, neg), polarity)
        for point in roc.finite_points:
            assert (point.far, point.frr) == brute_rates(pos, neg, point.threshold, polarity)


def test_roc_matches_brute_force_fuzz():
    rng = random.Random(3)
    for trial in range(60):
        n_pos = rng.randint(1, 250)
        n_neg = rng.randint(1, 250)
        # quantized scores force ties across and within classes
        quantum = rng.choice([1.0, 10.0, 100.0])
        pos = [round(rng.random() * quantum) / quantum for _ in range(n_pos)]
        neg = [round(rng.random() * quantum) / quantum for _ in range(n_neg)]
        polarity = rng.choice(["likelihood", "distance"])
        roc = build_roc(_records(pos, neg), polarity)
        for point in roc.finite_points:
            assert (point.far, point.frr) == brute_rates(pos, neg, point.threshold, polarity)


# --- eer_threshold --------------------------------------------------------


def test_eer_separable_returns_gap_midpoint():
    roc = build_roc(_records([0.9, 0.8], [0.1, 0.2]), "likelihood")
    cal = eer_threshold(roc)
    assert cal.threshold == pytest.approx(0.5)  # midpoint of (0.2, 0.8)
    assert cal.far_at_threshold == 0.0 and cal.frr_at_threshold == 0.0


def test_eer_separable_distance_polarity():
    roc = build_roc(_records([0.1, 0.2], [0.8, 0.9]), "distance")
    cal = eer_threshold(roc)
    assert cal.threshold == pytest.approx(0.5)  # midpoint of [0.2, 0.8)
    assert cal.far_at_threshold == 0.0 and cal.frr_at_threshold == 0.0


def test_eer_exact_crossing_returned_unmodified():
    roc = build_roc(_records([0.2, 0.8], [0.4, 0.6]), "likelihood")
    cal = eer_threshold(roc)
    assert cal.threshold == 0.6
    assert cal.far_at_threshold == 0.5 and cal.frr_at_threshold == 0.5


def test_eer_interpolates_between_brackets():
    roc = build_roc(_records([0.4, 0.6], [0.5]), "likelihood")
    cal = eer_threshold(roc)
    assert cal.threshold == pytest.approx(0.55)
    assert cal.far_at_threshold == pytest.approx(0.5)
    assert cal.frr_at_threshold == pytest.approx(0.5)


def test_eer_degenerate_equal_scores_warns(caplog):
    with caplog.at_level("WARNING"):
        cal = eer_threshold(build_roc(_records([0.6], [0.6]), "likelihood"))
    assert cal.threshold == 0.6
    assert cal.far_at_threshold == 0.5 and cal.frr_at_threshold == 0.5
    assert any("degenerate" in r.message for r in caplog.records)


def test_eer_matches_exhaustive_sweep_oracle():
    rng = random.Random(4)
    for trial in range(300):
        n_pos = rng.randint(2, 60)
        n_neg = rng.randint(2, 60)
        quantum = rng.choice([4.0, 20.0, 1000.0])
        lo, hi = rng.choice([(0.0, 1.0), (0.3, 0.9)])
        pos = [round(rng.uniform(lo, 1.0) * quantum) / quantum for _ in range(n_pos)]
        neg = [round(rng.uniform(0.0, hi) * quantum) / quantum for _ in range(n_neg)]
        polarity = rng.choice(["likelihood", "distance"])
        if polarity == "distance":
            pos, neg = neg, pos  # positives should sit low on a distance axis
        cal = eer_threshold(build_roc(_records(pos, neg), polarity))
        assert abs(cal.far_at_threshold - cal.frr_at_threshold) < 1e-12

        grid = sorted(set(pos) | set(neg))
        gaps = [abs(np.subtract(*brute_rates(pos, neg, t, polarity))) for t in grid]
        best = min(gaps)
        windows = []
        for i, gap in enumerate(gaps):
            if gap == best:
                lo_t = grid[i - 1] if i > 0 else float("-inf")
                hi_t = grid[i + 1] if i + 1 < len(grid) else float("inf")
                windows.append((lo_t, hi_t))
        assert any(lo_t <= cal.threshold <= hi_t for lo_t, hi_t in windows), (
            trial,
            cal.threshold,
            windows,
        )


# --- far_cap_threshold ----------------------------------------------------


def test_far_cap_separable_sits_just_below_negatives():
    pos = [0.1, 0.3, 0.75]
    neg = [0.8, 0.85, 0.9]
    cal = far_cap_threshold(build_roc(_records(pos, neg), "distance"), cap=0.05)
    assert cal.threshold == 0.75
    assert cal.far_at_threshold == 0.0


def test_far_cap_admits_five_percent_of_hundred():
    rng = random.Random(5)
    neg = sorted(rng.uniform(0.3, 1.0) for _ in range(100))
    pos = [rng.uniform(0.0, 0.25) for _ in range(40)]
    cal = far_cap_threshold(build_roc(_records(pos, neg), "distance"), cap=0.05)
    assert cal.threshold == neg[4]  # the 5th-smallest negative distance
    assert cal.far_at_threshold == pytest.approx(0.05)


def test_far_cap_ten_negatives_admit_none():
    rng = random.Random(6)
    neg = sorted(rng.uniform(0.5, 1.0) for _ in range(10))
    pos = [rng.uniform(0.0, 0.4) for _ in range(10)]
    cal = far_cap_threshold(build_roc(_records(pos, neg), "distance"), cap=0.05)
    assert cal.threshold < neg[0]  # floor(0.05 * 10) = 0 accepts allowed
    assert cal.far_at_threshold == 0.0


def test_far_cap_falls_back_to_reject_everything(caplog):
    # smallest distinct score is a negative: every threshold exceeds the cap
    records = _records([0.5, 0.9], [0.1, 0.2, 0.3])
    with caplog.at_level("WARNING"):
        cal = far_cap_threshold(build_roc(records, "distance"), cap=0.05)
    assert cal.threshold == float("-inf")
    assert cal.far_at_threshold == 0.0 and cal.frr_at_threshold == 1.0
    assert any("rejecting every pair" in r.message for r in caplog.records)


def test_far_cap_requires_distance_polarity_and_valid_cap():
    roc = build_roc(_records([0.9], [0.1]), "likelihood")
    with pytest.raises(ValueError, match="distance"):
        far_cap_threshold(roc, cap=0.05)
    roc = build_roc(_records([0.1], [0.9]), "distance")
    with pytest.raises(ValueError, match="cap"):
        far_cap_threshold(roc, cap=0.0)


def test_far_cap_recount_and_oracle_fuzz():
    rng = random.Random(7)
    for trial in range(1000):
        n_pos = rng.randint(1, 60)
        n_neg = rng.randint(1, 60)
        quantum = rng.choice([8.0, 1000.0])
        pos = [round(rng.uniform(0.0, 0.7) * quantum) / quantum for _ in range(n_pos)]
        neg = [round(rng.uniform(0.2, 1.0) * quantum) / quantum for _ in range(n_neg)]
        cap = rng.choice([0.01, 0.05, 0.1, 0.25])
        cal = far_cap_threshold(build_roc(_records(pos, neg), "distance"), cap)

        recounted = sum(1 for s in neg if s <= cal.threshold) / len(neg)
        assert recounted <= cap
        assert recounted == cal.far_at_threshold or cal.threshold == float("-inf")

        grid = sorted(set(pos) | set(neg))
        admissible = [t for t in grid if sum(1 for s in neg if s <= t) / len(neg) <= cap]
        expected = max(admissible) if admissible else float("-inf")
        assert cal.threshold == expected


def test_far_cap_monotone_in_cap():
    rng = random.Random(8)
    pos = [rng.uniform(0.0, 0.6) for _ in range(40)]
    neg = [rng.uniform(0.3, 1.0) for _ in range(40)]
    roc = build_roc(_records(pos, neg), "distance")
    thresholds = [far_cap_threshold(roc, cap).threshold for cap in (0.02, 0.05, 0.1, 0.2, 0.4)]
    assert thresholds == sorted(thresholds)


# --- ThresholdCalibrator estimator -----------------------------------------


def test_calibrator_fit_predict_likelihood():
    scores = [0.9, 0.8, 0.1, 0.2]
    labels = ["pos", "pos", "neg", "neg"]
    calibrator = ThresholdCalibrator(method="eer").fit(scores, labels)
    assert calibrator.threshold_ == pytest.approx(0.5)
    assert calibrator.far_ == 0.0 and calibrator.frr_ == 0.0
    assert list(calibrator.predict([0.6, 0.4])) == [True, False]


def test_calibrator_far_cap_distance():
    scores = [0.1, 0.2, 0.8, 0.9]
    labels = [1, 1, 0, 0]
    calibrator = ThresholdCalibrator(method="far-cap", polarity="distance", cap=0.05)
    calibrator.fit(scores, labels)
    assert calibrator.threshold_ == 0.2
    assert list(calibrator.predict([0.15, 0.5])) == [True, False]


def test_calibrator_get_params_round_trip():
    calibrator = ThresholdCalibrator(method="far_cap", polarity="distance", cap=0.1)
    clone = ThresholdCalibrator(**calibrator.get_params())
    assert clone.get_params() == calibrator.get_params()


def test_calibrator_requires_fit_before_predict():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        ThresholdCalibrator().predict([0.5])


def test_calibrator_rejects_bad_inputs():
    with pytest.raises(ValueError, match="label"):
        ThresholdCalibrator().fit([0.5, 0.6], ["pos", "maybe"])
    with pytest.raises(ValueError, match="scores"):
        ThresholdCalibrator().fit([0.5, 0.6], ["pos"])
    with pytest.raises(ValueError, match="method"):
        ThresholdCalibrator(method="auc").fit([0.5, 0.6], ["pos", "neg"])
