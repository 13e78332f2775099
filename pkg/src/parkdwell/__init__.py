"""Per-car parking dwell-time estimation from per-space observation streams.

The pipeline mirrors a two-stage perception stack without requiring one:
a status backend decides occupied/empty per frame, a comparator backend
decides same-car/different-car per consecutive occupied pair, and the
tracking engine folds those answers into dwell episodes.  Calibration,
evaluation metrics and an error-injection simulator round out the toolkit.
"""

from .backends import (
    CarComparator,
    NoiseConfig,
    NoisyCarComparator,
    NoisyStatusClassifier,
    OracleCarComparator,
    OracleStatusClassifier,
    ScoredCarComparator,
    ScoredStatusClassifier,
    StatusClassifier,
)
from .calibration import (
    RocCurve,
    RocPoint,
    ThresholdCalibration,
    ThresholdCalibrator,
    build_roc,
    eer_threshold,
    far_cap_threshold,
)
from .io import (
    AnnotationError,
    ingest_annotations,
    load_scores,
    read_episodes,
    score_table,
    write_annotations,
    write_episodes,
)
from .metrics import (
    ComparisonKind,
    ComparisonRecord,
    EvalReport,
    HistogramBin,
    compute_metrics,
    dwell_histogram,
    evaluate_tracking,
    match_episodes,
)
from .pairs import (
    EvalPairs,
    PairManifestEntry,
    car_map,
    generate_epoch_pairs,
    generate_eval_pairs,
)
from .records import (
    GroundTruthStay,
    IngestSummary,
    PredictedEpisode,
    ScoreRecord,
    SpaceObservation,
    SpaceSequence,
    Status,
    derive_all_ground_truth,
    derive_ground_truth,
    pair_key,
    split_by_days,
    summarize_sequences,
)
from .simulate import (
    PRESETS,
    SimConfig,
    SweepResult,
    generate_lot,
    preset_config,
    run_simulation,
    sweep,
)
from .tracker import (
    DwellTimeTracker,
    EpisodeState,
    TrackingError,
    dwell_step,
    track_dataset,
    track_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "CarComparator",
    "ComparisonKind",
    "ComparisonRecord",
    "DwellTimeTracker",
    "EpisodeState",
    "EvalPairs",
    "EvalReport",
    "GroundTruthStay",
    "HistogramBin",
    "IngestSummary",
    "NoiseConfig",
    "NoisyCarComparator",
    "NoisyStatusClassifier",
    "OracleCarComparator",
    "OracleStatusClassifier",
    "PRESETS",
    "PairManifestEntry",
    "PredictedEpisode",
    "RocCurve",
    "RocPoint",
    "ScoreRecord",
    "ScoredCarComparator",
    "ScoredStatusClassifier",
    "SimConfig",
    "SpaceObservation",
    "SpaceSequence",
    "Status",
    "StatusClassifier",
    "SweepResult",
    "ThresholdCalibration",
    "ThresholdCalibrator",
    "TrackingError",
    "build_roc",
    "car_map",
    "compute_metrics",
    "derive_all_ground_truth",
    "derive_ground_truth",
    "dwell_histogram",
    "dwell_step",
    "eer_threshold",
    "evaluate_tracking",
    "far_cap_threshold",
    "generate_epoch_pairs",
    "generate_eval_pairs",
    "generate_lot",
    "ingest_annotations",
    "load_scores",
    "match_episodes",
    "pair_key",
    "preset_config",
    "read_episodes",
    "run_simulation",
    "score_table",
    "split_by_days",
    "summarize_sequences",
    "sweep",
    "track_dataset",
    "track_sequence",
    "write_annotations",
    "write_episodes",
]
