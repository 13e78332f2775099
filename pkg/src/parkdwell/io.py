"""File formats: annotation JSONL, score CSV, episode JSONL, manifest CSV.

Annotation files are JSON Lines, one observation per line, with fields
``camera_id, space_id, timestamp, status, car_id, image_ref`` (the last two
optional, omitted when absent) and lowercase status strings
``"occupied"``/``"empty"``.  Score files are CSV with header
``key,score[,label]``, label in {pos, neg}.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .records import (
    PredictedEpisode,
    ScoreRecord,
    SpaceObservation,
    SpaceSequence,
    Status,
)

PathLike = Union[str, Path]

ANNOTATION_FIELDS = ("camera_id", "space_id", "timestamp", "status", "car_id", "image_ref")
EPISODE_FIELDS = ("camera_id", "space_id", "start_ts", "end_ts", "dwell_seconds")


class AnnotationError(ValueError):
    """Malformed annotation input; carries the offending line when known."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def _parse_line(raw: str, line_no: int) -> SpaceObservation:
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"invalid JSON ({exc.msg})", line_no) from exc
    if not isinstance(data, dict):
        raise AnnotationError("record is not a JSON object", line_no)
    unknown = set(data) - set(ANNOTATION_FIELDS)
    if unknown:
        raise AnnotationError(f"unknown field(s) {sorted(unknown)}", line_no)
    missing = {"camera_id", "space_id", "timestamp", "status"} - set(data)
    if missing:
        raise AnnotationError(f"missing field(s) {sorted(missing)}", line_no)
    status_raw = data["status"]
    if status_raw not in (Status.OCCUPIED.value, Status.EMPTY.value):
        raise AnnotationError(f"status must be occupied or empty, got {status_raw!r}", line_no)
    for name in ("camera_id", "space_id"):
        if not isinstance(data[name], str):
            raise AnnotationError(f"{name} must be a string, got {data[name]!r}", line_no)
    for name in ("car_id", "image_ref"):
        if name in data and not isinstance(data[name], (str, type(None))):
            raise AnnotationError(f"{name} must be a string or null, got {data[name]!r}", line_no)
    try:
        return SpaceObservation(
            camera_id=data["camera_id"],
            space_id=data["space_id"],
            timestamp=data["timestamp"],
            status=Status(status_raw),
            car_id=data.get("car_id"),
            image_ref=data.get("image_ref"),
        )
    except ValueError as exc:
        raise AnnotationError(str(exc), line_no) from exc


def _infer_interval(groups: dict, path: PathLike) -> int:
    deltas = [
        cur.timestamp - prev.timestamp
        for group in groups.values()
        for prev, cur in zip(group, group[1:])
    ]
    if not deltas:
        raise AnnotationError(
            f"{path}: cannot infer sampling interval from single-observation spaces; "
            "pass k_seconds explicitly"
        )
    return min(deltas)


def ingest_annotations(
    path: PathLike,
    k_seconds: Optional[int] = None,
    split_on_gap: bool = True,
) -> list[SpaceSequence]:
    """Read and validate an annotation file into per-space sequences.

    Observations are grouped by (camera, space) and sorted by timestamp.
    When ``k_seconds`` is None the interval is inferred as the smallest
    consecutive timestamp delta in the file.  A timestamp jump of an exact
    multiple m*k with m > 1 splits the sequence (``split_on_gap=True``) or is
    an error; a non-multiple jump is always an error.
    """
    path = Path(path)
    groups: dict[tuple[str, str], list[SpaceObservation]] = {}
    seen: dict[tuple[str, str, int], int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            obs = _parse_line(raw, line_no)
            ident = (obs.camera_id, obs.space_id, obs.timestamp)
            if ident in seen:
                raise AnnotationError(
                    f"duplicate observation {obs.camera_id}/{obs.space_id}/"
                    f"{obs.timestamp} (first seen on line {seen[ident]})",
                    line_no,
                )
            seen[ident] = line_no
            groups.setdefault((obs.camera_id, obs.space_id), []).append(obs)

    for group in groups.values():
        group.sort(key=lambda o: o.timestamp)
    k = k_seconds if k_seconds is not None else _infer_interval(groups, path)
    if k <= 0:
        raise AnnotationError(f"k_seconds must be positive, got {k}")

    sequences: list[SpaceSequence] = []
    for (camera, space), group in sorted(groups.items()):
        chunk: list[SpaceObservation] = [group[0]]
        for prev, cur in zip(group, group[1:]):
            delta = cur.timestamp - prev.timestamp
            if delta % k != 0:
                raise AnnotationError(
                    f"{camera}/{space}: timestamp jump {prev.timestamp} -> "
                    f"{cur.timestamp} is not a multiple of k={k}"
                )
            if delta > k:
                if not split_on_gap:
                    raise AnnotationError(
                        f"{camera}/{space}: gap of {delta} s at {prev.timestamp} -> "
                        f"{cur.timestamp} (k={k}, splitting disabled)"
                    )
                sequences.append(
                    SpaceSequence(camera, space, k, tuple(chunk))
                )
                chunk = [cur]
            else:
                chunk.append(cur)
        sequences.append(SpaceSequence(camera, space, k, tuple(chunk)))
    sequences.sort(key=lambda s: (s.camera_id, s.space_id, s.observations[0].timestamp))
    return sequences


def write_annotations(sequences: Iterable[SpaceSequence], path: PathLike) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for seq in sequences:
            for obs in seq.observations:
                record = {
                    "camera_id": obs.camera_id,
                    "space_id": obs.space_id,
                    "timestamp": obs.timestamp,
                    "status": obs.status.value,
                }
                if obs.car_id is not None:
                    record["car_id"] = obs.car_id
                if obs.image_ref is not None:
                    record["image_ref"] = obs.image_ref
                fh.write(json.dumps(record) + "\n")


def load_scores(path: PathLike) -> list[ScoreRecord]:
    """Read a ``key,score[,label]`` CSV into score records."""
    path = Path(path)
    records: list[ScoreRecord] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        normalized = [h.strip() for h in header] if header else []
        if normalized not in (["key", "score"], ["key", "score", "label"]):
            raise ValueError(f"{path}: expected CSV header 'key,score[,label]', got {header!r}")
        has_label = len(normalized) == 3
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2 + int(has_label):
                raise ValueError(f"{path} line {line_no}: expected {2 + int(has_label)} columns")
            try:
                score = float(row[1])
            except ValueError as exc:
                raise ValueError(f"{path} line {line_no}: bad score {row[1]!r}") from exc
            label = row[2].strip() if has_label else None
            try:
                records.append(ScoreRecord(key=row[0], score=score, label=label))
            except ValueError as exc:
                raise ValueError(f"{path} line {line_no}: {exc}") from exc
    return records


def score_table(records: Iterable[ScoreRecord]) -> dict[str, float]:
    return {r.key: r.score for r in records}


def write_scores(records: Iterable[ScoreRecord], path: PathLike) -> None:
    records = list(records)
    has_label = any(r.label is not None for r in records)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key", "score", "label"] if has_label else ["key", "score"])
        for r in records:
            row = [r.key, repr(r.score)]
            if has_label:
                row.append(r.label or "")
            writer.writerow(row)


def write_episodes(episodes: Iterable[PredictedEpisode], path: PathLike) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for ep in episodes:
            fh.write(
                json.dumps(
                    {
                        "camera_id": ep.camera_id,
                        "space_id": ep.space_id,
                        "start_ts": ep.start_ts,
                        "end_ts": ep.end_ts,
                        "dwell_seconds": ep.dwell_seconds,
                    }
                )
                + "\n"
            )


def read_episodes(path: PathLike) -> list[PredictedEpisode]:
    episodes: list[PredictedEpisode] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                data = json.loads(raw)
                episodes.append(PredictedEpisode(**{k: data[k] for k in EPISODE_FIELDS}))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path} line {line_no}: bad episode record ({exc})") from exc
    return episodes


def _json_number(value: float):
    if math.isfinite(value):
        return value
    return "-inf" if value < 0 else "inf"


def write_calibration(
    path: PathLike,
    method: str,
    threshold: float,
    far: float,
    frr: float,
    polarity: str,
    cap: Optional[float] = None,
    source_file: Optional[str] = None,
) -> None:
    doc = {
        "method": method,
        "threshold": _json_number(threshold),
        "far": far,
        "frr": frr,
        "cap": cap,
        "source_file": source_file,
        "polarity": polarity,
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_calibration(path: PathLike) -> dict:
    with Path(path).open("r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if isinstance(doc.get("threshold"), str):
        doc["threshold"] = float(doc["threshold"])
    return doc
