"""Data model, parsing, validation, and chunk merging for audio annotations.

An atomic annotation describes one audio file on four parallel tracks
(speech, sound events, music, background) plus a summary and a duration.
The on-disk form is JSON:

    {"summary": "...", "duration": "MM:SS",
     "tracks": {
       "speech":     [{"start": "MM:SS", "end": "MM:SS",
                       "speaker_attr": "...", "content": "...",
                       "transcription": "..."}],
       "events":     [{"start": "MM:SS", "end": "MM:SS", "description": "..."}],
       "music":      [...],
       "background": [...]}}

Task instance files carry one benchmark split; see docs/formats.md for the
published schema.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from typing import Any, Sequence

from .errors import MergeError, ParseError, RangeError, SchemaError
from .timeline import (
    Interval,
    TimePoint,
    format_timestamp,
    parse_timestamp,
)

EVENT_TRACKS = ("events", "music", "background")
ALL_TRACKS = ("speech",) + EVENT_TRACKS

# Chunk-seam entries closer than this with identical text are one event.
COALESCE_TOLERANCE_MS = 500


class TaskKind(enum.Enum):
    DAC = "dac"
    TAG = "tag"
    TAC = "tac"


class ViolationKind(enum.Enum):
    OUT_OF_RANGE = "OutOfRange"
    INVERTED_INTERVAL = "InvertedInterval"
    EMPTY_FIELD = "EmptyField"
    UNSORTED_TRACK = "UnsortedTrack"


@dataclass(frozen=True)
class ValidationViolation:
    kind: ViolationKind
    location: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind.value} at {self.location}: {self.detail}"


@dataclass(frozen=True)
class SpeechSegment:
    interval: Interval
    speaker_attr: str
    content: str
    transcription: str


@dataclass(frozen=True)
class TrackEvent:
    interval: Interval
    description: str


@dataclass(frozen=True)
class AnnotationSet:
    summary: str
    duration: TimePoint
    speech: tuple[SpeechSegment, ...] = ()
    events: tuple[TrackEvent, ...] = ()
    music: tuple[TrackEvent, ...] = ()
    background: tuple[TrackEvent, ...] = ()

    def track(self, name: str) -> tuple:
        if name not in ALL_TRACKS:
            raise KeyError(name)
        return getattr(self, name)


@dataclass(frozen=True)
class TaskInstance:
    """One DAC, TAG, or TAC benchmark problem.

    ground_truth is a list of (Interval, caption) for DAC, an Interval for
    TAG, and a caption string for TAC.
    """

    instance_id: str
    task_kind: TaskKind
    audio_ref: str
    duration: TimePoint
    query: str | None = None
    target_interval: Interval | None = None
    ground_truth: Any = None
    language: str | None = None


def _require(mapping: dict, key: str, path: str) -> Any:
    if key not in mapping:
        raise SchemaError(f"{path}: missing required key {key!r}")
    return mapping[key]


def _parse_ts(value: Any, path: str) -> TimePoint:
    """Timestamps are MM:SS strings; bare numbers are fractional seconds."""
    if isinstance(value, str):
        try:
            return parse_timestamp(value)
        except (ParseError, RangeError) as exc:
            raise type(exc)(f"{path}: {exc}") from exc
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if value < 0:
            raise RangeError(f"{path}: negative timestamp {value}")
        return TimePoint.from_seconds(float(value))
    raise ParseError(f"{path}: timestamp must be 'MM:SS' or seconds, got {value!r}")


def _parse_entry_interval(entry: dict, path: str) -> Interval:
    start = _parse_ts(_require(entry, "start", path), f"{path}.start")
    end = _parse_ts(_require(entry, "end", path), f"{path}.end")
    return Interval(start, end)


def _load_document(document: str | dict, what: str) -> dict:
    if isinstance(document, str):
        try:
            loaded = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{what} is not valid JSON: {exc}") from exc
    else:
        loaded = document
    if not isinstance(loaded, dict):
        raise SchemaError(f"{what} must be a JSON object")
    return loaded


def parse_annotation(document: str | dict) -> AnnotationSet:
    """Parse an atomic-annotation document.

    Missing optional tracks become empty lists. Inverted or out-of-range
    intervals parse successfully and are reported by validate_annotation.
    """
    doc = _load_document(document, "annotation document")
    summary = _require(doc, "summary", "annotation")
    duration = _parse_ts(_require(doc, "duration", "annotation"), "annotation.duration")
    tracks = _require(doc, "tracks", "annotation")
    if not isinstance(tracks, dict):
        raise SchemaError("annotation.tracks must be an object")

    speech = []
    for i, entry in enumerate(tracks.get("speech", [])):
        path = f"tracks.speech[{i}]"
        speech.append(
            SpeechSegment(
                interval=_parse_entry_interval(entry, path),
                speaker_attr=str(entry.get("speaker_attr", "")),
                content=str(entry.get("content", "")),
                transcription=str(_require(entry, "transcription", path)),
            )
        )

    event_tracks: dict[str, list[TrackEvent]] = {}
    for track_name in EVENT_TRACKS:
        entries = []
        for i, entry in enumerate(tracks.get(track_name, [])):
            path = f"tracks.{track_name}[{i}]"
            entries.append(
                TrackEvent(
                    interval=_parse_entry_interval(entry, path),
                    description=str(_require(entry, "description", path)),
                )
            )
        event_tracks[track_name] = entries

    return AnnotationSet(
        summary=str(summary),
        duration=duration,
        speech=tuple(speech),
        events=tuple(event_tracks["events"]),
        music=tuple(event_tracks["music"]),
        background=tuple(event_tracks["background"]),
    )


def serialize_annotation(a: AnnotationSet) -> str:
    """Canonical JSON form; inverse of parse_annotation on whole-second data."""

    def entry(item) -> dict:
        base = {
            "start": format_timestamp(item.interval.start),
            "end": format_timestamp(item.interval.end),
        }
        if isinstance(item, SpeechSegment):
            base.update(
                speaker_attr=item.speaker_attr,
                content=item.content,
                transcription=item.transcription,
            )
        else:
            base["description"] = item.description
        return base

    doc = {
        "summary": a.summary,
        "duration": format_timestamp(a.duration),
        "tracks": {name: [entry(e) for e in a.track(name)] for name in ALL_TRACKS},
    }
    return json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def validate_annotation(a: AnnotationSet) -> list[ValidationViolation]:
    """Check every AnnotationSet invariant; violations are data, not errors."""
    violations: list[ValidationViolation] = []
    for track_name in ALL_TRACKS:
        entries = a.track(track_name)
        prev_start: TimePoint | None = None
        for i, item in enumerate(entries):
            loc = f"{track_name}[{i}]"
            interval = item.interval
            if not interval.is_valid:
                violations.append(
                    ValidationViolation(
                        ViolationKind.INVERTED_INTERVAL,
                        loc,
                        f"start {interval.start} after end {interval.end}",
                    )
                )
            elif interval.end > a.duration or interval.start > a.duration:
                violations.append(
                    ValidationViolation(
                        ViolationKind.OUT_OF_RANGE,
                        loc,
                        f"interval {interval} exceeds duration "
                        f"{format_timestamp(a.duration)}",
                    )
                )
            text = (
                item.transcription
                if isinstance(item, SpeechSegment)
                else item.description
            )
            text_field = (
                "transcription" if isinstance(item, SpeechSegment) else "description"
            )
            if not text.strip():
                violations.append(
                    ValidationViolation(
                        ViolationKind.EMPTY_FIELD, loc, f"empty {text_field}"
                    )
                )
            if prev_start is not None and interval.start < prev_start:
                violations.append(
                    ValidationViolation(
                        ViolationKind.UNSORTED_TRACK,
                        loc,
                        f"start {interval.start} precedes previous entry",
                    )
                )
            prev_start = interval.start
    return violations


def _same_text(a, b) -> bool:
    if isinstance(a, SpeechSegment):
        return (
            a.speaker_attr == b.speaker_attr
            and a.content == b.content
            and a.transcription == b.transcription
        )
    return a.description == b.description


def _coalesce(entries: list) -> list:
    merged: list = []
    for item in entries:
        if merged:
            prev = merged[-1]
            gap = item.interval.start.millis - prev.interval.end.millis
            if gap <= COALESCE_TOLERANCE_MS and _same_text(prev, item):
                new_end = max(prev.interval.end, item.interval.end)
                merged[-1] = replace(
                    prev, interval=Interval(prev.interval.start, new_end)
                )
                continue
        merged.append(item)
    return merged


def merge_chunks(
    chunks: Sequence[tuple[TimePoint, AnnotationSet]],
) -> AnnotationSet:
    """Merge per-chunk annotations into one full-audio annotation.

    Intervals shift by their chunk offset, tracks are concatenated and
    re-sorted, and same-track entries that abut within 500 ms of a seam with
    identical text become one entry. Entries differing in text are never
    fused.
    """
    if not chunks:
        raise MergeError("no chunks to merge")
    for i in range(1, len(chunks)):
        prev_off, prev_set = chunks[i - 1]
        off = chunks[i][0]
        if off <= prev_off:
            raise MergeError(
                f"chunk offsets must be strictly increasing "
                f"({off.millis} ms after {prev_off.millis} ms)"
            )
        if prev_off.millis + prev_set.duration.millis > off.millis:
            raise MergeError(
                f"chunk at {prev_off.millis} ms (duration "
                f"{prev_set.duration.millis} ms) overlaps chunk at {off.millis} ms"
            )

    merged_tracks: dict[str, list] = {name: [] for name in ALL_TRACKS}
    for offset, annotation in chunks:
        for name in ALL_TRACKS:
            for item in annotation.track(name):
                merged_tracks[name].append(
                    replace(item, interval=item.interval.shift(offset))
                )
    for name in ALL_TRACKS:
        merged_tracks[name].sort(key=lambda e: (e.interval.start, e.interval.end))
        merged_tracks[name] = _coalesce(merged_tracks[name])

    last_offset, last_set = chunks[-1]
    summary = " ".join(s for _, a in chunks if (s := a.summary.strip()))
    return AnnotationSet(
        summary=summary,
        duration=TimePoint(last_offset.millis + last_set.duration.millis),
        speech=tuple(merged_tracks["speech"]),
        events=tuple(merged_tracks["events"]),
        music=tuple(merged_tracks["music"]),
        background=tuple(merged_tracks["background"]),
    )


def _check_within(interval: Interval, duration: TimePoint, path: str) -> None:
    if not interval.is_valid:
        raise RangeError(f"{path}: interval start after end")
    if interval.end > duration:
        raise RangeError(
            f"{path}: interval {interval} exceeds duration {format_timestamp(duration)}"
        )


def parse_task_instances(document: str | dict | list) -> list[TaskInstance]:
    """Parse a benchmark split file into TaskInstance values.

    Accepts either ``{"instances": [...]}`` or a bare JSON list. Every
    instance is checked against the per-task field contract; the first
    offending instance is rejected with its path.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"task instance document is not valid JSON: {exc}") from exc
    if isinstance(document, dict):
        raw = _require(document, "instances", "document")
    else:
        raw = document
    if not isinstance(raw, list):
        raise SchemaError("instances must be a list")

    instances: list[TaskInstance] = []
    for i, entry in enumerate(raw):
        path = f"instances[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: instance must be an object")
        instance_id = str(_require(entry, "id", path))
        task_raw = str(_require(entry, "task", path)).lower()
        try:
            task = TaskKind(task_raw)
        except ValueError:
            raise SchemaError(f"{path}: unknown task {task_raw!r}") from None
        audio_ref = str(_require(entry, "audio", path))
        duration = _parse_ts(_require(entry, "duration", path), f"{path}.duration")
        language = entry.get("language")

        query: str | None = None
        target: Interval | None = None
        ground_truth: Any
        if task is TaskKind.TAG:
            query = str(_require(entry, "query", path))
            if not query.strip():
                raise SchemaError(f"{path}: TAG query must be non-empty")
            iv = _require(entry, "interval", path)
            ground_truth = _parse_entry_interval(iv, f"{path}.interval")
            _check_within(ground_truth, duration, f"{path}.interval")
        elif task is TaskKind.TAC:
            iv = _require(entry, "interval", path)
            target = _parse_entry_interval(iv, f"{path}.interval")
            _check_within(target, duration, f"{path}.interval")
            ground_truth = str(_require(entry, "caption", path))
            if not ground_truth.strip():
                raise SchemaError(f"{path}: TAC caption must be non-empty")
        else:
            captions_raw = _require(entry, "captions", path)
            if not isinstance(captions_raw, list) or not captions_raw:
                raise SchemaError(f"{path}: DAC requires a non-empty captions list")
            captions: list[tuple[Interval, str]] = []
            for j, cap in enumerate(captions_raw):
                cap_path = f"{path}.captions[{j}]"
                interval = _parse_entry_interval(cap, cap_path)
                _check_within(interval, duration, cap_path)
                text = str(_require(cap, "caption", cap_path))
                captions.append((interval, text))
            ground_truth = captions

        instances.append(
            TaskInstance(
                instance_id=instance_id,
                task_kind=task,
                audio_ref=audio_ref,
                duration=duration,
                query=query,
                target_interval=target,
                ground_truth=ground_truth,
                language=str(language) if language is not None else None,
            )
        )
    return instances


def parse_predictions(document: str | dict | list, task: TaskKind) -> dict[str, Any]:
    """Parse a predictions file into an id-to-payload map.

    Payloads are an Interval or None for TAG, a caption list for DAC, and a
    caption string or None for TAC. A null or absent payload means the model
    produced nothing usable for that sample.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"predictions document is not valid JSON: {exc}") from exc
    if isinstance(document, dict):
        raw = _require(document, "predictions", "document")
    else:
        raw = document
    if not isinstance(raw, list):
        raise SchemaError("predictions must be a list")

    predictions: dict[str, Any] = {}
    for i, entry in enumerate(raw):
        path = f"predictions[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{path}: prediction must be an object")
        pred_id = str(_require(entry, "id", path))
        if task is TaskKind.TAG:
            iv = entry.get("interval")
            predictions[pred_id] = (
                None if iv is None else _parse_entry_interval(iv, f"{path}.interval")
            )
        elif task is TaskKind.TAC:
            caption = entry.get("caption")
            predictions[pred_id] = None if caption is None else str(caption)
        else:
            captions_raw = entry.get("captions", [])
            if not isinstance(captions_raw, list):
                raise SchemaError(f"{path}: captions must be a list")
            captions = []
            for j, cap in enumerate(captions_raw):
                cap_path = f"{path}.captions[{j}]"
                captions.append(
                    (
                        _parse_entry_interval(cap, cap_path),
                        str(_require(cap, "caption", cap_path)),
                    )
                )
            predictions[pred_id] = captions
    return predictions
