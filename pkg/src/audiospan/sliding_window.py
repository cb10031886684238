"""Chunked baseline drivers: 60-second windows with global timestamp remap.

Long audio is tiled into non-overlapping 60-second chunks (the last chunk
may be shorter). Dense captioning prompts every chunk and shifts each local
interval by the chunk offset; grounding walks chunks in order with a binary
detection prompt and stops at the first "yes"; targeted captioning skips
chunking entirely and crops the target interval. Baseline prompts ship as
versioned template files under ``audiospan/prompts``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from .annotations import TaskInstance, TaskKind
from .audio import AudioBuffer, crop_audio
from .errors import BackendError
from .timeline import Interval, TimePoint, format_timestamp, parse_timestamp

CHUNK_SECONDS = 60

SW_YES_RE = re.compile(r"^yes\s+\[(\d{1,3}:\d{2}) - (\d{1,3}:\d{2})\]$", re.IGNORECASE)
SW_NO_RE = re.compile(r"^no\b", re.IGNORECASE)


@dataclass(frozen=True)
class Chunk:
    index: int
    offset: TimePoint
    audio: AudioBuffer


def _prompt(name: str) -> str:
    return (
        resources.files("audiospan").joinpath("prompts", name).read_text("utf-8").strip()
    )


def chunk_audio(audio: AudioBuffer) -> list[Chunk]:
    """Tile the audio into 60-second chunks; concatenation is lossless."""
    if len(audio) == 0:
        raise ValueError("cannot chunk empty audio")
    stride = CHUNK_SECONDS * audio.sample_rate
    chunks = []
    index = 0
    while index * stride < len(audio):
        samples = audio.samples[index * stride:(index + 1) * stride]
        chunks.append(
            Chunk(
                index=index,
                offset=TimePoint(index * CHUNK_SECONDS * 1000),
                audio=AudioBuffer(samples.copy(), audio.sample_rate),
            )
        )
        index += 1
    return chunks


def _ask(backend, task: TaskKind, prompt: str, audio: AudioBuffer,
         hints: dict) -> str | None:
    """One-shot chunk inference; returns the answer text or None."""
    from .orchestrator import BackendRequest
    from .trajectory import AnswerTurn

    request = BackendRequest(
        task_kind=task,
        prompt=prompt,
        turns=(),
        audio=(("chunk", audio),),
        hints=hints,
    )
    turn = backend.generate(request)
    if isinstance(turn, AnswerTurn):
        return turn.text
    return None


def _parse_chunk_captions(
    text: str, chunk: Chunk, flags: list[str]
) -> list[tuple[Interval, str]]:
    try:
        entries = json.loads(text)
    except json.JSONDecodeError:
        flags.append(f"chunk {chunk.index}: unparseable caption output")
        return []
    if not isinstance(entries, list):
        flags.append(f"chunk {chunk.index}: caption output is not a list")
        return []
    chunk_ms = chunk.audio.duration.millis
    captions: list[tuple[Interval, str]] = []
    for j, entry in enumerate(entries):
        try:
            start = parse_timestamp(str(entry["start"]))
            end = parse_timestamp(str(entry["end"]))
            caption = str(entry["caption"])
        except Exception:
            flags.append(f"chunk {chunk.index}: caption entry {j} malformed")
            continue
        if start.millis >= chunk_ms:
            flags.append(f"chunk {chunk.index}: caption entry {j} lies beyond the chunk")
            continue
        if end.millis > chunk_ms:
            flags.append(
                f"chunk {chunk.index}: caption entry {j} end "
                f"{format_timestamp(end)} clipped to chunk length"
            )
            end = TimePoint(chunk_ms)
        if end < start:
            flags.append(f"chunk {chunk.index}: caption entry {j} inverted")
            continue
        captions.append((Interval(start, end).shift(chunk.offset), caption))
    return captions


def sw_dac(
    audio: AudioBuffer, backend
) -> tuple[list[tuple[Interval, str]], list[str]]:
    """Dense captioning over 60-second chunks with offset remapping.

    A chunk whose output cannot be parsed contributes nothing and is
    flagged; local intervals overrunning the chunk are clipped and flagged.
    """
    prompt = _prompt("sw_dac_instruction.txt")
    flags: list[str] = []
    captions: list[tuple[Interval, str]] = []
    for chunk in chunk_audio(audio):
        hints = {
            "mode": "sliding_window",
            "chunk_index": chunk.index,
            "chunk_offset_ms": chunk.offset.millis,
        }
        text = _ask(backend, TaskKind.DAC, prompt, chunk.audio, hints)
        if text is None:
            flags.append(f"chunk {chunk.index}: no caption answer")
            continue
        captions.extend(_parse_chunk_captions(text, chunk, flags))
    return captions, flags


def sw_tag(
    audio: AudioBuffer, query: str, backend
) -> tuple[Interval | None, list[str]]:
    """Binary detection per chunk; the first "yes" wins.

    Answers matching neither grammar count as "no" and are flagged; a "yes"
    interval overrunning its chunk is clipped to the chunk.
    """
    template = _prompt("sw_tag_detection.txt")
    flags: list[str] = []
    for chunk in chunk_audio(audio):
        hints = {
            "mode": "sliding_window",
            "chunk_index": chunk.index,
            "chunk_offset_ms": chunk.offset.millis,
        }
        text = _ask(backend, TaskKind.TAG, template.format(query=query), chunk.audio, hints)
        if text is None:
            flags.append(f"chunk {chunk.index}: no detection answer, treated as no")
            continue
        text = text.strip()
        yes = SW_YES_RE.match(text)
        if yes:
            start = parse_timestamp(yes.group(1))
            end = parse_timestamp(yes.group(2))
            chunk_ms = chunk.audio.duration.millis
            if end.millis > chunk_ms:
                flags.append(f"chunk {chunk.index}: detection end clipped to chunk length")
                end = TimePoint(chunk_ms)
            if start.millis > end.millis:
                flags.append(f"chunk {chunk.index}: inverted detection, treated as no")
                continue
            return Interval(start, end).shift(chunk.offset), flags
        if not SW_NO_RE.match(text):
            flags.append(
                f"chunk {chunk.index}: answer {text!r} matches neither grammar, treated as no"
            )
    return None, flags


def sw_tac(audio: AudioBuffer, target: Interval, backend) -> str:
    """Caption the target interval directly (no chunking)."""
    if not target.is_valid or target.end.millis > audio.duration.millis:
        raise ValueError("target interval must lie within the audio")
    clip = crop_audio(audio, target.start.millis / 1000.0, target.end.millis / 1000.0)
    text = _ask(
        backend,
        TaskKind.TAC,
        _prompt("sw_tac_caption.txt"),
        clip,
        {"mode": "sliding_window", "target_ms": [target.start.millis, target.end.millis]},
    )
    if text is None:
        raise BackendError("backend produced no caption for the target clip")
    return text


class ChunkOracleBackend:
    """Per-chunk oracle answering from an instance's ground truth; recovers
    the ground truth up to chunk-boundary splits."""

    supports_concurrent_sessions = True
    name = "chunk-oracle"

    def __init__(self, instance: TaskInstance):
        self.instance = instance

    def generate(self, request):
        from .trajectory import AnswerTurn

        offset_ms = int(request.hints.get("chunk_offset_ms", 0))
        chunk_ms = request.audio[0][1].duration.millis
        task = self.instance.task_kind
        if task is TaskKind.TAC:
            return AnswerTurn(self.instance.ground_truth)
        if task is TaskKind.TAG:
            gt: Interval = self.instance.ground_truth
            if offset_ms <= gt.start.millis < offset_ms + chunk_ms:
                local_start = gt.start.millis - offset_ms
                local_end = min(gt.end.millis - offset_ms, chunk_ms)
                text = (
                    f"yes [{format_timestamp(TimePoint(local_start))} - "
                    f"{format_timestamp(TimePoint(local_end))}]"
                )
                return AnswerTurn(text)
            return AnswerTurn("no")
        entries = []
        for iv, caption in self.instance.ground_truth:
            if not offset_ms <= iv.start.millis < offset_ms + chunk_ms:
                continue
            entries.append(
                {
                    "start": format_timestamp(TimePoint(iv.start.millis - offset_ms)),
                    "end": format_timestamp(
                        TimePoint(min(iv.end.millis - offset_ms, chunk_ms))
                    ),
                    "caption": caption,
                }
            )
        return AnswerTurn(json.dumps(entries, ensure_ascii=False))
