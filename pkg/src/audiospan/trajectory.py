"""Parsing, validation, and serialization of tool-use reasoning trajectories.

A trajectory document is a JSON object with a ``messages`` list. The first
message may be a user prompt; assistant messages either carry a ``tool_call``
record (name ``crop_audio`` with ``start_sec``/``end_sec`` arguments) or a
``content`` string mixing ``<global_timeline>...</global_timeline>`` and
``<think>...</think>`` blocks with plain answer text; ``tool_response``
messages carry the tool output. Timeline lines read ``[MM:SS - MM:SS] text``,
dense-caption answer lines read ``[MM:SS - MM:SS]: text``, and a grounding
answer is exactly ``[MM:SS - MM:SS]``.

Format validation enforces the session schema: alternation (a think before
each tool call, a tool response right after it), the four-step tool budget,
and the task answer grammar. Violations are returned as data; soft limits
(timeline segment count 2-5) surface as warnings that do not fail validation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Union

from .annotations import TaskKind
from .errors import ParseError, RangeError, SchemaError
from .timeline import (
    INTERVAL_TEXT_RE,
    Interval,
    TimePoint,
    format_interval,
    format_timestamp,
    parse_timestamp,
)

MAX_STEPS_DEFAULT = 4
TOOL_NAME = "crop_audio"
CROP_SLACK_MS = 50

TIMELINE_OPEN, TIMELINE_CLOSE = "<global_timeline>", "</global_timeline>"
THINK_OPEN, THINK_CLOSE = "<think>", "</think>"

TIMELINE_LINE_RE = re.compile(r"^\[(\d{1,3}:\d{2}) - (\d{1,3}:\d{2})\]\s*(.*)$")
CAPTION_LINE_RE = re.compile(r"^\[(\d{1,3}:\d{2}) - (\d{1,3}:\d{2})\]:\s*(\S.*)$")

TIMELINE_SEGMENTS_MIN, TIMELINE_SEGMENTS_MAX = 2, 5


@dataclass(frozen=True)
class TimelineSegment:
    interval: Interval
    description: str


@dataclass(frozen=True)
class GlobalTimeline:
    segments: tuple[TimelineSegment, ...]

    def __len__(self) -> int:
        return len(self.segments)


@dataclass(frozen=True)
class ThinkTurn:
    text: str


@dataclass(frozen=True)
class ToolCallTurn:
    start_sec: float
    end_sec: float
    name: str = TOOL_NAME


@dataclass(frozen=True)
class ToolResponseTurn:
    content: str


@dataclass(frozen=True)
class AnswerTurn:
    text: str


@dataclass(frozen=True)
class TimelineTurn:
    timeline: GlobalTimeline


Turn = Union[ThinkTurn, ToolCallTurn, ToolResponseTurn, AnswerTurn, TimelineTurn]


@dataclass(frozen=True)
class FormatViolation:
    code: str
    location: str
    detail: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.code} at {self.location}: {self.detail}"


@dataclass
class Trajectory:
    task_kind: TaskKind | None
    turns: list[Turn]
    prompt: str = ""

    @property
    def step_count(self) -> int:
        return sum(1 for t in self.turns if isinstance(t, ToolCallTurn))

    @property
    def answer_turns(self) -> list[AnswerTurn]:
        return [t for t in self.turns if isinstance(t, AnswerTurn)]

    @property
    def timeline(self) -> GlobalTimeline | None:
        for t in self.turns:
            if isinstance(t, TimelineTurn):
                return t.timeline
        return None

    @property
    def dac_answer_shape(self) -> str:
        """Whether dense-caption answers were interleaved with tool calls or
        emitted as one terminal block."""
        return "interleaved" if len(self.answer_turns) > 1 else "terminal"


def _normalize_text(text: str) -> str:
    lines = [line.strip() for line in text.splitlines()]
    return "\n".join(line for line in lines if line)


def _parse_timeline_block(body: str) -> GlobalTimeline:
    segments = []
    for line in _normalize_text(body).splitlines():
        match = TIMELINE_LINE_RE.match(line)
        if match is None:
            raise ParseError(f"timeline line {line!r} does not match '[MM:SS - MM:SS] text'")
        interval = Interval(parse_timestamp(match.group(1)), parse_timestamp(match.group(2)))
        segments.append(TimelineSegment(interval, match.group(3).strip()))
    return GlobalTimeline(tuple(segments))


def _scan_content(content: str, message_index: int) -> list[Turn]:
    """Split an assistant content string into timeline / think / answer turns
    in document order."""
    turns: list[Turn] = []
    pos = 0
    text_parts: list[str] = []

    def flush_text() -> None:
        joined = _normalize_text("\n".join(text_parts))
        text_parts.clear()
        if joined:
            turns.append(AnswerTurn(joined))

    while pos < len(content):
        next_tag = None
        next_at = len(content)
        for open_tag, close_tag in ((TIMELINE_OPEN, TIMELINE_CLOSE), (THINK_OPEN, THINK_CLOSE)):
            at = content.find(open_tag, pos)
            if at != -1 and at < next_at:
                next_tag, next_at = (open_tag, close_tag), at
        if next_tag is None:
            text_parts.append(content[pos:])
            break
        text_parts.append(content[pos:next_at])
        open_tag, close_tag = next_tag
        body_start = next_at + len(open_tag)
        close_at = content.find(close_tag, body_start)
        if close_at == -1:
            offset = len(content[:next_at].encode("utf-8"))
            raise ParseError(
                f"messages[{message_index}]: unclosed {open_tag} tag at byte offset {offset}"
            )
        flush_text()
        body = content[body_start:close_at]
        if open_tag == TIMELINE_OPEN:
            turns.append(TimelineTurn(_parse_timeline_block(body)))
        else:
            turns.append(ThinkTurn(_normalize_text(body)))
        pos = close_at + len(close_tag)
    flush_text()
    return turns


def _parse_tool_call(record: dict, message_index: int) -> ToolCallTurn:
    path = f"messages[{message_index}].tool_call"
    name = record.get("name")
    if name != TOOL_NAME:
        raise SchemaError(f"{path}: unknown tool {name!r} (only {TOOL_NAME!r} is defined)")
    arguments = record.get("arguments")
    if not isinstance(arguments, dict):
        raise SchemaError(f"{path}: missing arguments object")
    values = {}
    for key in ("start_sec", "end_sec"):
        raw = arguments.get(key)
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ParseError(f"{path}.arguments.{key}: expected a number, got {raw!r}")
        values[key] = float(raw)
    return ToolCallTurn(start_sec=values["start_sec"], end_sec=values["end_sec"])


def infer_task_kind(turns: list[Turn]) -> TaskKind | None:
    """Guess the task from the answer shape: a bare interval is grounding,
    caption-line blocks are dense captioning, anything else is targeted
    captioning."""
    answers = [t for t in turns if isinstance(t, AnswerTurn)]
    if not answers:
        return None
    if all(
        a.text.splitlines() and all(CAPTION_LINE_RE.match(line) for line in a.text.splitlines())
        for a in answers
    ):
        return TaskKind.DAC
    if len(answers) == 1 and INTERVAL_TEXT_RE.match(answers[0].text.strip()):
        return TaskKind.TAG
    return TaskKind.TAC


def parse_trajectory(document: str | dict, task_kind: TaskKind | None = None) -> Trajectory:
    """Parse a trajectory document into a flat turn list.

    When task_kind is omitted it is inferred from the answer shape.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"trajectory document is not valid JSON: {exc}") from exc
    if not isinstance(document, dict) or "messages" not in document:
        raise SchemaError("trajectory document must be an object with a 'messages' list")
    messages = document["messages"]
    if not isinstance(messages, list):
        raise SchemaError("'messages' must be a list")

    prompt = ""
    turns: list[Turn] = []
    for i, message in enumerate(messages):
        if not isinstance(message, dict):
            raise SchemaError(f"messages[{i}] must be an object")
        if message.get("role") == "user":
            if i != 0:
                raise SchemaError(f"messages[{i}]: user message allowed only first")
            prompt = _normalize_text(str(message.get("content", "")))
        else:
            turns.extend(turns_from_message(message, i))
    if not turns:
        raise ParseError("trajectory has no turns")
    return Trajectory(task_kind=task_kind or infer_task_kind(turns), turns=turns, prompt=prompt)


def turn_to_message(turn: Turn) -> dict:
    """Render one turn as a trajectory-document message."""
    if isinstance(turn, TimelineTurn):
        lines = [
            f"{format_interval(seg.interval)} {seg.description}".rstrip()
            for seg in turn.timeline.segments
        ]
        content = TIMELINE_OPEN + "\n" + "\n".join(lines) + "\n" + TIMELINE_CLOSE
        return {"role": "assistant", "content": content}
    if isinstance(turn, ThinkTurn):
        return {"role": "assistant", "content": f"{THINK_OPEN}{turn.text}{THINK_CLOSE}"}
    if isinstance(turn, AnswerTurn):
        return {"role": "assistant", "content": turn.text}
    if isinstance(turn, ToolCallTurn):
        return {
            "role": "assistant",
            "tool_call": {
                "name": turn.name,
                "arguments": {"start_sec": turn.start_sec, "end_sec": turn.end_sec},
            },
        }
    return {"role": "tool_response", "content": turn.content}


def turns_from_message(message: dict, index: int = 0) -> list[Turn]:
    """Parse one assistant or tool_response message into its turns."""
    if not isinstance(message, dict):
        raise SchemaError(f"messages[{index}] must be an object")
    role = message.get("role")
    if role == "assistant":
        if "tool_call" in message:
            return [_parse_tool_call(message["tool_call"], index)]
        return _scan_content(str(message.get("content", "")), index)
    if role == "tool_response":
        return [ToolResponseTurn(_normalize_text(str(message.get("content", ""))))]
    raise SchemaError(f"messages[{index}]: unknown role {role!r}")


def serialize_trajectory(t: Trajectory) -> str:
    """Canonical document form: one message per turn, deterministic bytes.

    parse_trajectory(serialize_trajectory(t)) reproduces t for trajectories
    whose timestamps are whole seconds (the textual grammar carries seconds).
    """
    messages: list[dict] = []
    if t.prompt:
        messages.append({"role": "user", "content": t.prompt})
    messages.extend(turn_to_message(turn) for turn in t.turns)
    return json.dumps({"messages": messages}, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def _check_answer_grammar(
    task: TaskKind, answers: list[AnswerTurn], add
) -> None:
    if task is TaskKind.TAG:
        text = answers[0].text.strip()
        if not INTERVAL_TEXT_RE.match(text):
            add("AnswerGrammar", "answer", f"{text!r} is not '[MM:SS - MM:SS]'")
            return
        try:
            interval = _parse_answer_interval(text)
        except (ParseError, RangeError):
            add("AnswerGrammar", "answer", f"{text!r} has an invalid timestamp")
            return
        if not interval.is_valid:
            add("AnswerGrammar", "answer", f"{text!r} has start after end")
    elif task is TaskKind.DAC:
        for a_idx, answer in enumerate(answers):
            lines = answer.text.splitlines()
            if not lines:
                add("AnswerGrammar", f"answer[{a_idx}]", "empty caption block")
                continue
            for line in lines:
                match = CAPTION_LINE_RE.match(line)
                if match is None:
                    add(
                        "AnswerGrammar",
                        f"answer[{a_idx}]",
                        f"{line!r} is not '[MM:SS - MM:SS]: text'",
                    )
                    continue
                try:
                    interval = Interval(
                        parse_timestamp(match.group(1)), parse_timestamp(match.group(2))
                    )
                except (ParseError, RangeError):
                    add("AnswerGrammar", f"answer[{a_idx}]", f"{line!r} has an invalid timestamp")
                    continue
                if not interval.is_valid:
                    add("AnswerGrammar", f"answer[{a_idx}]", f"{line!r} has start after end")
    else:
        if not answers[0].text.strip():
            add("AnswerGrammar", "answer", "caption must be non-empty text")


def _parse_answer_interval(text: str) -> Interval:
    match = INTERVAL_TEXT_RE.match(text)
    if match is None:
        raise ParseError(f"{text!r} is not an interval answer")
    return Interval(parse_timestamp(match.group(1)), parse_timestamp(match.group(2)))


def validate_format(
    t: Trajectory,
    task_kind: TaskKind | None = None,
    max_steps: int = MAX_STEPS_DEFAULT,
    duration: TimePoint | None = None,
) -> tuple[bool, list[FormatViolation]]:
    """Check a parsed trajectory against the session schema.

    Returns (conforms, violations). Warning-severity findings (timeline
    segment count outside 2-5) are reported but do not fail conformance.
    Total: never raises on a parseable trajectory.
    """
    task = task_kind or t.task_kind
    violations: list[FormatViolation] = []

    def add(code: str, location: str, detail: str, severity: str = "error") -> None:
        violations.append(FormatViolation(code, location, detail, severity))

    turns = t.turns
    for i, turn in enumerate(turns):
        loc = f"turn[{i}]"
        if isinstance(turn, ToolCallTurn):
            if i == 0 or not isinstance(turns[i - 1], ThinkTurn):
                add("MissingThink", loc, "tool call not immediately preceded by a think turn")
            if i + 1 >= len(turns) or not isinstance(turns[i + 1], ToolResponseTurn):
                add("DanglingToolCall", loc, "tool call not followed by a tool response")
            if turn.start_sec >= turn.end_sec or turn.start_sec < 0:
                add(
                    "ToolCallWindow",
                    loc,
                    f"crop window [{turn.start_sec}, {turn.end_sec}] is not a forward span",
                )
            elif duration is not None and turn.end_sec * 1000 > duration.millis + CROP_SLACK_MS:
                add(
                    "ToolCallWindow",
                    loc,
                    f"crop end {turn.end_sec}s beyond audio duration "
                    f"{format_timestamp(duration)}",
                )
        elif isinstance(turn, ToolResponseTurn):
            if i == 0 or not isinstance(turns[i - 1], ToolCallTurn):
                add("OrphanToolResponse", loc, "tool response without a preceding tool call")

    timeline_turns = [turn for turn in turns if isinstance(turn, TimelineTurn)]
    if len(timeline_turns) > 1:
        add("DuplicateTimeline", "timeline", "more than one timeline declaration", "warning")
    for tl in timeline_turns[:1]:
        segments = tl.timeline.segments
        if not TIMELINE_SEGMENTS_MIN <= len(segments) <= TIMELINE_SEGMENTS_MAX:
            add(
                "TimelineSegmentCount",
                "timeline",
                f"{len(segments)} segments outside the advisory range "
                f"{TIMELINE_SEGMENTS_MIN}-{TIMELINE_SEGMENTS_MAX}",
                "warning",
            )
        prev: TimelineSegment | None = None
        for s_idx, seg in enumerate(segments):
            if not seg.interval.is_valid:
                add("TimelineOrder", f"timeline[{s_idx}]", "segment start after end")
            elif prev is not None:
                if seg.interval.start < prev.interval.start:
                    add("TimelineOrder", f"timeline[{s_idx}]", "segments not sorted by start")
                elif seg.interval.start < prev.interval.end:
                    add("TimelineOverlap", f"timeline[{s_idx}]", "segment overlaps its predecessor")
            prev = seg

    answers = t.answer_turns
    steps = t.step_count
    effective_steps = max(0, steps - len(answers)) if task is TaskKind.DAC else steps
    if effective_steps > max_steps:
        add(
            "StepBudgetExceeded",
            "trajectory",
            f"{effective_steps} counted tool calls exceed the budget of {max_steps}",
        )

    if not answers:
        add("MissingAnswer", "trajectory", "no answer turn")
    else:
        if turns and not isinstance(turns[-1], AnswerTurn):
            add(
                "NonTerminalAnswer",
                f"turn[{len(turns) - 1}]",
                "trajectory does not end with an answer turn",
            )
        if task in (TaskKind.TAG, TaskKind.TAC) and len(answers) > 1:
            add("ExtraAnswer", "trajectory", f"{len(answers)} answer turns for a single-answer task")
        if task is not None:
            _check_answer_grammar(task, answers, add)

    ok = not any(v.severity == "error" for v in violations)
    return ok, violations


def extract_answer(
    t: Trajectory, task_kind: TaskKind | None = None
) -> Interval | list[tuple[Interval, str]] | str:
    """Extract the final task answer from a format-valid trajectory.

    Dense-caption answers are concatenated across all answer blocks and
    ordered by start time. Raises ValueError when called on a trajectory that
    fails validate_format.
    """
    task = task_kind or t.task_kind
    ok, violations = validate_format(t, task)
    if not ok:
        first = next(v for v in violations if v.severity == "error")
        raise ValueError(f"extract_answer requires a format-valid trajectory ({first})")
    answers = t.answer_turns
    if task is TaskKind.TAG:
        return _parse_answer_interval(answers[0].text.strip())
    if task is TaskKind.DAC:
        captions: list[tuple[Interval, str]] = []
        for answer in answers:
            for line in answer.text.splitlines():
                match = CAPTION_LINE_RE.match(line)
                captions.append(
                    (
                        Interval(
                            parse_timestamp(match.group(1)),
                            parse_timestamp(match.group(2)),
                        ),
                        match.group(3).strip(),
                    )
                )
        captions.sort(key=lambda c: (c[0].start, c[0].end))
        return captions
    return answers[0].text
