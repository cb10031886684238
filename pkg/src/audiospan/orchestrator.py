"""Multi-turn tool-use session driver for temporal audio reasoning.

A session walks a model backend through two phases: the backend first sees
temporally downsampled audio and is expected to declare a global timeline,
then it reasons turn by turn, optionally calling ``crop_audio``; the
orchestrator executes each crop at full resolution and feeds the clip back
as a tool response. Sessions terminate when a format-valid answer is
produced, the tool budget runs out, or the backend fails. Hallucinated crop
windows do not abort the session: the error text becomes the tool response
and the backend may recover while budget remains.

Dense-caption sessions visit the declared timeline segments in order, one
caption block per segment; the first crop of each segment is mandated by the
protocol and therefore exempt from the refinement budget. Targeted-caption
sessions receive the pre-cropped target interval alongside the full audio.
"""

from __future__ import annotations

import enum
import json
import logging
import socket
import threading
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Protocol

from .annotations import TaskInstance, TaskKind
from .audio import AudioBuffer, crop_audio, decimate
from .errors import BackendError, CropRangeError
from .timeline import Interval, format_interval
from .trajectory import (
    AnswerTurn,
    GlobalTimeline,
    ThinkTurn,
    TimelineSegment,
    TimelineTurn,
    ToolCallTurn,
    ToolResponseTurn,
    Trajectory,
    Turn,
    extract_answer,
    turn_to_message,
    turns_from_message,
    validate_format,
)

logger = logging.getLogger(__name__)

TOOL_RESPONSE_TEXT = "Segment extracted: <audio>"
DURATION_AGREEMENT_MS = 1000


def _load_prompt(name: str) -> str:
    return (
        resources.files("audiospan").joinpath("prompts", name).read_text("utf-8").strip()
    )


def build_prompt(instance: TaskInstance) -> str:
    """Render the fixed task template for an instance."""
    if instance.task_kind is TaskKind.TAG:
        return _load_prompt("tag_session.txt").format(query=instance.query)
    if instance.task_kind is TaskKind.TAC:
        return _load_prompt("tac_session.txt").format(
            interval=format_interval(instance.target_interval)
        )
    return _load_prompt("dac_session.txt")


@dataclass(frozen=True)
class BackendRequest:
    """Everything a backend may condition on for its next turn."""

    task_kind: TaskKind
    prompt: str
    turns: tuple[Turn, ...]
    audio: tuple[tuple[str, AudioBuffer], ...]
    hints: dict = field(default_factory=dict)


class ModelBackend(Protocol):
    """Produces exactly one turn per call; returns None when it has nothing
    more to say (scripted backends signal exhaustion this way)."""

    def generate(self, request: BackendRequest) -> Turn | None: ...


class Termination(enum.Enum):
    ANSWER_PRODUCED = "AnswerProduced"
    STEP_BUDGET_EXHAUSTED = "StepBudgetExhausted"
    BACKEND_ERROR = "BackendError"
    TOOL_ERROR = "ToolError"


@dataclass(frozen=True)
class SessionConfig:
    max_steps: int = 4
    timeline_downsample_factor: int = 2
    local_crop_downsample: int = 1
    max_turns: int = 64

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        for factor in (self.timeline_downsample_factor, self.local_crop_downsample):
            if factor not in (1, 2, 4, 8):
                raise ValueError(f"downsample factors must be in {{1,2,4,8}}, got {factor}")


@dataclass
class SessionResult:
    trajectory: Trajectory
    answer: object | None
    termination: Termination
    detail: str = ""


class _ToolFailure(Exception):
    """Internal: unexpected tool-execution failure (not a crop-window error)."""


def _check_duration_agreement(instance: TaskInstance, audio: AudioBuffer) -> None:
    gap = abs(instance.duration.millis - audio.duration.millis)
    if gap > DURATION_AGREEMENT_MS:
        raise ValueError(
            f"instance {instance.instance_id}: declared duration "
            f"{instance.duration.millis} ms disagrees with audio "
            f"{audio.duration.millis} ms by more than 1 s"
        )


class _Session:
    """State for one running session."""

    def __init__(
        self,
        instance: TaskInstance,
        audio: AudioBuffer,
        backend: ModelBackend,
        cfg: SessionConfig,
    ):
        _check_duration_agreement(instance, audio)
        self.instance = instance
        self.audio = audio
        self.backend = backend
        self.cfg = cfg
        self.prompt = build_prompt(instance)
        self.turns: list[Turn] = []
        self.timeline: GlobalTimeline | None = None
        self.crops: list[tuple[str, AudioBuffer]] = []
        self.extra_audio: list[tuple[str, AudioBuffer]] = []
        self.overview = decimate(audio, cfg.timeline_downsample_factor)

    def trajectory(self) -> Trajectory:
        return Trajectory(self.instance.task_kind, list(self.turns), self.prompt)

    def request(self) -> BackendRequest:
        if self.timeline is None:
            audio = (("audio", self.overview), *self.extra_audio)
            phase = "timeline"
        else:
            audio = (("audio", self.audio), *self.extra_audio, *self.crops)
            phase = "reasoning"
        return BackendRequest(
            task_kind=self.instance.task_kind,
            prompt=self.prompt,
            turns=tuple(self.turns),
            audio=audio,
            hints={
                "phase": phase,
                "timeline_downsample": self.cfg.timeline_downsample_factor,
                "crop_downsample": self.cfg.local_crop_downsample,
            },
        )

    def next_turn(self) -> Turn | None:
        return self.backend.generate(self.request())

    def execute_crop(self, call: ToolCallTurn) -> None:
        """Run the tool; window errors become the tool-response text."""
        try:
            clip = crop_audio(self.audio, call.start_sec, call.end_sec)
            if self.cfg.local_crop_downsample != 1:
                clip = decimate(clip, self.cfg.local_crop_downsample)
        except (ValueError, CropRangeError) as exc:
            self.turns.append(ToolResponseTurn(f"Tool error: {exc}"))
            return
        except Exception as exc:
            raise _ToolFailure(str(exc)) from exc
        self.crops.append((f"crop_{len(self.crops) + 1}", clip))
        self.turns.append(ToolResponseTurn(TOOL_RESPONSE_TEXT))

    def result(
        self, answer, termination: Termination, detail: str = ""
    ) -> SessionResult:
        return SessionResult(self.trajectory(), answer, termination, detail)

    def finish_with_answer(self) -> SessionResult:
        # Validation here is structural (schema, budget, answer grammar);
        # duration is deliberately not supplied so that a session which
        # recovered from a hallucinated crop window can still conclude.
        trajectory = self.trajectory()
        ok, violations = validate_format(
            trajectory, self.instance.task_kind, self.cfg.max_steps
        )
        if not ok:
            first = next(v for v in violations if v.severity == "error")
            return self.result(None, Termination.BACKEND_ERROR,
                               f"answer failed format validation: {first}")
        return self.result(
            extract_answer(trajectory, self.instance.task_kind),
            Termination.ANSWER_PRODUCED,
        )


def _drive_single_answer(session: _Session) -> SessionResult:
    """Shared loop for grounding and targeted-caption sessions: every tool
    call counts against the budget and the first answer terminates."""
    steps = 0
    for _ in range(session.cfg.max_turns):
        try:
            turn = session.next_turn()
        except Exception as exc:
            return session.result(None, Termination.BACKEND_ERROR, f"backend raised: {exc}")
        if turn is None:
            return session.result(
                None, Termination.BACKEND_ERROR, "backend exhausted before an answer"
            )
        if isinstance(turn, TimelineTurn):
            session.turns.append(turn)
            if session.timeline is None:
                session.timeline = turn.timeline
        elif isinstance(turn, ThinkTurn):
            session.turns.append(turn)
        elif isinstance(turn, ToolCallTurn):
            if steps >= session.cfg.max_steps:
                return session.result(
                    None,
                    Termination.STEP_BUDGET_EXHAUSTED,
                    f"tool budget of {session.cfg.max_steps} exhausted",
                )
            session.turns.append(turn)
            steps += 1
            try:
                session.execute_crop(turn)
            except _ToolFailure as exc:
                return session.result(None, Termination.TOOL_ERROR, str(exc))
        elif isinstance(turn, AnswerTurn):
            session.turns.append(turn)
            return session.finish_with_answer()
        else:
            return session.result(
                None, Termination.BACKEND_ERROR, f"backend emitted unknown turn {turn!r}"
            )
    return session.result(
        None, Termination.BACKEND_ERROR, f"turn limit {session.cfg.max_turns} reached"
    )


def run_session(
    instance: TaskInstance,
    audio: AudioBuffer,
    backend: ModelBackend,
    cfg: SessionConfig = SessionConfig(),
) -> SessionResult:
    """Run one session, dispatching on the instance's task."""
    if instance.task_kind is TaskKind.DAC:
        return run_dac_session(instance, audio, backend, cfg)
    if instance.task_kind is TaskKind.TAC:
        return run_tac_session(instance, audio, backend, cfg)
    session = _Session(instance, audio, backend, cfg)
    return _drive_single_answer(session)


def run_tac_session(
    instance: TaskInstance,
    audio: AudioBuffer,
    backend: ModelBackend,
    cfg: SessionConfig = SessionConfig(),
) -> SessionResult:
    """Targeted captioning: the target interval is cropped up front and
    supplied to the backend for the whole session."""
    if instance.task_kind is not TaskKind.TAC:
        raise ValueError("run_tac_session requires a TAC instance")
    target = instance.target_interval
    if target is None or not target.is_valid or target.end.millis > audio.duration.millis:
        raise ValueError(
            f"instance {instance.instance_id}: target interval must lie within the audio"
        )
    session = _Session(instance, audio, backend, cfg)
    clip = crop_audio(audio, target.start.millis / 1000.0, target.end.millis / 1000.0)
    session.extra_audio.append(("target_clip", clip))
    return _drive_single_answer(session)


def run_dac_session(
    instance: TaskInstance,
    audio: AudioBuffer,
    backend: ModelBackend,
    cfg: SessionConfig = SessionConfig(),
) -> SessionResult:
    """Dense captioning: iterate the declared timeline segments in order.

    Each answer block closes the current segment; the session ends when
    every segment has its block (or the backend finishes early with at least
    one block). Only re-crops within a segment consume the refinement budget.
    """
    if instance.task_kind is not TaskKind.DAC:
        raise ValueError("run_dac_session requires a DAC instance")
    session = _Session(instance, audio, backend, cfg)
    blocks = 0
    refinement_steps = 0
    crops_in_segment = 0
    for _ in range(session.cfg.max_turns):
        try:
            turn = session.next_turn()
        except Exception as exc:
            return session.result(None, Termination.BACKEND_ERROR, f"backend raised: {exc}")
        if turn is None:
            if blocks >= 1:
                return session.finish_with_answer()
            return session.result(
                None, Termination.BACKEND_ERROR, "backend exhausted before any caption block"
            )
        if isinstance(turn, TimelineTurn):
            session.turns.append(turn)
            if session.timeline is None:
                session.timeline = turn.timeline
                if len(turn.timeline) < 2:
                    logger.warning(
                        "instance %s: timeline has %d segment(s), advisory range is 2-5",
                        instance.instance_id,
                        len(turn.timeline),
                    )
        elif isinstance(turn, ThinkTurn):
            session.turns.append(turn)
        elif isinstance(turn, ToolCallTurn):
            if session.timeline is None:
                return session.result(
                    None, Termination.BACKEND_ERROR, "tool call before a timeline declaration"
                )
            if crops_in_segment >= 1:
                if refinement_steps >= session.cfg.max_steps:
                    return session.result(
                        None,
                        Termination.STEP_BUDGET_EXHAUSTED,
                        f"refinement budget of {session.cfg.max_steps} exhausted",
                    )
                refinement_steps += 1
            crops_in_segment += 1
            session.turns.append(turn)
            try:
                session.execute_crop(turn)
            except _ToolFailure as exc:
                return session.result(None, Termination.TOOL_ERROR, str(exc))
        elif isinstance(turn, AnswerTurn):
            if session.timeline is None:
                return session.result(
                    None, Termination.BACKEND_ERROR, "caption block before a timeline declaration"
                )
            session.turns.append(turn)
            blocks += 1
            crops_in_segment = 0
            if blocks >= len(session.timeline):
                return session.finish_with_answer()
        else:
            return session.result(
                None, Termination.BACKEND_ERROR, f"backend emitted unknown turn {turn!r}"
            )
    return session.result(
        None, Termination.BACKEND_ERROR, f"turn limit {session.cfg.max_turns} reached"
    )


class ScriptedBackend:
    """Emits a fixed turn sequence; None once exhausted."""

    supports_concurrent_sessions = False

    def __init__(self, turns: list[Turn], name: str = "scripted"):
        self._turns = list(turns)
        self._pos = 0
        self.name = name

    def generate(self, request: BackendRequest) -> Turn | None:
        if self._pos >= len(self._turns):
            return None
        turn = self._turns[self._pos]
        self._pos += 1
        return turn


class ReplayBackend(ScriptedBackend):
    """Re-emits the assistant turns of a recorded trajectory.

    Divergence between the orchestrator's tool responses and the recorded
    ones is reported as a warning, never a failure.
    """

    def __init__(self, fixture: Trajectory):
        super().__init__(
            [t for t in fixture.turns if not isinstance(t, ToolResponseTurn)],
            name="replay",
        )
        self._recorded = [t for t in fixture.turns if isinstance(t, ToolResponseTurn)]
        self._warned: set[int] = set()
        self.warnings: list[str] = []

    def generate(self, request: BackendRequest) -> Turn | None:
        seen = [t for t in request.turns if isinstance(t, ToolResponseTurn)]
        for i, turn in enumerate(seen):
            if i in self._warned or i >= len(self._recorded):
                continue
            if turn.content != self._recorded[i].content:
                self._warned.add(i)
                message = (
                    f"tool response {i} diverges from the recording: "
                    f"{turn.content!r} != {self._recorded[i].content!r}"
                )
                self.warnings.append(message)
                logger.warning("replay: %s", message)
        return super().generate(request)


def replay_backend(fixture: Trajectory) -> ReplayBackend:
    return ReplayBackend(fixture)


def _oracle_timeline(duration_ms: int) -> GlobalTimeline:
    total_s = max(duration_ms // 1000, 1)
    bounds = sorted({(total_s * k) // 3 for k in range(4)})
    segments = []
    for i in range(len(bounds) - 1):
        segments.append(
            TimelineSegment(
                Interval.from_millis(bounds[i] * 1000, bounds[i + 1] * 1000),
                f"overview of part {i + 1}",
            )
        )
    return GlobalTimeline(tuple(segments))


def oracle_backend(instance: TaskInstance) -> ScriptedBackend:
    """Scripted backend that answers from the instance's ground truth.

    Emits a three-part timeline, thinks, crops the relevant window, and
    answers exactly; the upper-bound path for validating the pipeline.
    """
    timeline = _oracle_timeline(instance.duration.millis)
    turns: list[Turn] = [TimelineTurn(timeline)]
    if instance.task_kind is TaskKind.TAG:
        gt: Interval = instance.ground_truth
        turns.append(ThinkTurn("The query points at one segment; inspecting it directly."))
        turns.append(ToolCallTurn(gt.start.millis / 1000.0, gt.end.millis / 1000.0))
        turns.append(ThinkTurn("The cropped segment matches the query."))
        turns.append(AnswerTurn(format_interval(gt)))
    elif instance.task_kind is TaskKind.TAC:
        target = instance.target_interval
        turns.append(ThinkTurn("Listening to the requested interval."))
        turns.append(ToolCallTurn(target.start.millis / 1000.0, target.end.millis / 1000.0))
        turns.append(ThinkTurn("Describing the cropped segment."))
        turns.append(AnswerTurn(instance.ground_truth))
    else:
        captions: list[tuple[Interval, str]] = list(instance.ground_truth)
        buckets: list[list[tuple[Interval, str]]] = [[] for _ in timeline.segments]
        for iv, text in captions:
            mid = (iv.start.millis + iv.end.millis) // 2
            idx = len(buckets) - 1
            for k, segment in enumerate(timeline.segments):
                if mid < segment.interval.end.millis:
                    idx = k
                    break
            buckets[idx].append((iv, text))
        for segment, mine in zip(timeline.segments, buckets):
            if not mine:
                continue
            turns.append(ThinkTurn(f"Observing {format_interval(segment.interval)}."))
            turns.append(
                ToolCallTurn(
                    segment.interval.start.millis / 1000.0,
                    segment.interval.end.millis / 1000.0,
                )
            )
            turns.append(
                AnswerTurn(
                    "\n".join(f"{format_interval(iv)}: {text}" for iv, text in mine)
                )
            )
    return ScriptedBackend(turns, name="oracle")


class ExternalBackend:
    """Backend over a byte stream speaking the trajectory message format.

    Each request is one JSON line carrying the prompt, the turn history as
    trajectory messages, audio references (name, sample rate, sample count;
    PCM payloads stay on the orchestrator side), and the sampling hints.
    The reply is one JSON line holding a single assistant or tool-style
    message that parses to exactly one turn.
    """

    supports_concurrent_sessions = False
    name = "external"

    def __init__(self, reader: IO[bytes], writer: IO[bytes]):
        self._reader = reader
        self._writer = writer
        self._lock = threading.Lock()

    def generate(self, request: BackendRequest) -> Turn | None:
        payload = {
            "task": request.task_kind.value,
            "prompt": request.prompt,
            "turns": [turn_to_message(t) for t in request.turns],
            "audio": [
                {
                    "name": name,
                    "sample_rate": buf.sample_rate,
                    "n_samples": len(buf),
                    "duration_ms": buf.duration.millis,
                }
                for name, buf in request.audio
            ],
            "hints": request.hints,
        }
        line = json.dumps(payload, ensure_ascii=False, sort_keys=True)
        with self._lock:
            try:
                self._writer.write(line.encode("utf-8") + b"\n")
                self._writer.flush()
                reply = self._reader.readline()
            except OSError as exc:
                raise BackendError(f"backend stream failed: {exc}") from exc
        if not reply:
            raise BackendError("backend stream closed before replying")
        try:
            message = json.loads(reply.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BackendError(f"backend reply is not a JSON message: {exc}") from exc
        if message is None:
            return None
        turns = turns_from_message(message)
        if len(turns) != 1:
            raise BackendError(
                f"backend reply must parse to exactly one turn, got {len(turns)}"
            )
        return turns[0]


def connect_backend(endpoint: str, timeout: float = 30.0) -> ExternalBackend:
    """Open a TCP connection to a ``host:port`` backend endpoint."""
    host, sep, port = endpoint.rpartition(":")
    if not sep or not port.isdigit():
        raise BackendError(f"backend endpoint {endpoint!r} is not host:port")
    try:
        sock = socket.create_connection((host, int(port)), timeout=timeout)
    except OSError as exc:
        raise BackendError(f"cannot reach backend at {endpoint}: {exc}") from exc
    return ExternalBackend(sock.makefile("rb"), sock.makefile("wb"))
