"""Millisecond-exact timestamps, intervals, IoU, and positional classification.

All time arithmetic is done on integer milliseconds so that metric values are
bit-identical across platforms. The textual timestamp grammar is ``M{1,3}:SS``
(minutes may exceed 59; a 30-minute clip uses e.g. ``23:27``), and the textual
interval form is ``[MM:SS - MM:SS]`` with that exact bracket/space/dash layout.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

from .errors import ParseError, RangeError

TIMESTAMP_RE = re.compile(r"^(\d{1,3}):(\d{2})$")
INTERVAL_TEXT_RE = re.compile(r"^\[(\d{1,3}:\d{2}) - (\d{1,3}:\d{2})\]$")


@dataclass(frozen=True, order=True)
class TimePoint:
    """A non-negative offset from audio start, in whole milliseconds."""

    millis: int

    def __post_init__(self) -> None:
        if not isinstance(self.millis, int):
            raise TypeError(f"millis must be int, got {type(self.millis).__name__}")
        if self.millis < 0:
            raise ValueError(f"millis must be >= 0, got {self.millis}")

    @classmethod
    def from_seconds(cls, seconds: float) -> "TimePoint":
        """Convert fractional seconds to milliseconds, rounding half up."""
        if seconds < 0:
            raise ValueError(f"seconds must be >= 0, got {seconds}")
        return cls(int(math.floor(seconds * 1000.0 + 0.5)))

    @property
    def seconds(self) -> float:
        return self.millis / 1000.0

    def __str__(self) -> str:
        return format_timestamp(self)


class PositionThird(enum.Enum):
    """Which third of the audio an interval falls into."""

    START = "start"
    MIDDLE = "middle"
    END = "end"


@dataclass(frozen=True)
class Interval:
    """A time span [start, end].

    Inverted spans (start > end) are representable so that malformed data can
    be loaded and reported by validators instead of being rejected at parse
    time; metric operations require ``is_valid``.
    """

    start: TimePoint
    end: TimePoint

    @classmethod
    def from_millis(cls, start_ms: int, end_ms: int) -> "Interval":
        return cls(TimePoint(start_ms), TimePoint(end_ms))

    @classmethod
    def from_seconds(cls, start_sec: float, end_sec: float) -> "Interval":
        return cls(TimePoint.from_seconds(start_sec), TimePoint.from_seconds(end_sec))

    @property
    def is_valid(self) -> bool:
        return self.start <= self.end

    @property
    def duration_millis(self) -> int:
        return self.end.millis - self.start.millis

    def shift(self, offset: TimePoint) -> "Interval":
        return Interval(
            TimePoint(self.start.millis + offset.millis),
            TimePoint(self.end.millis + offset.millis),
        )

    def __str__(self) -> str:
        return format_interval(self)


def parse_timestamp(text: str) -> TimePoint:
    """Parse an ``M{1,3}:SS`` timestamp into a TimePoint.

    Raises ParseError for malformed text and RangeError when the seconds
    field is 60 or more.
    """
    match = TIMESTAMP_RE.match(text)
    if match is None:
        raise ParseError(f"timestamp {text!r} does not match MM:SS (minutes:seconds)")
    minutes, seconds = int(match.group(1)), int(match.group(2))
    if seconds >= 60:
        raise RangeError(f"timestamp {text!r}: seconds field must be 00-59")
    return TimePoint((minutes * 60 + seconds) * 1000)


def format_timestamp(t: TimePoint) -> str:
    """Render a TimePoint as ``MM:SS``, rounding to the nearest second.

    The textual form carries whole seconds only, so a round trip through
    parse_timestamp can lose up to 500 ms.
    """
    total_seconds = (t.millis + 500) // 1000
    return f"{total_seconds // 60:02d}:{total_seconds % 60:02d}"


def parse_interval_text(text: str) -> Interval:
    """Parse the ``[MM:SS - MM:SS]`` interval form."""
    match = INTERVAL_TEXT_RE.match(text)
    if match is None:
        raise ParseError(f"interval {text!r} does not match '[MM:SS - MM:SS]'")
    return Interval(parse_timestamp(match.group(1)), parse_timestamp(match.group(2)))


def format_interval(a: Interval) -> str:
    return f"[{format_timestamp(a.start)} - {format_timestamp(a.end)}]"


def iou(a: Interval, b: Interval) -> float:
    """Intersection over union of two intervals.

    The denominator is the hull (min start to max end), which equals the
    union whenever the intervals overlap; the raw ratio is clamped at 0 for
    disjoint intervals. Two identical degenerate intervals score 1.0, a
    degenerate interval against anything else scores 0.0.
    """
    if not a.is_valid or not b.is_valid:
        raise ValueError("iou requires intervals with start <= end")
    inter = min(a.end.millis, b.end.millis) - max(a.start.millis, b.start.millis)
    hull = max(a.end.millis, b.end.millis) - min(a.start.millis, b.start.millis)
    if hull == 0:
        return 1.0
    return max(0, inter) / hull


def midpoint(a: Interval) -> TimePoint:
    """Interval midpoint, floored to whole milliseconds."""
    if not a.is_valid:
        raise ValueError("midpoint requires an interval with start <= end")
    return TimePoint((a.start.millis + a.end.millis) // 2)


def classify_third(a: Interval, duration: TimePoint) -> PositionThird:
    """Classify an interval into the start/middle/end third of the audio.

    The interval midpoint is compared against [0, T/3), [T/3, 2T/3) and
    [2T/3, T]; the comparison is exact (no float division).
    """
    if duration.millis == 0:
        raise ValueError("duration must be positive to classify thirds")
    if not a.is_valid:
        raise ValueError("classify_third requires an interval with start <= end")
    if a.end.millis > duration.millis:
        raise ValueError(
            f"interval end {a.end.millis} ms exceeds duration {duration.millis} ms"
        )
    mid3 = 3 * midpoint(a).millis
    if mid3 < duration.millis:
        return PositionThird.START
    if mid3 < 2 * duration.millis:
        return PositionThird.MIDDLE
    return PositionThird.END
