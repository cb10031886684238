from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from audiospan.annotations import TaskKind
from audiospan.errors import ParseError, SchemaError
from audiospan.timeline import TimePoint
from audiospan.trajectory import (
    AnswerTurn,
    ThinkTurn,
    TimelineSegment,
    TimelineTurn,
    GlobalTimeline,
    ToolCallTurn,
    ToolResponseTurn,
    Trajectory,
    extract_answer,
    parse_trajectory,
    serialize_trajectory,
    validate_format,
)

from .conftest import (
    DAC_FIXTURE_CAPTIONS,
    TAC_FIXTURE_CAPTION,
    interval,
    load_fixture_text,
)


@pytest.fixture
def tag_trajectory() -> Trajectory:
    return parse_trajectory(load_fixture_text("tag_trajectory.json"))


@pytest.fixture
def dac_trajectory() -> Trajectory:
    return parse_trajectory(load_fixture_text("dac_trajectory.json"))


@pytest.fixture
def tac_trajectory() -> Trajectory:
    return parse_trajectory(load_fixture_text("tac_trajectory.json"))


class TestParse:
    def test_tag_fixture(self, tag_trajectory):
        t = tag_trajectory
        assert t.task_kind is TaskKind.TAG
        assert t.step_count == 1
        assert len(t.timeline) == 3
        calls = [turn for turn in t.turns if isinstance(turn, ToolCallTurn)]
        assert calls == [ToolCallTurn(471.0, 491.0)]
        assert t.answer_turns[-1].text == "[08:42 - 08:51]"

    def test_dac_fixture(self, dac_trajectory):
        t = dac_trajectory
        assert t.task_kind is TaskKind.DAC
        calls = [turn for turn in t.turns if isinstance(turn, ToolCallTurn)]
        assert [(c.start_sec, c.end_sec) for c in calls] == [
            (0.0, 130.0),
            (131.0, 250.0),
            (251.0, 352.0),
        ]
        assert len(t.answer_turns) == 3
        assert t.dac_answer_shape == "interleaved"

    def test_tac_fixture(self, tac_trajectory):
        t = tac_trajectory
        assert t.task_kind is TaskKind.TAC
        assert len(t.timeline) == 2
        assert t.answer_turns[0].text == TAC_FIXTURE_CAPTION

    def test_empty_messages(self):
        with pytest.raises(ParseError, match="no turns"):
            parse_trajectory({"messages": []})

    def test_unclosed_tag_reports_offset(self):
        doc = {"messages": [{"role": "assistant", "content": "<think>never closed"}]}
        with pytest.raises(ParseError, match="byte offset 0"):
            parse_trajectory(doc)

    def test_unknown_tool(self):
        doc = {
            "messages": [
                {
                    "role": "assistant",
                    "tool_call": {"name": "summon", "arguments": {"start_sec": 0, "end_sec": 1}},
                }
            ]
        }
        with pytest.raises(SchemaError, match="unknown tool"):
            parse_trajectory(doc)

    def test_non_numeric_crop_argument(self):
        doc = {
            "messages": [
                {
                    "role": "assistant",
                    "tool_call": {
                        "name": "crop_audio",
                        "arguments": {"start_sec": "zero", "end_sec": 1},
                    },
                }
            ]
        }
        with pytest.raises(ParseError, match="start_sec"):
            parse_trajectory(doc)

    def test_think_interval_not_an_answer(self, tag_trajectory):
        # the think text mentions an interval; it must not leak into answers
        assert len(tag_trajectory.answer_turns) == 1


class TestValidateFormat:
    def test_fixtures_conform(self, tag_trajectory, dac_trajectory, tac_trajectory):
        for trajectory in (tag_trajectory, dac_trajectory, tac_trajectory):
            ok, violations = validate_format(trajectory)
            assert ok, violations

    def test_step_budget(self):
        turns = []
        for i in range(5):
            turns.append(ThinkTurn(f"probe {i}"))
            turns.append(ToolCallTurn(float(i), float(i + 1)))
            turns.append(ToolResponseTurn("Segment extracted: <audio>"))
        turns.append(AnswerTurn("[00:00 - 00:01]"))
        ok, violations = validate_format(Trajectory(TaskKind.TAG, turns))
        assert not ok
        assert any(v.code == "StepBudgetExceeded" for v in violations)

    def test_malformed_tag_answer(self):
        turns = [ThinkTurn("hm"), AnswerTurn("around eight minutes")]
        ok, violations = validate_format(Trajectory(TaskKind.TAG, turns))
        assert not ok
        assert any(v.code == "AnswerGrammar" for v in violations)

    def test_tool_call_requires_think(self):
        turns = [
            ToolCallTurn(0.0, 1.0),
            ToolResponseTurn("x"),
            AnswerTurn("[00:00 - 00:01]"),
        ]
        ok, violations = validate_format(Trajectory(TaskKind.TAG, turns))
        assert not ok
        assert any(v.code == "MissingThink" for v in violations)

    def test_tool_call_requires_response(self):
        turns = [ThinkTurn("t"), ToolCallTurn(0.0, 1.0), AnswerTurn("[00:00 - 00:01]")]
        ok, violations = validate_format(Trajectory(TaskKind.TAG, turns))
        assert not ok
        assert any(v.code == "DanglingToolCall" for v in violations)

    def test_trailing_tool_response(self):
        turns = [
            ThinkTurn("t"),
            ToolCallTurn(0.0, 1.0),
            ToolResponseTurn("x"),
        ]
        ok, violations = validate_format(Trajectory(TaskKind.TAG, turns))
        assert not ok
        assert any(v.code == "MissingAnswer" for v in violations)

    def test_answer_then_tool_response_not_terminal(self):
        turns = [
            ThinkTurn("t"),
            AnswerTurn("[00:00 - 00:01]"),
            ThinkTurn("again"),
            ToolCallTurn(0.0, 1.0),
            ToolResponseTurn("x"),
        ]
        ok, violations = validate_format(Trajectory(TaskKind.TAG, turns))
        assert not ok
        assert any(v.code == "NonTerminalAnswer" for v in violations)

    def test_inverted_tool_window(self):
        turns = [
            ThinkTurn("t"),
            ToolCallTurn(5.0, 2.0),
            ToolResponseTurn("x"),
            AnswerTurn("[00:00 - 00:01]"),
        ]
        ok, violations = validate_format(Trajectory(TaskKind.TAG, turns))
        assert not ok
        assert any(v.code == "ToolCallWindow" for v in violations)

    def test_tool_window_beyond_duration(self):
        turns = [
            ThinkTurn("t"),
            ToolCallTurn(0.0, 100.0),
            ToolResponseTurn("x"),
            AnswerTurn("[00:00 - 00:01]"),
        ]
        ok, violations = validate_format(
            Trajectory(TaskKind.TAG, turns), duration=TimePoint(60_000)
        )
        assert not ok
        assert any(v.code == "ToolCallWindow" for v in violations)

    def test_timeline_k_is_warning_only(self):
        timeline = GlobalTimeline((TimelineSegment(interval("00:00", "01:00"), "all"),))
        turns = [TimelineTurn(timeline), ThinkTurn("t"), AnswerTurn("[00:00 - 00:30]")]
        ok, violations = validate_format(Trajectory(TaskKind.TAG, turns))
        assert ok
        assert any(v.code == "TimelineSegmentCount" and v.severity == "warning"
                   for v in violations)

    def test_timeline_overlap_rejected(self):
        timeline = GlobalTimeline(
            (
                TimelineSegment(interval("00:00", "01:00"), "a"),
                TimelineSegment(interval("00:30", "02:00"), "b"),
            )
        )
        turns = [TimelineTurn(timeline), ThinkTurn("t"), AnswerTurn("[00:00 - 00:30]")]
        ok, violations = validate_format(Trajectory(TaskKind.TAG, turns))
        assert not ok
        assert any(v.code == "TimelineOverlap" for v in violations)

    def test_timeline_gap_allowed(self, tag_trajectory):
        # the grounding fixture has a 3-second gap between segments 2 and 3
        ok, _ = validate_format(tag_trajectory)
        assert ok

    def test_total_never_raises(self):
        # arbitrary turn soup must yield a verdict, not an exception
        import itertools
        pool = [
            ThinkTurn("x"),
            ToolCallTurn(1.0, 0.5),
            ToolResponseTurn("y"),
            AnswerTurn("nonsense"),
            AnswerTurn("[00:00 - 00:01]"),
        ]
        for n in (1, 2, 3):
            for combo in itertools.product(pool, repeat=n):
                for task in (TaskKind.TAG, TaskKind.DAC, TaskKind.TAC, None):
                    ok, violations = validate_format(Trajectory(task, list(combo)))
                    assert isinstance(ok, bool)

    def test_tac_requires_nonempty_answer(self):
        turns = [ThinkTurn("t"), AnswerTurn("   ")]
        ok, violations = validate_format(Trajectory(TaskKind.TAC, turns))
        # a whitespace answer never becomes a turn via parsing, but a directly
        # constructed one must still be rejected
        assert not ok


class TestExtractAnswer:
    def test_tag(self, tag_trajectory):
        assert extract_answer(tag_trajectory) == interval("08:42", "08:51")

    def test_dac(self, dac_trajectory):
        answer = extract_answer(dac_trajectory)
        assert len(answer) == 5
        expected = [
            (interval(s, e), text) for s, e, text in DAC_FIXTURE_CAPTIONS
        ]
        assert answer == expected
        starts = [iv.start for iv, _ in answer]
        assert starts == sorted(starts)

    def test_tac(self, tac_trajectory):
        assert extract_answer(tac_trajectory) == TAC_FIXTURE_CAPTION

    def test_invalid_trajectory_rejected(self):
        turns = [ThinkTurn("t"), AnswerTurn("not an interval")]
        with pytest.raises(ValueError, match="format-valid"):
            extract_answer(Trajectory(TaskKind.TAG, turns))

    def test_dac_out_of_order_blocks_sorted(self):
        turns = [
            ThinkTurn("t"),
            AnswerTurn("[01:00 - 02:00]: later\n[00:00 - 00:30]: earlier"),
        ]
        answer = extract_answer(Trajectory(TaskKind.DAC, turns))
        assert [text for _, text in answer] == ["earlier", "later"]


class TestSerializeRoundTrip:
    @pytest.mark.parametrize(
        "fixture_name",
        ["tag_trajectory.json", "dac_trajectory.json", "tac_trajectory.json"],
    )
    def test_parse_serialize_identity(self, fixture_name):
        original = parse_trajectory(load_fixture_text(fixture_name))
        document = serialize_trajectory(original)
        reparsed = parse_trajectory(document)
        assert reparsed.turns == original.turns
        assert reparsed.prompt == original.prompt
        assert reparsed.task_kind == original.task_kind

    @pytest.mark.parametrize(
        "fixture_name",
        ["tag_trajectory.json", "dac_trajectory.json", "tac_trajectory.json"],
    )
    def test_byte_stable(self, fixture_name):
        once = serialize_trajectory(parse_trajectory(load_fixture_text(fixture_name)))
        twice = serialize_trajectory(parse_trajectory(once))
        assert once == twice

    def test_minimal_trajectory(self):
        t = Trajectory(TaskKind.TAC, [ThinkTurn("hm"), AnswerTurn("quiet room")])
        document = serialize_trajectory(t)
        messages = json.loads(document)["messages"]
        assert len(messages) == 2
        reparsed = parse_trajectory(document)
        assert reparsed.turns == t.turns


_phrase = st.lists(
    st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=8),
    min_size=1,
    max_size=5,
).map(" ".join)

_second = st.integers(min_value=0, max_value=1790)


@st.composite
def _whole_second_interval(draw):
    start = draw(_second)
    end = start + draw(st.integers(min_value=1, max_value=60))
    return parse_interval_pair(start, end)


def parse_interval_pair(start_s: int, end_s: int):
    from audiospan.timeline import Interval, TimePoint

    return Interval(TimePoint(start_s * 1000), TimePoint(end_s * 1000))


@st.composite
def _valid_trajectories(draw) -> Trajectory:
    """Schema-conforming trajectories with whole-second timestamps."""
    from audiospan.timeline import format_interval

    task = draw(st.sampled_from([TaskKind.TAG, TaskKind.TAC, TaskKind.DAC]))
    turns: list = []
    if draw(st.booleans()):
        bounds = sorted(draw(st.sets(_second, min_size=3, max_size=6)))
        segments = tuple(
            TimelineSegment(parse_interval_pair(bounds[i], bounds[i + 1]), draw(_phrase))
            for i in range(len(bounds) - 1)
        )
        turns.append(TimelineTurn(GlobalTimeline(segments)))
    steps = draw(st.integers(min_value=0, max_value=4))
    for _ in range(steps):
        turns.append(ThinkTurn(draw(_phrase)))
        start = draw(st.floats(min_value=0, max_value=500, allow_nan=False))
        turns.append(ToolCallTurn(start, start + draw(st.floats(0.5, 50, allow_nan=False))))
        turns.append(ToolResponseTurn("Segment extracted: <audio>"))
    turns.append(ThinkTurn(draw(_phrase)))
    if task is TaskKind.TAG:
        turns.append(AnswerTurn(format_interval(draw(_whole_second_interval()))))
    elif task is TaskKind.TAC:
        turns.append(AnswerTurn(draw(_phrase)))
    else:
        lines = [
            f"{format_interval(draw(_whole_second_interval()))}: {draw(_phrase)}"
            for _ in range(draw(st.integers(min_value=1, max_value=3)))
        ]
        turns.append(AnswerTurn("\n".join(lines)))
    return Trajectory(task, turns)


class TestGenerativeProperties:
    @given(_valid_trajectories())
    def test_round_trip_identity(self, trajectory):
        document = serialize_trajectory(trajectory)
        reparsed = parse_trajectory(document, trajectory.task_kind)
        assert reparsed.turns == trajectory.turns
        assert serialize_trajectory(reparsed) == document

    @given(_valid_trajectories())
    def test_generated_trajectories_conform(self, trajectory):
        ok, violations = validate_format(trajectory)
        errors = [v for v in violations if v.severity == "error"]
        assert ok, errors

    @given(
        st.lists(
            st.one_of(
                st.builds(ThinkTurn, _phrase),
                st.builds(
                    ToolCallTurn,
                    st.floats(-10, 600, allow_nan=False),
                    st.floats(-10, 600, allow_nan=False),
                ),
                st.builds(ToolResponseTurn, _phrase),
                st.builds(AnswerTurn, _phrase),
            ),
            max_size=8,
        ),
        st.sampled_from([TaskKind.TAG, TaskKind.TAC, TaskKind.DAC, None]),
    )
    def test_validation_total_on_turn_soup(self, turns, task):
        ok, violations = validate_format(Trajectory(task, turns))
        assert isinstance(ok, bool)
        assert all(v.severity in ("error", "warning") for v in violations)
