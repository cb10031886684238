from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from audiospan.annotations import (
    AnnotationSet,
    SpeechSegment,
    TaskKind,
    TrackEvent,
    ViolationKind,
    merge_chunks,
    parse_annotation,
    parse_predictions,
    parse_task_instances,
    serialize_annotation,
    validate_annotation,
)
from audiospan.errors import MergeError, RangeError, SchemaError
from audiospan.timeline import Interval, TimePoint, parse_timestamp

from .conftest import interval, load_fixture_text


@pytest.fixture
def golden_annotation() -> AnnotationSet:
    return parse_annotation(load_fixture_text("atomic_annotation.json"))


class TestParseAnnotation:
    def test_golden_example(self, golden_annotation):
        a = golden_annotation
        assert len(a.speech) == 6
        assert len(a.events) == 1
        assert len(a.music) == 1
        assert len(a.background) == 1
        assert a.duration == parse_timestamp("01:00")
        assert a.speech[0].interval == interval("00:03", "00:09")
        assert a.speech[0].transcription.startswith("Is 29,000 US")
        assert a.events[0].description == "Soft electronic beep from car interaction."

    def test_empty_tracks(self):
        a = parse_annotation({"summary": "s", "duration": "01:00", "tracks": {}})
        assert a.speech == () and a.events == () and a.music == () and a.background == ()

    def test_inverted_interval_parses_then_flags(self):
        doc = {
            "summary": "s",
            "duration": "01:00",
            "tracks": {"events": [{"start": "00:33", "end": "00:32", "description": "d"}]},
        }
        a = parse_annotation(doc)
        violations = validate_annotation(a)
        assert [v.kind for v in violations] == [ViolationKind.INVERTED_INTERVAL]
        assert violations[0].location == "events[0]"

    def test_missing_key_names_it(self):
        with pytest.raises(SchemaError, match="duration"):
            parse_annotation({"summary": "s", "tracks": {}})
        with pytest.raises(SchemaError, match="transcription"):
            parse_annotation(
                {
                    "summary": "s",
                    "duration": "01:00",
                    "tracks": {"speech": [{"start": "00:00", "end": "00:01"}]},
                }
            )

    def test_malformed_timestamp_carries_path(self):
        doc = {
            "summary": "s",
            "duration": "01:00",
            "tracks": {"music": [{"start": "oops", "end": "00:10", "description": "d"}]},
        }
        with pytest.raises(Exception, match=r"tracks\.music\[0\]\.start"):
            parse_annotation(doc)

    def test_content_is_optional(self):
        doc = {
            "summary": "s",
            "duration": "01:00",
            "tracks": {
                "speech": [
                    {"start": "00:00", "end": "00:05", "transcription": "hello there"}
                ]
            },
        }
        a = parse_annotation(doc)
        assert a.speech[0].content == ""
        assert validate_annotation(a) == []


class TestValidateAnnotation:
    def test_golden_example_clean(self, golden_annotation):
        assert validate_annotation(golden_annotation) == []

    def test_out_of_range(self):
        doc = {
            "summary": "s",
            "duration": "01:00",
            "tracks": {"events": [{"start": "00:10", "end": "01:30", "description": "d"}]},
        }
        violations = validate_annotation(parse_annotation(doc))
        assert [v.kind for v in violations] == [ViolationKind.OUT_OF_RANGE]
        assert violations[0].location == "events[0]"

    def test_empty_transcription(self):
        doc = {
            "summary": "s",
            "duration": "01:00",
            "tracks": {
                "speech": [
                    {"start": "00:00", "end": "00:05", "transcription": "  "}
                ]
            },
        }
        violations = validate_annotation(parse_annotation(doc))
        assert [v.kind for v in violations] == [ViolationKind.EMPTY_FIELD]

    def test_unsorted_track(self):
        doc = {
            "summary": "s",
            "duration": "01:00",
            "tracks": {
                "events": [
                    {"start": "00:30", "end": "00:40", "description": "late"},
                    {"start": "00:10", "end": "00:20", "description": "early"},
                ]
            },
        }
        violations = validate_annotation(parse_annotation(doc))
        assert ViolationKind.UNSORTED_TRACK in {v.kind for v in violations}

    def test_clean_implies_in_range(self, golden_annotation):
        for name in ("speech", "events", "music", "background"):
            for item in golden_annotation.track(name):
                assert item.interval.end <= golden_annotation.duration


class TestSerializeRoundTrip:
    def test_identity(self, golden_annotation):
        text = serialize_annotation(golden_annotation)
        assert parse_annotation(text) == golden_annotation

    def test_idempotent_bytes(self, golden_annotation):
        once = serialize_annotation(golden_annotation)
        twice = serialize_annotation(parse_annotation(once))
        assert once == twice


def _chunk(duration: str, events: list[tuple[str, str, str]]) -> AnnotationSet:
    return parse_annotation(
        {
            "summary": "",
            "duration": duration,
            "tracks": {
                "events": [
                    {"start": s, "end": e, "description": d} for s, e, d in events
                ]
            },
        }
    )


class TestMergeChunks:
    def test_single_chunk_identity(self):
        chunk = _chunk("05:00", [("00:10", "00:20", "a door slams")])
        merged = merge_chunks([(TimePoint(0), chunk)])
        assert merged.events == chunk.events
        assert merged.duration == chunk.duration

    def test_seam_coalesce(self):
        first = _chunk("05:00", [("04:58", "05:00", "rain")])
        second = _chunk("05:00", [("00:00", "00:07", "rain")])
        merged = merge_chunks([(TimePoint(0), first), (parse_timestamp("05:00"), second)])
        assert len(merged.events) == 1
        assert merged.events[0].interval == interval("04:58", "05:07")
        assert merged.duration == parse_timestamp("10:00")

    def test_offset_arithmetic(self):
        doc = {
            "summary": "",
            "duration": "05:00",
            "tracks": {
                "speech": [
                    {"start": "00:10", "end": "00:15", "transcription": "hi"}
                ]
            },
        }
        merged = merge_chunks(
            [
                (TimePoint(0), _chunk("05:00", [])),
                (parse_timestamp("05:00"), parse_annotation(doc)),
            ]
        )
        assert merged.speech[0].interval == interval("05:10", "05:15")

    def test_different_text_not_fused(self):
        first = _chunk("05:00", [("04:58", "05:00", "rain")])
        second = _chunk("05:00", [("00:00", "00:07", "thunder")])
        merged = merge_chunks([(TimePoint(0), first), (parse_timestamp("05:00"), second)])
        assert len(merged.events) == 2

    def test_gap_beyond_tolerance_not_fused(self):
        first = _chunk("05:00", [("04:50", "04:59", "rain")])
        second = _chunk("05:00", [("00:01", "00:07", "rain")])
        merged = merge_chunks([(TimePoint(0), first), (parse_timestamp("05:00"), second)])
        # 2 s gap across the seam
        assert len(merged.events) == 2

    def test_overlapping_chunks_rejected(self):
        chunk = _chunk("05:00", [])
        with pytest.raises(MergeError):
            merge_chunks([(TimePoint(0), chunk), (parse_timestamp("04:00"), chunk)])

    def test_unordered_offsets_rejected(self):
        chunk = _chunk("01:00", [])
        with pytest.raises(MergeError):
            merge_chunks([(parse_timestamp("05:00"), chunk), (TimePoint(0), chunk)])

    def test_partition_round_trip(self):
        # split one annotation at a 5-minute boundary, merge reconstructs it
        original = _chunk(
            "10:00",
            [
                ("00:10", "00:20", "door"),
                ("04:00", "05:00", "music"),
                ("05:00", "06:30", "music"),
                ("07:00", "07:10", "applause"),
            ],
        )
        first = _chunk("05:00", [("00:10", "00:20", "door"), ("04:00", "05:00", "music")])
        second = _chunk("05:00", [("00:00", "01:30", "music"), ("02:00", "02:10", "applause")])
        merged = merge_chunks([(TimePoint(0), first), (parse_timestamp("05:00"), second)])
        expected = merge_chunks([(TimePoint(0), original)])
        assert merged.events == expected.events
        assert merged.duration == expected.duration


class TestParseTaskInstances:
    def test_tag_instance(self):
        doc = {
            "instances": [
                {
                    "id": "t1",
                    "task": "tag",
                    "audio": "a.wav",
                    "duration": "08:51",
                    "query": "find the conclusion",
                    "interval": {"start": "08:42", "end": "08:51"},
                }
            ]
        }
        (instance,) = parse_task_instances(doc)
        assert instance.task_kind is TaskKind.TAG
        assert instance.ground_truth == interval("08:42", "08:51")

    def test_tac_instance(self):
        doc = {
            "instances": [
                {
                    "id": "t2",
                    "task": "tac",
                    "audio": "a.wav",
                    "duration": "03:43",
                    "interval": {"start": "01:49", "end": "02:10"},
                    "caption": "a guest jokes about a bowl",
                }
            ]
        }
        (instance,) = parse_task_instances(doc)
        assert instance.target_interval == interval("01:49", "02:10")

    def test_dac_requires_captions(self):
        doc = {
            "instances": [
                {"id": "d1", "task": "dac", "audio": "a.wav", "duration": "05:52", "captions": []}
            ]
        }
        with pytest.raises(SchemaError, match="non-empty captions"):
            parse_task_instances(doc)

    def test_tag_missing_query(self):
        doc = {
            "instances": [
                {
                    "id": "t3",
                    "task": "tag",
                    "audio": "a.wav",
                    "duration": "01:00",
                    "interval": {"start": "00:00", "end": "00:10"},
                }
            ]
        }
        with pytest.raises(SchemaError, match="query"):
            parse_task_instances(doc)

    def test_interval_beyond_duration(self):
        doc = {
            "instances": [
                {
                    "id": "t4",
                    "task": "tag",
                    "audio": "a.wav",
                    "duration": "01:00",
                    "query": "q",
                    "interval": {"start": "00:50", "end": "01:30"},
                }
            ]
        }
        with pytest.raises(RangeError, match=r"instances\[0\]"):
            parse_task_instances(doc)

    def test_numeric_second_timestamps(self):
        doc = {
            "instances": [
                {
                    "id": "t5",
                    "task": "tag",
                    "audio": "a.wav",
                    "duration": 60,
                    "query": "q",
                    "interval": {"start": 10.0, "end": 20.5},
                }
            ]
        }
        (instance,) = parse_task_instances(doc)
        assert instance.ground_truth == Interval(TimePoint(10_000), TimePoint(20_500))


class TestParsePredictions:
    def test_tag_predictions(self):
        doc = {
            "predictions": [
                {"id": "a", "interval": {"start": "00:10", "end": "00:20"}},
                {"id": "b", "interval": None},
            ]
        }
        predictions = parse_predictions(doc, TaskKind.TAG)
        assert predictions["a"] == interval("00:10", "00:20")
        assert predictions["b"] is None

    def test_dac_predictions(self):
        doc = {
            "predictions": [
                {
                    "id": "a",
                    "captions": [
                        {"start": "00:00", "end": "00:10", "caption": "music"}
                    ],
                }
            ]
        }
        predictions = parse_predictions(doc, TaskKind.DAC)
        assert predictions["a"] == [(interval("00:00", "00:10"), "music")]

    def test_tac_predictions(self):
        predictions = parse_predictions(
            {"predictions": [{"id": "a", "caption": "x"}, {"id": "b"}]}, TaskKind.TAC
        )
        assert predictions == {"a": "x", "b": None}


_phrase = st.lists(
    st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=8),
    min_size=1,
    max_size=4,
).map(" ".join)


@st.composite
def _annotation_sets(draw) -> AnnotationSet:
    """Whole-second annotation sets with sorted in-range tracks."""
    duration_s = draw(st.integers(min_value=10, max_value=600))

    def track_entries(n):
        entries = []
        starts = sorted(draw(st.lists(
            st.integers(min_value=0, max_value=duration_s - 1),
            min_size=n, max_size=n,
        )))
        for start in starts:
            end = draw(st.integers(min_value=start, max_value=duration_s))
            entries.append(interval(f"{start // 60:02d}:{start % 60:02d}",
                                    f"{end // 60:02d}:{end % 60:02d}"))
        return entries

    speech = tuple(
        SpeechSegment(iv, draw(_phrase), draw(_phrase), draw(_phrase))
        for iv in track_entries(draw(st.integers(0, 3)))
    )
    def events():
        return tuple(TrackEvent(iv, draw(_phrase))
                     for iv in track_entries(draw(st.integers(0, 3))))
    return AnnotationSet(
        summary=draw(_phrase),
        duration=parse_timestamp(f"{duration_s // 60:02d}:{duration_s % 60:02d}"),
        speech=speech,
        events=events(),
        music=events(),
        background=events(),
    )


class TestGenerativeRoundTrip:
    @given(_annotation_sets())
    def test_serialize_parse_identity(self, annotation):
        assert parse_annotation(serialize_annotation(annotation)) == annotation

    @given(_annotation_sets())
    def test_generated_sets_validate_clean(self, annotation):
        assert validate_annotation(annotation) == []
        for name in ("speech", "events", "music", "background"):
            for item in annotation.track(name):
                assert item.interval.end <= annotation.duration
