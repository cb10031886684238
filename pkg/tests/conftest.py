from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from audiospan import AudioBuffer, Interval, TaskInstance, TaskKind, save_wav
from audiospan.timeline import parse_timestamp

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text("utf-8")


def load_fixture_json(name: str) -> dict:
    return json.loads(load_fixture_text(name))


def interval(start: str, end: str) -> Interval:
    return Interval(parse_timestamp(start), parse_timestamp(end))


def make_buffer(seconds: float, sample_rate: int = 800, seed: int = 0) -> AudioBuffer:
    rng = np.random.default_rng(seed)
    n = int(round(seconds * sample_rate))
    samples = rng.integers(-(1 << 15), 1 << 15, size=n, dtype=np.int64).astype(np.int16)
    return AudioBuffer(samples=samples, sample_rate=sample_rate)


def write_wav(path: Path, seconds: float, sample_rate: int = 800, seed: int = 0) -> AudioBuffer:
    buffer = make_buffer(seconds, sample_rate, seed)
    save_wav(str(path), buffer)
    return buffer


TAG_QUERY = (
    "Please locate the final conclusion of the interview where the speaker, "
    'in a calm and firm tone, states that he should return to his original '
    'intention and focus on "playing the piano well".'
)

DAC_FIXTURE_CAPTIONS = [
    ("00:00", "01:13", "The speaker recalls growing up near MIT and shares an anecdote about a fake equation inspiring Good Will Hunting...."),
    ("01:14", "02:10", "He humorously reads a satirical review of the film, triggering audience laughter...."),
    ("02:11", "02:46", "The speaker introduces Simulation Theory...."),
    ("02:47", "04:10", "He explains the concept and delivers political satire, triggering applause...."),
    ("04:11", "05:52", "The speaker delivers an inspiring call to action on global challenges...."),
]

TAC_FIXTURE_CAPTION = (
    "Against a background of live audience murmurs, the guest humorously explains "
    "that her house is full of things stolen from her mother. She presents a bowl "
    "used for AirPods and jokes it might be a Picasso piece, triggering loud "
    "audience laughter."
)


@pytest.fixture
def tag_instance() -> TaskInstance:
    return TaskInstance(
        instance_id="tag-golden",
        task_kind=TaskKind.TAG,
        audio_ref="tag.wav",
        duration=parse_timestamp("08:51"),
        query=TAG_QUERY,
        ground_truth=interval("08:42", "08:51"),
    )


@pytest.fixture
def dac_instance() -> TaskInstance:
    return TaskInstance(
        instance_id="dac-golden",
        task_kind=TaskKind.DAC,
        audio_ref="dac.wav",
        duration=parse_timestamp("05:52"),
        ground_truth=[(interval(s, e), text) for s, e, text in DAC_FIXTURE_CAPTIONS],
    )


@pytest.fixture
def tac_instance() -> TaskInstance:
    return TaskInstance(
        instance_id="tac-golden",
        task_kind=TaskKind.TAC,
        audio_ref="tac.wav",
        duration=parse_timestamp("03:43"),
        target_interval=interval("01:49", "02:10"),
        ground_truth=TAC_FIXTURE_CAPTION,
    )


@pytest.fixture
def tag_audio() -> AudioBuffer:
    return make_buffer(531.0, seed=1)


@pytest.fixture
def dac_audio() -> AudioBuffer:
    return make_buffer(352.0, seed=2)


@pytest.fixture
def tac_audio() -> AudioBuffer:
    return make_buffer(223.0, seed=3)
