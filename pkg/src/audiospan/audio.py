"""Sample-accurate WAV loading, cropping, and temporal decimation.

The canonical in-memory form is mono signed 16-bit PCM in a numpy array;
multichannel input is downmixed on load. Crop windows are given in seconds
and resolved to sample indices with floor semantics; a crop may overshoot
the audio end by up to 50 ms (model-emitted tool calls routinely round past
the end), while windows beyond that raise CropRangeError, the runtime
detector of temporally hallucinated tool calls.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np

from .errors import AudioFormatError, CorruptAudioError, CropRangeError
from .timeline import TimePoint

CROP_SLACK_SECONDS = 0.05
DECIMATION_FACTORS = (1, 2, 4, 8)

# Forgiveness when a float seconds-times-rate product lands a hair under an
# integer; far below one sample period, so floor semantics are preserved.
_INDEX_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono 16-bit PCM audio."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.samples.dtype != np.int16 or self.samples.ndim != 1:
            raise ValueError("samples must be a 1-D int16 array")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> TimePoint:
        return TimePoint((len(self.samples) * 1000 + self.sample_rate // 2) // self.sample_rate)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AudioBuffer):
            return NotImplemented
        return self.sample_rate == other.sample_rate and np.array_equal(
            self.samples, other.samples
        )


def load_wav(path: str) -> AudioBuffer:
    """Load a RIFF/WAVE PCM-16 file; multichannel input is averaged to mono."""
    try:
        reader = wave.open(str(path), "rb")
    except wave.Error as exc:
        raise AudioFormatError(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise CorruptAudioError(f"{path}: file ends inside the header") from exc
    with reader:
        if reader.getcomptype() != "NONE":
            raise AudioFormatError(f"{path}: compressed WAV ({reader.getcomptype()}) unsupported")
        if reader.getsampwidth() != 2:
            raise AudioFormatError(
                f"{path}: only 16-bit PCM supported, got {8 * reader.getsampwidth()}-bit"
            )
        channels = reader.getnchannels()
        n_frames = reader.getnframes()
        raw = reader.readframes(n_frames)
        sample_rate = reader.getframerate()
    expected = n_frames * channels * 2
    if len(raw) < expected:
        raise CorruptAudioError(
            f"{path}: data chunk holds {len(raw)} bytes, header claims {expected}"
        )
    samples = np.frombuffer(raw, dtype="<i2").astype(np.int16)
    if channels > 1:
        samples = (
            samples.reshape(-1, channels).astype(np.int32).sum(axis=1) // channels
        ).astype(np.int16)
    return AudioBuffer(samples=samples, sample_rate=sample_rate)


def save_wav(path: str, audio: AudioBuffer) -> None:
    """Write a buffer back as mono PCM-16 WAV, bit-exactly."""
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(audio.sample_rate)
        writer.writeframes(audio.samples.astype("<i2").tobytes())


def crop_audio(audio: AudioBuffer, start_sec: float, end_sec: float) -> AudioBuffer:
    """Extract samples [floor(start*sr), floor(end*sr)) as a new buffer.

    Raises ValueError for a non-forward window and CropRangeError when the
    window lies outside the audio (beyond the 50 ms end slack).
    """
    if start_sec < 0:
        raise ValueError(f"crop start {start_sec}s is negative")
    if start_sec >= end_sec:
        raise ValueError(f"crop window [{start_sec}, {end_sec}] has start >= end")
    duration_sec = audio.duration.millis / 1000.0
    if start_sec >= duration_sec:
        raise CropRangeError(
            f"crop start {start_sec}s is beyond the {duration_sec}s audio"
        )
    if end_sec > duration_sec + CROP_SLACK_SECONDS:
        raise CropRangeError(
            f"crop end {end_sec}s overshoots the {duration_sec}s audio "
            f"beyond {int(CROP_SLACK_SECONDS * 1000)} ms slack"
        )
    sr = audio.sample_rate
    first = int(start_sec * sr + _INDEX_EPS)
    last = min(int(end_sec * sr + _INDEX_EPS), len(audio.samples))
    return AudioBuffer(samples=audio.samples[first:last].copy(), sample_rate=sr)


def decimate(audio: AudioBuffer, factor: int) -> AudioBuffer:
    """Keep every factor-th sample and divide the sample rate accordingly.

    The factor must be one of 1, 2, 4, 8 and divide the sample rate so the
    duration is preserved exactly.
    """
    if factor not in DECIMATION_FACTORS:
        raise ValueError(f"decimation factor must be one of {DECIMATION_FACTORS}, got {factor}")
    if audio.sample_rate % factor != 0:
        raise ValueError(
            f"decimation factor {factor} does not divide sample rate {audio.sample_rate}"
        )
    if factor == 1:
        return AudioBuffer(samples=audio.samples.copy(), sample_rate=audio.sample_rate)
    return AudioBuffer(
        samples=audio.samples[::factor].copy(),
        sample_rate=audio.sample_rate // factor,
    )
