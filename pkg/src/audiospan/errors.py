"""Exception types shared across the toolkit.

Data problems (malformed files, out-of-range values) get dedicated
exception classes so callers can distinguish them from programmer errors,
which raise plain ValueError/TypeError.
"""


class AudiospanError(Exception):
    """Base class for all toolkit-specific errors."""


class ParseError(AudiospanError):
    """Malformed textual input (timestamps, documents, tags)."""


class SchemaError(AudiospanError):
    """Structurally invalid document: missing or ill-typed keys."""


class RangeError(AudiospanError):
    """A value is outside its permitted range (e.g. seconds field >= 60)."""


class MergeError(AudiospanError):
    """Chunked annotations cannot be merged (overlapping or unordered spans)."""


class ScorerError(AudiospanError):
    """A semantic scorer failed to produce a score."""


class AudioFormatError(AudiospanError):
    """Audio file uses an unsupported encoding."""


class CorruptAudioError(AudiospanError):
    """Audio file is structurally damaged (truncated data chunk etc.)."""


class CropRangeError(AudiospanError):
    """A crop window lies outside the audio. This is the runtime signal of a
    temporally hallucinated tool call."""


class BackendError(AudiospanError):
    """A model backend failed or violated the turn protocol."""
