"""Caption similarity scoring behind a single pluggable interface.

The learned caption-quality model used for paper-faithful evaluation is an
external service; this module ships a deterministic token-F1 scorer so the
toolkit runs (and is testable) without it, plus a stream/TCP adapter speaking
a line-delimited wire protocol for plugging the real model in.

Wire protocol (documented in docs/formats.md): the client sends one JSON
object per line, ``{"reference": ..., "candidate": ...}``, and the server
replies with one decimal number per line. Replies are clamped to [0, 1].
"""

from __future__ import annotations

import json
import socket
import threading
import unicodedata
from collections import Counter
from typing import IO, Protocol

from .errors import ScorerError

# CJK ideograph blocks tokenized per character (the benchmark corpora are
# bilingual Chinese/English and Chinese text carries no word spacing).
_CJK_RANGES = ((0x3400, 0x4DBF), (0x4E00, 0x9FFF), (0xF900, 0xFAFF))


class SemanticScorer(Protocol):
    """Scores a (reference, candidate) caption pair in [0, 1]."""

    def score(self, reference: str, candidate: str) -> float: ...


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace; CJK ideographs
    become single-character tokens."""
    tokens: list[str] = []
    word: list[str] = []

    def flush() -> None:
        if word:
            tokens.append("".join(word))
            word.clear()

    for ch in text.lower():
        if _is_cjk(ch):
            flush()
            tokens.append(ch)
        elif ch.isspace():
            flush()
        elif unicodedata.category(ch).startswith("P"):
            flush()
        else:
            word.append(ch)
    flush()
    return tokens


def token_f1_score(reference: str, candidate: str) -> float:
    """Multiset token F1 between two captions.

    Both empty tokenizes to 1.0 (vacuously identical), exactly one empty to
    0.0. Symmetric and bounded in [0, 1].
    """
    ref = Counter(tokenize(reference))
    cand = Counter(tokenize(candidate))
    n_ref, n_cand = sum(ref.values()), sum(cand.values())
    if n_ref == 0 and n_cand == 0:
        return 1.0
    if n_ref == 0 or n_cand == 0:
        return 0.0
    overlap = sum((ref & cand).values())
    return 2.0 * overlap / (n_ref + n_cand)


class TokenF1Scorer:
    """Built-in deterministic scorer; the test oracle for semantic values."""

    name = "token-f1"

    def score(self, reference: str, candidate: str) -> float:
        return token_f1_score(reference, candidate)


class StreamScorer:
    """Scorer forwarding pairs over a byte-stream pair speaking the wire
    protocol. Calls are serialized internally, so one instance may be shared
    across workers."""

    name = "external"

    def __init__(self, reader: IO[bytes], writer: IO[bytes]):
        self._reader = reader
        self._writer = writer
        self._lock = threading.Lock()

    def score(self, reference: str, candidate: str) -> float:
        request = json.dumps(
            {"reference": reference, "candidate": candidate}, ensure_ascii=False
        )
        with self._lock:
            try:
                self._writer.write(request.encode("utf-8") + b"\n")
                self._writer.flush()
                line = self._reader.readline()
            except OSError as exc:
                raise ScorerError(f"scorer stream failed: {exc}") from exc
        if not line:
            raise ScorerError("scorer stream closed before replying")
        try:
            value = float(line.decode("utf-8").strip())
        except (UnicodeDecodeError, ValueError) as exc:
            raise ScorerError(f"scorer reply {line!r} is not a decimal") from exc
        return min(1.0, max(0.0, value))


def connect_scorer(endpoint: str, timeout: float = 10.0) -> StreamScorer:
    """Open a TCP connection to a ``host:port`` scorer endpoint."""
    host, sep, port = endpoint.rpartition(":")
    if not sep or not port.isdigit():
        raise ScorerError(f"scorer endpoint {endpoint!r} is not host:port")
    try:
        sock = socket.create_connection((host, int(port)), timeout=timeout)
    except OSError as exc:
        raise ScorerError(f"cannot reach scorer at {endpoint}: {exc}") from exc
    return StreamScorer(sock.makefile("rb"), sock.makefile("wb"))


def resolve_scorer(spec: str) -> SemanticScorer:
    """Map a CLI scorer selector to a scorer instance.

    ``token-f1`` selects the built-in scorer; ``external:HOST:PORT`` connects
    to a remote one.
    """
    if spec == "token-f1":
        return TokenF1Scorer()
    if spec.startswith("external:"):
        return connect_scorer(spec[len("external:"):])
    raise ScorerError(f"unknown scorer {spec!r} (use token-f1 or external:HOST:PORT)")
