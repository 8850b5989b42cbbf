"""Time-aligned phone transcripts: the aligner output the engine consumes.

File format, one record per line::

    symbol<TAB>start_ms<TAB>end_ms

Lines starting with ``#`` are comments. A comment of the form
``# duration_ms: N`` sets the total duration; when it exceeds the last
segment's end the remainder is implied trailing silence.
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Optional

SILENCE = "sil"

_DURATION_RE = re.compile(r"^#\s*duration_ms\s*:\s*(\S+)\s*$")


class TranscriptError(ValueError):
    """Base class for transcript parse failures. ``line`` is 1-based when known."""

    kind = "TranscriptError"

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownSymbol(TranscriptError):
    kind = "UnknownSymbol"


class NonMonotonic(TranscriptError):
    kind = "NonMonotonic"


class MalformedLine(TranscriptError):
    kind = "MalformedLine"


@dataclass(frozen=True)
class PhoneSegment:
    symbol: str
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Transcript:
    segments: tuple = ()
    total_duration: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    index: int
    message: str = field(default="", compare=False)

    def __str__(self):
        return f"{self.kind} at index {self.index}: {self.message}"


def _default_inventory() -> frozenset:
    from maskface.viseme import default_table

    return default_table().inventory


def normalize_symbol(symbol: str) -> str:
    return unicodedata.normalize("NFC", symbol.strip())


def parse_transcript(text: str, inventory: Optional[Iterable[str]] = None) -> Transcript:
    """Parse transcript-file content into a validated :class:`Transcript`.

    Raises :class:`MalformedLine`, :class:`UnknownSymbol` or
    :class:`NonMonotonic`, each carrying the offending line number.
    """
    inv = frozenset(inventory) if inventory is not None else _default_inventory()
    segments = []
    declared = None
    prev_end = 0.0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip("\r\n")
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            m = _DURATION_RE.match(line.strip())
            if m:
                try:
                    declared = int(m.group(1)) / 1000.0
                except ValueError:
                    raise MalformedLine(f"bad duration directive {m.group(1)!r}", lineno)
                if declared < 0:
                    raise MalformedLine("negative duration directive", lineno)
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedLine(f"expected 3 tab-separated fields, got {len(fields)}", lineno)
        symbol = normalize_symbol(fields[0])
        try:
            start_ms, end_ms = int(fields[1]), int(fields[2])
        except ValueError:
            raise MalformedLine(f"non-integer time in {line!r}", lineno)
        if symbol != SILENCE and symbol not in inv:
            raise UnknownSymbol(f"unknown phoneme symbol {symbol!r}", lineno)
        start, end = start_ms / 1000.0, end_ms / 1000.0
        if start < 0:
            raise NonMonotonic("negative start time", lineno)
        if end <= start:
            raise NonMonotonic(f"end {end_ms} ms not after start {start_ms} ms", lineno)
        if start < prev_end:
            raise NonMonotonic(f"segment starts at {start_ms} ms, before previous end", lineno)
        segments.append(PhoneSegment(symbol, start, end))
        prev_end = end
    last = segments[-1].end if segments else 0.0
    total = last if declared is None else declared
    if total < last:
        raise NonMonotonic(f"duration directive {total} s ends before last segment ({last} s)")
    return Transcript(tuple(segments), total)


def serialize_transcript(transcript: Transcript) -> str:
    """Inverse of :func:`parse_transcript` for millisecond-aligned transcripts."""
    lines = []
    last = transcript.segments[-1].end if transcript.segments else 0.0
    if transcript.total_duration != last:
        lines.append(f"# duration_ms: {round(transcript.total_duration * 1000)}")
    for seg in transcript.segments:
        lines.append(f"{seg.symbol}\t{round(seg.start * 1000)}\t{round(seg.end * 1000)}")
    return "\n".join(lines) + ("\n" if lines else "")


def validate(transcript: Transcript, inventory: Optional[Iterable[str]] = None) -> list:
    """Return one :class:`Diagnostic` per invariant violation (empty when valid)."""
    inv = frozenset(inventory) if inventory is not None else _default_inventory()
    diags = []
    prev = None
    for i, seg in enumerate(transcript.segments):
        if seg.symbol != SILENCE and seg.symbol not in inv:
            diags.append(Diagnostic("UnknownSymbol", i, repr(seg.symbol)))
        if seg.start < 0:
            diags.append(Diagnostic("NegativeStart", i, f"start {seg.start}"))
        if not seg.end > seg.start:
            diags.append(Diagnostic("NonPositiveDuration", i, f"{seg.start}-{seg.end}"))
        if prev is not None:
            if seg.start < prev.start:
                diags.append(Diagnostic("Unsorted", i, f"start {seg.start} < {prev.start}"))
            elif seg.start < prev.end:
                diags.append(Diagnostic("Overlap", i, f"starts {seg.start}, previous ends {prev.end}"))
        prev = seg
    if transcript.segments:
        last_end = max(s.end for s in transcript.segments)
        if transcript.total_duration < last_end:
            diags.append(
                Diagnostic("DurationTooShort", len(transcript.segments) - 1,
                           f"total {transcript.total_duration} < {last_end}")
            )
    elif transcript.total_duration < 0:
        diags.append(Diagnostic("DurationTooShort", 0, "negative total duration"))
    return diags
