"""Viseme inventory, phoneme-to-viseme mapping and labial duration extension."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

from maskface.transcript import SILENCE, Transcript, UnknownSymbol, normalize_symbol

N_VISEMES = 20
NEUTRAL = 0

# One frame at 30 fps.
DEFAULT_MIN_DURATION = 1.0 / 30.0
DEFAULT_MAX_EXTENSION = 0.060


class VisemeTableError(ValueError):
    pass


@dataclass(frozen=True)
class VisemeClass:
    id: int
    name: str
    members: frozenset
    is_labial: bool = False
    is_labiodental: bool = False

    @property
    def closes_lips(self) -> bool:
        return self.is_labial or self.is_labiodental


@dataclass(frozen=True)
class VisemeSegment:
    viseme_id: int
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


class VisemeTable:
    """Immutable partition of a phoneme inventory into viseme classes."""

    def __init__(self, classes: Sequence[VisemeClass]):
        classes = sorted(classes, key=lambda c: c.id)
        if len(classes) != N_VISEMES:
            raise VisemeTableError(f"expected {N_VISEMES} viseme classes, got {len(classes)}")
        if [c.id for c in classes] != list(range(N_VISEMES)):
            raise VisemeTableError("class ids must be 0..19 without gaps")
        lookup = {}
        for c in classes:
            for sym in c.members:
                if sym in lookup:
                    raise VisemeTableError(
                        f"symbol {sym!r} in classes {lookup[sym]} and {c.id}")
                lookup[sym] = c.id
        if lookup.get(SILENCE) != NEUTRAL:
            raise VisemeTableError(f"{SILENCE!r} must belong to the neutral class {NEUTRAL}")
        self.classes = tuple(classes)
        self._lookup = lookup

    @property
    def inventory(self) -> frozenset:
        """Phoneme symbols, excluding the silence symbol."""
        return frozenset(s for s in self._lookup if s != SILENCE)

    @property
    def labial_ids(self) -> frozenset:
        return frozenset(c.id for c in self.classes if c.closes_lips)

    def class_of(self, symbol: str) -> VisemeClass:
        try:
            return self.classes[self._lookup[normalize_symbol(symbol)]]
        except KeyError:
            raise UnknownSymbol(f"unknown phoneme symbol {symbol!r}") from None

    def __len__(self):
        return len(self.classes)


def parse_viseme_table(text: str) -> VisemeTable:
    classes = []
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    for row in csv.reader(io.StringIO("\n".join(lines))):
        if len(row) < 4:
            raise VisemeTableError(f"viseme row needs id,name,flags,members...: {row!r}")
        flags = row[2].strip().upper()
        classes.append(VisemeClass(
            id=int(row[0]),
            name=row[1].strip(),
            members=frozenset(normalize_symbol(s) for s in row[3:] if s.strip()),
            is_labial="L" in flags,
            is_labiodental="D" in flags,
        ))
    return VisemeTable(classes)


def load_viseme_table(path: Union[str, Path]) -> VisemeTable:
    return parse_viseme_table(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=None)
def default_table() -> VisemeTable:
    text = resources.files("maskface.data").joinpath("visemes.csv").read_text(encoding="utf-8")
    return parse_viseme_table(text)


def map_phoneme(symbol: str, table: Optional[VisemeTable] = None) -> VisemeClass:
    return (table or default_table()).class_of(symbol)


def to_viseme_segments(transcript: Transcript, table: Optional[VisemeTable] = None) -> list:
    """Map each phone to its viseme class, merging adjacent same-class runs.

    Segments separated by a gap are never merged.
    """
    table = table or default_table()
    out = []
    for seg in transcript.segments:
        vid = table.class_of(seg.symbol).id
        if out and out[-1].viseme_id == vid and out[-1].end == seg.start:
            out[-1] = replace(out[-1], end=seg.end)
        else:
            out.append(VisemeSegment(vid, seg.start, seg.end))
    return out


def extend_labials(
    segments: Sequence[VisemeSegment],
    max_extension: float = DEFAULT_MAX_EXTENSION,
    min_duration: float = DEFAULT_MIN_DURATION,
    table: Optional[VisemeTable] = None,
) -> list:
    """Pull each lip-closing segment's start back over the preceding silence.

    A labial/labiodental segment ending at ``e`` is extended to start at
    ``e - max(max_extension, min_duration)`` but never before the end of
    the nearest preceding non-silent segment. Explicit silence segments in
    the way are trimmed or dropped. Segments never get shorter except
    silence, and a second pass changes nothing.
    """
    labials = (table or default_table()).labial_ids
    reach = max(max_extension, min_duration)
    out = list(segments)
    i = 0
    while i < len(out):
        seg = out[i]
        if seg.viseme_id not in labials:
            i += 1
            continue
        j = i - 1
        while j >= 0 and out[j].viseme_id == NEUTRAL:
            j -= 1
        boundary = out[j].end if j >= 0 else 0.0
        new_start = min(seg.start, max(boundary, seg.end - reach))
        if new_start < seg.start:
            out[i] = replace(seg, start=new_start)
            kept = []
            for k in range(j + 1, i):
                sil = out[k]
                if sil.start >= new_start:
                    continue
                kept.append(replace(sil, end=min(sil.end, new_start)))
            out[j + 1:i] = kept
            i = j + 1 + len(kept)
        i += 1
    return out
