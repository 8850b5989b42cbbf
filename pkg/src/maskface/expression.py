"""Blending emotional expressions with speech visemes in weight space.

An expression ``j`` at intensity ``lam`` adds ``lam * (F_j_max - F_0)`` on
top of the current viseme shape. A per (viseme, expression) compatibility
table caps the intensity and rescales the viseme weights; lip-closing
visemes swap in pre-blended targets for open-mouth emotions.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from maskface.headpose import NeckPose
from maskface.viseme import N_VISEMES

EXPRESSIONS = ("anger", "disgust", "fear", "joy", "sadness", "surprise")
EXPRESSION_INDEX = {name: i for i, name in enumerate(EXPRESSIONS)}

DEFAULT_ATTACK = 0.1
DEFAULT_RELEASE = 0.1


class MissingEntry(KeyError):
    pass


class ScriptError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ExpressionSpec:
    """``envelope`` is a sequence of ``(time_s, intensity)`` knots; when given
    it overrides ``intensity`` and the expression is off outside its span."""

    expression: str
    intensity: float = 1.0
    envelope: Optional[tuple] = None

    def __post_init__(self):
        if self.expression not in EXPRESSION_INDEX:
            raise ValueError(f"unknown expression {self.expression!r}")
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError(f"intensity {self.intensity} outside [0, 1]")
        if self.envelope is not None:
            env = tuple((float(t), float(v)) for t, v in self.envelope)
            if any(not 0.0 <= v <= 1.0 for _, v in env):
                raise ValueError("envelope values must lie in [0, 1]")
            if any(b[0] < a[0] for a, b in zip(env, env[1:])):
                raise ValueError("envelope knots must be time-ordered")
            object.__setattr__(self, "envelope", env)


@dataclass(frozen=True)
class CompatEntry:
    alpha: float = 1.0
    cap: float = 1.0
    preblend: Optional[str] = None


class CompatibilityTable:
    def __init__(self, entries: dict):
        for (v, e), entry in entries.items():
            if not (0.0 <= entry.alpha <= 1.0 and 0.0 <= entry.cap <= 1.0):
                raise ValueError(f"alpha/cap outside [0, 1] for ({v}, {e})")
        self.entries = dict(entries)

    def is_total(self) -> bool:
        return all((v, e) in self.entries for v in range(N_VISEMES) for e in EXPRESSIONS)

    @property
    def preblend_ids(self) -> list:
        return sorted({e.preblend for e in self.entries.values() if e.preblend})

    def __getitem__(self, key) -> CompatEntry:
        try:
            return self.entries[key]
        except KeyError:
            raise MissingEntry(f"no compatibility entry for viseme {key[0]}, {key[1]}") from None


def parse_compat_table(text: str) -> CompatibilityTable:
    entries = {}
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if len(row) not in (4, 5):
            raise ScriptError(f"expected viseme_id,expression,alpha,cap[,preblend_id]: {row!r}", lineno)
        try:
            vid, expr = int(row[0]), row[1].strip()
            alpha, cap = float(row[2]), float(row[3])
        except ValueError:
            raise ScriptError(f"bad number in {row!r}", lineno)
        if expr not in EXPRESSION_INDEX:
            raise ScriptError(f"unknown expression {expr!r}", lineno)
        pre = row[4].strip() if len(row) == 5 and row[4].strip() else None
        entries[(vid, expr)] = CompatEntry(alpha, cap, pre)
    return CompatibilityTable(entries)


def load_compat_table(path: Union[str, Path]) -> CompatibilityTable:
    return parse_compat_table(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=None)
def default_compat_table() -> CompatibilityTable:
    text = resources.files("maskface.data").joinpath("compat.csv").read_text(encoding="utf-8")
    return parse_compat_table(text)


def lookup_compat(viseme_id: int, expression: str, table: Optional[CompatibilityTable] = None):
    """Return ``(alpha, cap)`` for a viseme/expression pair."""
    entry = (table or default_compat_table())[(viseme_id, expression)]
    return entry.alpha, entry.cap


@dataclass
class FrameBlend:
    viseme_weights: np.ndarray
    expression_upper: np.ndarray = field(default_factory=lambda: np.zeros(len(EXPRESSIONS)))
    expression_lower: np.ndarray = field(default_factory=lambda: np.zeros(len(EXPRESSIONS)))
    preblend: Optional[tuple] = None  # (target id, weight)
    gaze: tuple = (0.0, 0.0)
    neck: NeckPose = field(default_factory=NeckPose)


def blend_frame(
    frame_visemes,
    specs: Iterable[ExpressionSpec],
    table: Optional[CompatibilityTable] = None,
    gaze=(0.0, 0.0),
    neck: Optional[NeckPose] = None,
) -> FrameBlend:
    table = table or default_compat_table()
    visemes = np.clip(np.asarray(frame_visemes, dtype=float), 0.0, 1.0)
    dominant = int(np.argmax(visemes))

    requested = np.zeros(len(EXPRESSIONS))
    for spec in specs:
        j = EXPRESSION_INDEX[spec.expression]
        requested[j] = max(requested[j], spec.intensity)

    effective = np.zeros(len(EXPRESSIONS))
    alphas = np.ones(len(EXPRESSIONS))
    preblends = {}
    for j, name in enumerate(EXPRESSIONS):
        if requested[j] <= 0.0:
            continue
        entry = table[(dominant, name)]
        effective[j] = min(requested[j], entry.cap)
        alphas[j] = entry.alpha
        if entry.preblend and effective[j] > 0.0:
            preblends[j] = entry.preblend

    upper = effective.copy()
    lower = effective.copy()
    out_visemes = visemes.copy()
    if effective.max() > 0.0:
        strongest = int(np.argmax(effective))
        out_visemes = out_visemes * alphas[strongest]

    preblend = None
    if preblends:
        chosen = max(preblends, key=lambda j: (effective[j], -j))
        preblend = (preblends[chosen], float(visemes[dominant]))
        for j in preblends:
            lower[j] = 0.0
        out_visemes[dominant] = 0.0

    return FrameBlend(
        viseme_weights=np.clip(out_visemes, 0.0, 1.0),
        expression_upper=np.clip(upper, 0.0, 1.0),
        expression_lower=np.clip(lower, 0.0, 1.0),
        preblend=preblend,
        gaze=tuple(gaze),
        neck=neck if neck is not None else NeckPose(),
    )


def intensity_at(spec: ExpressionSpec, times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if spec.envelope is None:
        return np.full(times.shape, spec.intensity)
    if not spec.envelope:
        return np.zeros(times.shape)
    ts = np.array([t for t, _ in spec.envelope])
    vs = np.array([v for _, v in spec.envelope])
    inside = (times >= ts[0]) & (times <= ts[-1])
    return np.where(inside, np.interp(times, ts, vs), 0.0)


def expand_expression_schedule(specs: Sequence[ExpressionSpec], fps: float, n_frames: int) -> list:
    """Per-frame lists of constant-intensity specs (zero-intensity entries dropped)."""
    times = np.arange(n_frames) / fps
    frames = [[] for _ in range(n_frames)]
    for spec in specs:
        lam = intensity_at(spec, times)
        for k in np.flatnonzero(lam > 0.0):
            frames[k].append(ExpressionSpec(spec.expression, float(lam[k])))
    return frames


def trapezoid(start: float, end: float, peak: float,
              attack: float = DEFAULT_ATTACK, release: float = DEFAULT_RELEASE) -> tuple:
    half = 0.5 * (end - start)
    a, r = min(attack, half), min(release, half)
    return ((start, 0.0), (start + a, peak), (end - r, peak), (end, 0.0))


def parse_emotion_script(text: str, attack: float = DEFAULT_ATTACK,
                         release: float = DEFAULT_RELEASE) -> list:
    """Rows ``expression,start_ms,end_ms,peak_lambda``; ``#`` lines are comments."""
    specs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise ScriptError(f"expected expression,start_ms,end_ms,peak_lambda: {line!r}", lineno)
        expr = parts[0].lower()
        if expr not in EXPRESSION_INDEX:
            raise ScriptError(f"unknown expression {parts[0]!r}", lineno)
        try:
            start, end = int(parts[1]) / 1000.0, int(parts[2]) / 1000.0
            peak = float(parts[3])
        except ValueError:
            raise ScriptError(f"bad number in {line!r}", lineno)
        if end <= start:
            raise ScriptError("end must be after start", lineno)
        if not 0.0 <= peak <= 1.0:
            raise ScriptError(f"peak {peak} outside [0, 1]", lineno)
        specs.append(ExpressionSpec(expr, peak, trapezoid(start, end, peak, attack, release)))
    return specs
