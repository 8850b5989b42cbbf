"""Kernel-smoothed viseme trajectories and hard labial closure.

Each frame's weight for viseme ``v`` is the kernel mass that falls on
segments of class ``v``, divided by the kernel mass on the whole timeline
(a Nadaraya-Watson smoother over segment indicators). Gaps are filled with
the neutral class before smoothing, so silence pulls the mouth back to rest.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from maskface.viseme import N_VISEMES, NEUTRAL, VisemeSegment, VisemeTable, default_table

DEFAULT_FPS = 30.0
DEFAULT_BANDWIDTH = 0.030
GAUSSIAN_TRUNCATION = 4.0
EPSILON = 1e-6


class EmptyTimeline(ValueError):
    pass


@dataclass(frozen=True)
class SmoothingKernel:
    """``bandwidth`` is sigma for the gaussian, half-width for the triangle.

    ``bandwidth == 0`` disables smoothing: each frame shows the viseme active
    at its timestamp.
    """

    shape: str = "gaussian"
    bandwidth: float = DEFAULT_BANDWIDTH

    def __post_init__(self):
        if self.shape not in ("gaussian", "triangular"):
            raise ValueError(f"unknown kernel shape {self.shape!r}")
        if not self.bandwidth >= 0:
            raise ValueError("kernel bandwidth must be >= 0")

    @property
    def support(self) -> float:
        if self.shape == "gaussian":
            return GAUSSIAN_TRUNCATION * self.bandwidth
        return self.bandwidth

    def cdf(self, x):
        """Kernel mass on (-inf, x], truncated support, unnormalized."""
        x = np.clip(x, -self.support, self.support)
        h = self.bandwidth
        if self.shape == "gaussian":
            return ndtr(x / h)
        u = x / h
        return np.where(u <= 0, 0.5 * (1 + u) ** 2, 1 - 0.5 * (1 - u) ** 2)

    def density(self, u):
        u = np.asarray(u, dtype=float)
        h = self.bandwidth
        inside = np.abs(u) <= self.support
        if self.shape == "gaussian":
            val = np.exp(-0.5 * (u / h) ** 2) / (h * math.sqrt(2 * math.pi))
        else:
            val = (1 - np.abs(u) / h) / h
        return np.where(inside, val, 0.0)


@dataclass
class VisemeTrack:
    fps: float
    weights: np.ndarray  # (n_frames, 20)

    @property
    def n_frames(self) -> int:
        return self.weights.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_frames) / self.fps

    @property
    def frames(self) -> list:
        return [row for row in self.weights]

    def copy(self) -> "VisemeTrack":
        return VisemeTrack(self.fps, self.weights.copy())


def frame_count(duration: float, fps: float) -> int:
    # 1e-9 guards products like 0.3 * 30 = 9.000000000000002.
    return max(0, math.ceil(duration * fps - 1e-9))


def fill_gaps(segments: Sequence[VisemeSegment], total_duration: float) -> list:
    """Cover ``[0, total_duration]`` by inserting neutral segments in gaps."""
    out = []
    cursor = 0.0
    for seg in segments:
        if seg.start > cursor:
            out.append(VisemeSegment(NEUTRAL, cursor, seg.start))
        out.append(seg)
        cursor = max(cursor, seg.end)
    if total_duration > cursor:
        out.append(VisemeSegment(NEUTRAL, cursor, total_duration))
    return out


def sample_track(
    segments: Sequence[VisemeSegment],
    fps: float = DEFAULT_FPS,
    kernel: SmoothingKernel = SmoothingKernel(),
    total_duration: Optional[float] = None,
) -> VisemeTrack:
    if fps <= 0:
        raise ValueError("fps must be positive")
    if total_duration is None:
        total_duration = max((s.end for s in segments), default=0.0)
    n = frame_count(total_duration, fps)
    if n == 0:
        raise EmptyTimeline("timeline has zero duration")
    t = np.arange(n) / fps
    cover = fill_gaps(segments, total_duration)
    ids = np.array([s.viseme_id for s in cover])
    starts = np.array([s.start for s in cover])
    ends = np.array([s.end for s in cover])
    weights = np.zeros((n, N_VISEMES))

    if kernel.bandwidth == 0:
        active = (starts[None, :] <= t[:, None]) & (t[:, None] < ends[None, :])
        hit = active.any(axis=1)
        cls = np.where(hit, ids[np.argmax(active, axis=1)], NEUTRAL)
        weights[np.arange(n), cls] = 1.0
        return VisemeTrack(fps, weights)

    # Mass of K(t - tau) for tau in [a, b] is cdf(t - a) - cdf(t - b).
    mass = kernel.cdf(t[:, None] - starts[None, :]) - kernel.cdf(t[:, None] - ends[None, :])
    np.add.at(weights.T, ids, mass.T)
    denom = weights.sum(axis=1)
    ok = denom >= EPSILON
    weights[ok] /= denom[ok, None]
    weights[~ok] = 0.0
    weights[~ok, NEUTRAL] = 1.0
    np.clip(weights, 0.0, 1.0, out=weights)
    return VisemeTrack(fps, weights)


def _place_closures(mids, times, fps):
    """Strictly increasing frame indices minimising total |t_k - mid|.

    Pool-adjacent-violators over blocks of consecutive frames: each block
    sits at its best start, and colliding blocks are merged and re-placed.
    Ties go to the earlier frame. ``mids`` must be non-decreasing.
    """
    n = len(times)
    blocks = []  # [start, [mid, ...]]

    def best_start(ms):
        size = len(ms)
        hi = n - size
        y = sorted(m * fps - i for i, m in enumerate(ms))
        lo_med, hi_med = y[(size - 1) // 2], y[size // 2]
        cands = {int(np.floor(v)) + d for v in (lo_med, hi_med) for d in (-1, 0, 1, 2)}
        cands = sorted(min(max(c, 0), hi) for c in cands)
        cost = lambda st: sum(abs(times[st + i] - m) for i, m in enumerate(ms))  # noqa: E731
        return min(cands, key=lambda st: (cost(st), st))

    for mid in mids[:n]:
        block = [None, [mid]]
        block[0] = best_start(block[1])
        while blocks and blocks[-1][0] + len(blocks[-1][1]) > block[0]:
            prev = blocks.pop()
            block = [None, prev[1] + block[1]]
            block[0] = best_start(block[1])
        blocks.append(block)
    return [st + i for st, ms in blocks for i in range(len(ms))]


def enforce_labial_closure(
    track: VisemeTrack,
    segments: Sequence[VisemeSegment],
    table: Optional[VisemeTable] = None,
) -> VisemeTrack:
    """Force one pure-viseme frame per lip-closing segment.

    An isolated segment gets the frame nearest its midpoint (earlier frame on
    ties). When closures compete for frames they are spread over distinct
    frames in temporal order, minimising the total shift from the midpoints.
    """
    labials = (table or default_table()).labial_ids
    targets = sorted((s for s in segments if s.viseme_id in labials), key=lambda s: s.start)
    out = track.copy()
    if not targets or track.n_frames == 0:
        return out
    mids = [0.5 * (s.start + s.end) for s in targets]
    for seg, k in zip(targets, _place_closures(mids, track.times, track.fps)):
        out.weights[k] = 0.0
        out.weights[k, seg.viseme_id] = 1.0
    return out


def write_track(track: VisemeTrack) -> str:
    buf = io.StringIO()
    header = {"format": "viseme-track", "fps": track.fps, "classes": N_VISEMES}
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    buf.write(",".join(f"v{i:02d}" for i in range(N_VISEMES)) + "\n")
    for row in track.weights:
        buf.write(",".join(repr(float(x)) for x in row) + "\n")
    return buf.getvalue()


def read_track(text: str) -> VisemeTrack:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing track header")
    header = json.loads(lines[0][1:])
    if header.get("classes") != N_VISEMES:
        raise ValueError(f"track has {header.get('classes')} classes, expected {N_VISEMES}")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[2:] if ln.strip()]
    weights = np.array(rows, dtype=float).reshape(-1, N_VISEMES)
    return VisemeTrack(float(header["fps"]), weights)
