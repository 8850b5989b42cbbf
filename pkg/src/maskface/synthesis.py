"""End-to-end synthesis: transcript + emotion script -> per-frame blends.

Timeline file layout: ``#``-prefixed JSON header line, one CSV header row,
then one row per frame.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from maskface.coarticulation import (VisemeTrack, enforce_labial_closure, frame_count,
                                     sample_track)
from maskface.config import EngineConfig
from maskface.expression import (EXPRESSIONS, CompatibilityTable, FrameBlend, blend_frame,
                                 default_compat_table, expand_expression_schedule,
                                 load_compat_table)
from maskface.headpose import NeckPose
from maskface.transcript import Transcript
from maskface.viseme import (N_VISEMES, VisemeTable, default_table, extend_labials,
                             load_viseme_table, to_viseme_segments)

TIMELINE_VERSION = 1


@dataclass
class Timeline:
    fps: float
    frames: list = field(default_factory=list)
    track: Optional[VisemeTrack] = None

    def __len__(self):
        return len(self.frames)


def load_tables(config: EngineConfig):
    vt = load_viseme_table(config.viseme_table) if config.viseme_table else default_table()
    ct = load_compat_table(config.compat_table) if config.compat_table else default_compat_table()
    return vt, ct


def synthesize(
    transcript: Transcript,
    specs: Sequence = (),
    config: EngineConfig = EngineConfig(),
    gaze=(0.0, 0.0),
    neck: Optional[NeckPose] = None,
    viseme_table: Optional[VisemeTable] = None,
    compat_table: Optional[CompatibilityTable] = None,
) -> Timeline:
    if viseme_table is None or compat_table is None:
        vt, ct = load_tables(config)
        viseme_table = viseme_table or vt
        compat_table = compat_table or ct
    n = frame_count(transcript.total_duration, config.fps)
    if n == 0:
        return Timeline(config.fps, [], None)
    segments = to_viseme_segments(transcript, viseme_table)
    if config.max_extension > 0 or config.min_duration > 0:
        segments = extend_labials(segments, config.max_extension, config.min_duration, viseme_table)
    track = sample_track(segments, config.fps, config.kernel, transcript.total_duration)
    if config.enforce_closure:
        track = enforce_labial_closure(track, segments, viseme_table)
    schedule = expand_expression_schedule(specs, config.fps, n)
    neck = neck or NeckPose()
    frames = [blend_frame(track.weights[k], schedule[k], compat_table, gaze, neck) for k in range(n)]
    return Timeline(config.fps, frames, track)


def _columns():
    cols = ["frame", "time"] + [f"v{i:02d}" for i in range(N_VISEMES)]
    cols += [f"upper_{e}" for e in EXPRESSIONS] + [f"lower_{e}" for e in EXPRESSIONS]
    cols += ["preblend", "preblend_weight", "gaze_yaw", "gaze_pitch", "neck_yaw", "neck_pitch", "neck_roll"]
    return cols


def format_timeline(timeline: Timeline) -> str:
    buf = io.StringIO()
    header = {
        "format": "maskface-timeline",
        "version": TIMELINE_VERSION,
        "fps": timeline.fps,
        "n_frames": len(timeline.frames),
        "viseme_classes": N_VISEMES,
        "expressions": list(EXPRESSIONS),
    }
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    buf.write(",".join(_columns()) + "\n")
    r = lambda x: repr(float(x))  # noqa: E731
    for k, fb in enumerate(timeline.frames):
        row = [str(k), r(k / timeline.fps)]
        row += [r(x) for x in fb.viseme_weights]
        row += [r(x) for x in fb.expression_upper] + [r(x) for x in fb.expression_lower]
        pid, pw = fb.preblend if fb.preblend else ("", 0.0)
        row += [pid, r(pw), r(fb.gaze[0]), r(fb.gaze[1]), r(fb.neck.yaw), r(fb.neck.pitch), r(fb.neck.roll)]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def parse_timeline(text: str) -> Timeline:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("timeline lacks JSON header line")
    header = json.loads(lines[0][1:])
    frames = []
    nv, ne = N_VISEMES, len(EXPRESSIONS)
    for row in csv.reader(io.StringIO("\n".join(lines[2:]))):
        if not row:
            continue
        vals = row[2:2 + nv + 2 * ne]
        w = np.array([float(x) for x in vals])
        rest = row[2 + nv + 2 * ne:]
        pre = (rest[0], float(rest[1])) if rest[0] else None
        frames.append(FrameBlend(
            viseme_weights=w[:nv],
            expression_upper=w[nv:nv + ne],
            expression_lower=w[nv + ne:],
            preblend=pre,
            gaze=(float(rest[2]), float(rest[3])),
            neck=NeckPose(float(rest[4]), float(rest[5]), float(rest[6])),
        ))
    if len(frames) != header["n_frames"]:
        raise ValueError(f"header declares {header['n_frames']} frames, found {len(frames)}")
    return Timeline(float(header["fps"]), frames)


def format_pose_rows(timeline: Timeline) -> str:
    lines = ["frame,yaw,pitch,roll"]
    for k, fb in enumerate(timeline.frames):
        lines.append(f"{k},{fb.neck.yaw!r},{fb.neck.pitch!r},{fb.neck.roll!r}")
    return "\n".join(lines) + "\n"
