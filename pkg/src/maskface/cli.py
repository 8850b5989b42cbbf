"""Command-line entry point.

Every failure prints one line ``maskface: error[<Kind>]: <message>`` to
stderr. Exit status 1 means unparsable or invalid input, 2 means the
assets or matrices cannot be used together.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from maskface import calibration as cal
from maskface.config import ConfigError, EngineConfig
from maskface.expression import ScriptError, parse_emotion_script
from maskface.headpose import DegenerateTarget, NeckPose, clamp_neck, look_angles, pose_toward
from maskface.mesh import (GazeOutOfRange, MeshError, apply_gaze, blend_mesh, export_frames,
                           load_morphset, read_obj, rotation_matrix, write_obj)
from maskface.synthesis import format_pose_rows, format_timeline, load_tables, synthesize
from maskface.transcript import TranscriptError, parse_transcript
from maskface.viseme import VisemeTableError

log = logging.getLogger("maskface")


class CliFailure(Exception):
    def __init__(self, kind, message, code):
        self.kind, self.code = kind, code
        super().__init__(message)


def _fail(kind, message, code=1):
    raise CliFailure(kind, message, code)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        _fail("IOError", f"{path}: {err.strerror}")
    except UnicodeDecodeError:
        _fail("MalformedLine", f"{path}: not valid UTF-8")


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _vec3(text: str):
    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        v = []
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return np.array(v)


def _load_config(args) -> EngineConfig:
    cfg = EngineConfig.from_file(args.config) if args.config else EngineConfig()
    if args.fps is not None:
        cfg = replace(cfg, fps=args.fps)
    cfg.check_paths()
    return cfg


# ---------------------------------------------------------------- commands

def cmd_synthesize(args) -> int:
    cfg = _load_config(args)
    if args.basic_lipsync:
        cfg = cfg.basic()
    vt, ct = load_tables(cfg)
    transcript = parse_transcript(_read_text(args.transcript), vt.inventory)
    specs = []
    if args.emotions:
        specs = parse_emotion_script(_read_text(args.emotions), cfg.attack, cfg.release)

    gaze, neck = (0.0, 0.0), NeckPose()
    if args.gaze_target is not None:
        origin = args.head_origin if args.head_origin is not None else np.zeros(3)
        if args.head_follow:
            neck, _ = pose_toward(args.gaze_target, origin)
            d = rotation_matrix(neck.yaw, neck.pitch).T @ (args.gaze_target - origin)
            gaze = look_angles(np.zeros(3), d)
        else:
            gaze = look_angles(origin, args.gaze_target)

    timeline = synthesize(transcript, specs, cfg, gaze, neck, vt, ct)
    _write(args.output, format_timeline(timeline))
    if args.pose_out:
        _write(args.pose_out, format_pose_rows(timeline))
    if args.export_mesh:
        manifest = args.morphset or cfg.morphset
        if manifest:
            ms = load_morphset(manifest)
        else:
            from maskface.assets import make_test_head

            ms = make_test_head()
        meshes = (apply_gaze(blend_mesh(ms, fb), ms, *fb.gaze) for fb in timeline.frames)
        export_frames(meshes, args.export_mesh)
    log.info("wrote %d frames at %g fps", len(timeline), timeline.fps)
    return 0


def cmd_calibrate(args) -> int:
    text = _read_text(args.correspondences)
    board = cal.gen_checkerboard(args.rows, args.cols, args.width, args.height)
    mask = cal.parse_correspondences(text, args.rows, args.cols)
    if args.jitter > 0:
        rng = np.random.default_rng(args.seed)
        mask = mask + rng.normal(0.0, args.jitter, mask.shape)
    pmap = cal.build_piecewise_map(board.lattice, mask, mode=args.mode)
    _write(args.output, pmap.to_json())
    if args.pattern:
        Path(args.pattern).write_bytes(board.to_pgm())
    return 0


def cmd_predistort(args) -> int:
    try:
        model = read_obj(args.model)
    except OSError as err:
        _fail("IOError", f"{args.model}: {err.strerror}")
    cams = cal.parse_camera_matrices(_read_text(args.matrices))
    pmap = cal.PiecewiseMap.from_json(_read_text(args.map)) if args.map else None
    placement = cal.parse_placement(_read_text(args.placement)) if args.placement else None
    out = cal.predistort_model(model, cams, pmap, placement, invert=args.invert)
    if args.output in (None, "-"):
        from maskface.mesh import format_obj

        sys.stdout.write(format_obj(out))
    else:
        write_obj(out, args.output, "pre-distorted neutral")
    return 0


def cmd_gaze(args) -> int:
    origin = args.origin if args.origin is not None else np.zeros(3)
    out = ["index,label,eye_yaw,eye_pitch,neck_yaw,neck_pitch,neck_roll,clamped"]
    text = _read_text(args.targets)
    index = -1
    for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not rec or not "".join(rec).strip() or rec[0].lstrip().startswith("#"):
            continue
        try:
            target = np.array([float(x) for x in rec[:3]])
        except ValueError:
            if lineno == 1:
                continue
            _fail("MalformedLine", f"line {lineno}: expected x,y,z[,label]")
        if len(target) != 3:
            _fail("MalformedLine", f"line {lineno}: expected x,y,z[,label]")
        label = rec[3].strip() if len(rec) > 3 else ""
        index += 1
        try:
            if args.mode == "head":
                neck, flags = pose_toward(target, origin)
                d = rotation_matrix(neck.yaw, neck.pitch).T @ (target - origin)
                eye = look_angles(np.zeros(3), d)
            else:
                neck, flags = clamp_neck(0.0, 0.0, 0.0)
                eye = look_angles(origin, target)
        except DegenerateTarget as err:
            log.warning("line %d skipped: %s", lineno, err)
            continue
        clamped = "|".join(a for a, f in zip(("yaw", "pitch", "roll"), flags) if f)
        out.append(f"{index},{label},{eye[0]!r},{eye[1]!r},{neck.yaw!r},{neck.pitch!r},{neck.roll!r},{clamped}")
    _write(args.output, "\n".join(out) + "\n")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maskface", description="Lip sync, expression blending, gaze and projector calibration for a projected face mask.")
    p.add_argument("--config", help="engine config JSON")
    p.add_argument("--fps", type=float, help="override frame rate")
    p.add_argument("--seed", type=int, default=0, help="seed for optional noise fixtures")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="transcript (+ emotions) -> frame timeline")
    s.add_argument("transcript", help="transcript file, '-' for stdin")
    s.add_argument("--emotions", help="emotion script CSV")
    s.add_argument("-o", "--output", help="timeline file (default stdout)")
    s.add_argument("--pose-out", help="also write frame,yaw,pitch,roll neck rows")
    s.add_argument("--export-mesh", metavar="DIR", help="write one OBJ per frame")
    s.add_argument("--morphset", help="morph set manifest (default: built-in test head)")
    s.add_argument("--basic-lipsync", action="store_true", help="no smoothing, no closure enforcement")
    s.add_argument("--gaze-target", type=_vec3, help="x,y,z point the eyes fixate")
    s.add_argument("--head-origin", type=_vec3, help="x,y,z of the head pivot")
    s.add_argument("--head-follow", action="store_true", help="turn the neck toward the gaze target too")
    s.set_defaults(func=cmd_synthesize)

    c = sub.add_parser("calibrate", help="correspondences -> piecewise map")
    c.add_argument("correspondences", help="CSV row,col,mask_x,mask_y")
    c.add_argument("--rows", type=int, required=True)
    c.add_argument("--cols", type=int, required=True)
    c.add_argument("--width", type=float, required=True, help="screen width in px")
    c.add_argument("--height", type=float, required=True, help="screen height in px")
    c.add_argument("--mode", choices=("homography", "triangles"), default="homography")
    c.add_argument("--jitter", type=float, default=0.0, help="add N(0, jitter) px noise to mask corners")
    c.add_argument("--pattern", help="also write the checkerboard as PGM")
    c.add_argument("-o", "--output", help="map file (default stdout)")
    c.set_defaults(func=cmd_calibrate)

    d = sub.add_parser("predistort", help="pre-distort a neutral OBJ through the map")
    d.add_argument("model")
    d.add_argument("--matrices", required=True, help="48 numbers: world, view, projection")
    d.add_argument("--map", help="piecewise map file (omit for identity)")
    d.add_argument("--placement", help="2x3 affine mold placement")
    d.add_argument("--invert", action="store_true", help="apply the map's inverse (measured distortion)")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_predistort)

    g = sub.add_parser("gaze", help="targets -> eye and neck angles")
    g.add_argument("targets", help="CSV x,y,z[,label]")
    g.add_argument("--origin", type=_vec3, help="head/eye origin x,y,z")
    g.add_argument("--mode", choices=("eyes", "head"), default="eyes",
                   help="eyes: head stays straight; head: neck turns toward target, eyes make up the rest")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gaze)
    return p


_INPUT_ERRORS = (TranscriptError, ScriptError, ConfigError, VisemeTableError,
                 json.JSONDecodeError, cal.BadDimensions, cal.InsufficientPoints)
_ASSET_ERRORS = (MeshError, GazeOutOfRange, cal.UninvertibleWVP, cal.ProjectiveDivideByZero,
                 cal.DegenerateConfiguration)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="maskface: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliFailure as err:
        kind, msg, code = err.kind, str(err), err.code
    except _INPUT_ERRORS as err:
        kind, msg, code = getattr(err, "kind", type(err).__name__), str(err), 1
    except _ASSET_ERRORS as err:
        kind, msg, code = type(err).__name__, str(err), 2
    except cal.CalibrationError as err:
        kind, msg, code = type(err).__name__, str(err), 1
    msg = " ".join(msg.split())
    print(f"maskface: error[{kind}]: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
