"""Multi-target morphing of face meshes, eye gaze rotation and asset loading.

Targets are stored as per-vertex displacements from the neutral mesh and
summed in a fixed order (visemes, upper expressions, lower expressions,
pre-blends) so output is reproducible to the bit. Only the vertices a
target actually moves are touched.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from maskface.expression import EXPRESSIONS, FrameBlend
from maskface.headpose import DegenerateTarget, look_angles  # noqa: F401  (re-exported)
from maskface.viseme import N_VISEMES

GAZE_YAW_LIMIT = 60.0
GAZE_PITCH_LIMIT = 40.0

VISEME = "viseme"
EXPRESSION_UPPER = "expression_upper"
EXPRESSION_LOWER = "expression_lower"
PREBLEND = "preblend"

REQUIRED_LANDMARKS = ("nose_tip", "left_eye_center", "right_eye_center")


class MeshError(ValueError):
    pass


class TopologyMismatch(MeshError):
    pass


class MissingLandmark(MeshError):
    pass


class MissingTarget(MeshError):
    pass


class UnknownTargetId(MeshError):
    pass


class MissingAsset(MeshError):
    pass


class GazeOutOfRange(ValueError):
    pass


@dataclass
class Mesh:
    vertices: np.ndarray  # (n, 3) float64
    faces: np.ndarray  # (m, 3) int
    landmarks: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise MeshError("face index out of range")

    def copy(self, vertices=None) -> "Mesh":
        v = self.vertices.copy() if vertices is None else vertices
        return Mesh(v, self.faces, dict(self.landmarks))


def viseme_target_id(v: int) -> str:
    return f"viseme_{v:02d}"


# ---------------------------------------------------------------- OBJ I/O

def parse_obj(text: str) -> Mesh:
    verts, faces = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshError(f"line {lineno}: vertex needs 3 coordinates")
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                i = int(tok.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            if len(idx) < 3:
                raise MeshError(f"line {lineno}: face needs 3 vertices")
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    return Mesh(np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3))


def read_obj(path: Union[str, Path]) -> Mesh:
    return parse_obj(Path(path).read_text(encoding="utf-8"))


def format_obj(mesh: Mesh, comment: Optional[str] = None) -> str:
    lines = [f"# {comment}"] if comment else []
    # repr keeps full float precision so files round-trip exactly.
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    return "\n".join(lines) + "\n"


def write_obj(mesh: Mesh, path: Union[str, Path], comment: Optional[str] = None) -> None:
    Path(path).write_text(format_obj(mesh, comment), encoding="utf-8")


def export_frames(meshes, directory: Union[str, Path], stem: str = "frame") -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, mesh in enumerate(meshes):
        p = directory / f"{stem}_{k:05d}.obj"
        write_obj(mesh, p)
        paths.append(p)
    return paths


# ---------------------------------------------------------------- morph sets

@dataclass
class MorphTarget:
    id: str
    kind: str
    displacements: np.ndarray  # (n, 3)
    region: str = "both"  # upper | lower | both
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.displacements = np.asarray(self.displacements, dtype=float)
        self.support = np.flatnonzero(np.any(self.displacements != 0.0, axis=1))


@dataclass
class MorphSet:
    neutral: Mesh
    targets: dict
    eyes: dict  # eye name -> vertex index array
    upper: np.ndarray  # bool per vertex

    def __post_init__(self):
        n = len(self.neutral.vertices)
        for t in self.targets.values():
            if t.displacements.shape != (n, 3):
                raise TopologyMismatch(f"target {t.id} has {len(t.displacements)} vertices, neutral {n}")
        self.eyes = {k: np.asarray(v, dtype=np.int64) for k, v in self.eyes.items()}
        self.upper = np.asarray(self.upper, dtype=bool)

    @property
    def order(self) -> list:
        ids = [viseme_target_id(v) for v in range(N_VISEMES)]
        ids += [f"upper_{e}" for e in EXPRESSIONS] + [f"lower_{e}" for e in EXPRESSIONS]
        ids += sorted(k for k, t in self.targets.items() if t.kind == PREBLEND)
        return ids

    @property
    def eye_vertices(self) -> np.ndarray:
        if not self.eyes:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(list(self.eyes.values())))

    def check_complete(self) -> None:
        for tid in self.order:
            if tid not in self.targets:
                raise MissingTarget(f"morph set lacks target {tid!r}")


def frame_weights(fb: FrameBlend) -> dict:
    w = {viseme_target_id(v): float(x) for v, x in enumerate(fb.viseme_weights)}
    for j, e in enumerate(EXPRESSIONS):
        w[f"upper_{e}"] = float(fb.expression_upper[j])
        w[f"lower_{e}"] = float(fb.expression_lower[j])
    if fb.preblend is not None:
        w[fb.preblend[0]] = float(fb.preblend[1])
    return w


def blend_weights(ms: MorphSet, weights: dict) -> Mesh:
    """``neutral + sum_k w_k * delta_k`` with targets summed in ``ms.order``."""
    rank = {tid: i for i, tid in enumerate(ms.order)}
    for tid, w in weights.items():
        if w != 0.0 and tid not in ms.targets:
            raise UnknownTargetId(f"unknown morph target {tid!r}")
    verts = ms.neutral.vertices.copy()
    for tid in sorted(weights, key=lambda t: (rank.get(t, len(rank)), t)):
        w = weights[tid]
        if w == 0.0:
            continue
        t = ms.targets[tid]
        if t.support.size:
            verts[t.support] += w * t.displacements[t.support]
    return ms.neutral.copy(verts)


def blend_mesh(ms: MorphSet, fb: FrameBlend) -> Mesh:
    return blend_weights(ms, frame_weights(fb))


# ---------------------------------------------------------------- gaze

def rotation_matrix(yaw: float, pitch: float) -> np.ndarray:
    """Column-vector rotation applying pitch (about x) then yaw (about y).

    Maps the forward axis (0, 0, 1) to
    ``(cos p sin y, sin p, cos p cos y)``.
    """
    y, p = math.radians(yaw), math.radians(pitch)
    cy, sy, cp, sp = math.cos(y), math.sin(y), math.cos(p), math.sin(p)
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cp, sp], [0.0, -sp, cp]])
    return ry @ rx


def gaze_to_angles(eye_center, target):
    """Eye (yaw, pitch) in degrees that aim the forward axis at ``target``."""
    return look_angles(eye_center, target)


def apply_gaze(mesh: Mesh, ms: MorphSet, yaw: float, pitch: float) -> Mesh:
    """Rotate each eye submesh rigidly about its centre landmark."""
    if abs(yaw) > GAZE_YAW_LIMIT or abs(pitch) > GAZE_PITCH_LIMIT:
        raise GazeOutOfRange(f"gaze ({yaw}, {pitch}) outside +/-{GAZE_YAW_LIMIT}/{GAZE_PITCH_LIMIT} deg")
    if yaw == 0.0 and pitch == 0.0:
        return mesh.copy()
    rot = rotation_matrix(yaw, pitch)
    verts = mesh.vertices.copy()
    for name, idx in ms.eyes.items():
        key = f"{name}_eye_center"
        if key not in ms.neutral.landmarks:
            raise MissingLandmark(key)
        c = mesh.vertices[ms.neutral.landmarks[key]]
        verts[idx] = (mesh.vertices[idx] - c) @ rot.T + c
    return mesh.copy(verts)


# ---------------------------------------------------------------- loading

def nose_rule_mask(neutral: Mesh) -> np.ndarray:
    """Upper face: vertices strictly above the nose tip."""
    if "nose_tip" not in neutral.landmarks:
        raise MissingLandmark("nose_tip")
    y_nose = neutral.vertices[neutral.landmarks["nose_tip"], 1]
    return neutral.vertices[:, 1] > y_nose


def build_morphset(neutral: Mesh, targets: list, eyes: Optional[dict] = None,
                   upper: Optional[np.ndarray] = None) -> MorphSet:
    """Assemble a morph set from full target meshes.

    ``targets`` holds dicts with ``id``, ``kind`` (viseme, expression or
    preblend), ``mesh`` and optional ``meta``. Expression meshes are split
    into upper and lower targets; eye vertices never move with expressions.
    """
    for key in REQUIRED_LANDMARKS:
        if key not in neutral.landmarks:
            raise MissingLandmark(key)
    n = len(neutral.vertices)
    eyes = {k: np.asarray(v, dtype=np.int64) for k, v in (eyes or {}).items()}
    upper = nose_rule_mask(neutral) if upper is None else np.asarray(upper, dtype=bool)
    if upper.shape != (n,):
        raise TopologyMismatch("region mask length differs from vertex count")
    eye_idx = np.unique(np.concatenate(list(eyes.values()))) if eyes else np.zeros(0, np.int64)

    out = {}
    for spec in targets:
        mesh = spec["mesh"]
        if len(mesh.vertices) != n:
            raise TopologyMismatch(f"target {spec['id']}: {len(mesh.vertices)} vertices, neutral has {n}")
        if mesh.faces.shape != neutral.faces.shape or not np.array_equal(mesh.faces, neutral.faces):
            raise TopologyMismatch(f"target {spec['id']}: face list differs from neutral")
        delta = mesh.vertices - neutral.vertices
        meta = dict(spec.get("meta", {}))
        if spec["kind"] == "expression":
            name = spec["id"]
            delta = delta.copy()
            delta[eye_idx] = 0.0
            up = np.where(upper[:, None], delta, 0.0)
            lo = np.where(upper[:, None], 0.0, delta)
            out[f"upper_{name}"] = MorphTarget(f"upper_{name}", EXPRESSION_UPPER, up, "upper", meta)
            out[f"lower_{name}"] = MorphTarget(f"lower_{name}", EXPRESSION_LOWER, lo, "lower", meta)
        elif spec["kind"] in (VISEME, PREBLEND):
            out[spec["id"]] = MorphTarget(spec["id"], spec["kind"], delta, "both", meta)
        else:
            raise MeshError(f"unknown target kind {spec['kind']!r}")
    return MorphSet(neutral, out, eyes, upper)


def load_morphset(manifest_path: Union[str, Path], require_complete: bool = True) -> MorphSet:
    """Load a morph set from a JSON manifest next to its OBJ files.

    Manifest keys: ``neutral`` (file), ``landmarks`` (name -> vertex index),
    ``eyes`` (name -> vertex indices), optional ``upper_vertices`` (indices of
    the upper region; the nose-tip rule is used otherwise) and ``targets``, a
    list of ``{"id", "kind", "file"}`` records with optional ``facs``.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent

    def _obj(name):
        try:
            return read_obj(base / name)
        except OSError as err:
            raise MissingAsset(f"{base / name}: {err.strerror}") from None

    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as err:
        raise MissingAsset(f"{manifest_path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise MissingAsset(f"{manifest_path}: invalid JSON ({err})") from None
    if "neutral" not in manifest:
        raise MissingAsset(f"{manifest_path}: no 'neutral' entry")
    neutral = _obj(manifest["neutral"])
    neutral.landmarks = {k: int(v) for k, v in manifest.get("landmarks", {}).items()}
    n = len(neutral.vertices)
    for key, idx in neutral.landmarks.items():
        if not 0 <= idx < n:
            raise MissingLandmark(f"landmark {key} index {idx} out of range")
    upper = None
    if "upper_vertices" in manifest:
        upper = np.zeros(n, dtype=bool)
        upper[np.asarray(manifest["upper_vertices"], dtype=np.int64)] = True
    targets = []
    for rec in manifest.get("targets", []):
        meta = {k: v for k, v in rec.items() if k not in ("id", "kind", "file")}
        try:
            tid, kind, fname = rec["id"], rec["kind"], rec["file"]
        except KeyError as err:
            raise MissingAsset(f"{manifest_path}: target record lacks {err}") from None
        targets.append({"id": tid, "kind": kind, "mesh": _obj(fname), "meta": meta})
    ms = build_morphset(neutral, targets, manifest.get("eyes"), upper)
    if require_complete:
        ms.check_complete()
    return ms
