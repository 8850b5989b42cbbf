"""Procedurally generated low-poly test head with synthetic morph targets.

The geometry is deliberately crude: an ellipsoid face with a nose bump and
two spherical eyes. Viseme shapes are driven by four mouth parameters and
expressions by a handful of FACS-like regional deformations. It exists so
every test and demo runs without external art assets.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from maskface.expression import EXPRESSIONS
from maskface.mesh import Mesh, build_morphset, viseme_target_id, write_obj

FACE_RADII = np.array([0.8, 1.1, 0.9])
EYE_RADIUS = 0.12
EYE_CENTERS = {"left": np.array([0.3, 0.3, 0.72]), "right": np.array([-0.3, 0.3, 0.72])}
MOUTH_CENTER = np.array([0.0, -0.45, 0.78])

# (jaw open, lip spread, lip round, lip press) per viseme class.
VISEME_PARAMS = {
    0: (0.0, 0.0, 0.0, 0.0),
    1: (0.0, 0.0, 0.0, 1.0),
    2: (0.1, 0.1, 0.0, 0.7),
    3: (0.3, 0.2, 0.0, 0.0),
    4: (0.25, 0.2, 0.0, 0.0),
    5: (0.35, 0.1, 0.0, 0.0),
    6: (0.15, 0.4, 0.0, 0.0),
    7: (0.2, 0.0, 0.6, 0.0),
    8: (0.35, 0.1, 0.0, 0.0),
    9: (0.25, 0.0, 0.4, 0.0),
    10: (0.1, 0.0, 1.0, 0.0),
    11: (0.2, 0.5, 0.0, 0.0),
    12: (1.0, 0.1, 0.0, 0.0),
    13: (0.8, 0.5, 0.0, 0.0),
    14: (0.55, 0.5, 0.0, 0.0),
    15: (0.3, 0.7, 0.0, 0.0),
    16: (0.6, 0.0, 0.8, 0.0),
    17: (0.3, 0.0, 1.0, 0.0),
    18: (0.4, 0.0, 0.5, 0.0),
    19: (0.9, 0.3, 0.0, 0.0),
}

FACS = {
    "anger": [4, 5, 7, 23],
    "disgust": [9, 15, 16],
    "fear": [1, 2, 4, 5, 20, 26],
    "joy": [6, 12],
    "sadness": [1, 4, 15],
    "surprise": [1, 2, 5, 26],
}


def _uv_sphere(center, radii, n_lat, n_lon):
    """Vertices and faces of a UV sphere; poles are single vertices."""
    verts = [[0.0, radii[1], 0.0]]
    for i in range(1, n_lat):
        theta = np.pi * i / n_lat
        for j in range(n_lon):
            phi = 2 * np.pi * j / n_lon
            verts.append([radii[0] * np.sin(theta) * np.sin(phi),
                          radii[1] * np.cos(theta),
                          radii[2] * np.sin(theta) * np.cos(phi)])
    verts.append([0.0, -radii[1], 0.0])
    verts = np.array(verts) + center
    faces = []
    ring = lambda i, j: 1 + (i - 1) * n_lon + (j % n_lon)  # noqa: E731
    for j in range(n_lon):
        faces.append([0, ring(1, j), ring(1, j + 1)])
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b, c, d = ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1)
            faces += [[a, c, b], [b, c, d]]
    last = len(verts) - 1
    for j in range(n_lon):
        faces.append([ring(n_lat - 1, j), last, ring(n_lat - 1, j + 1)])
    return verts, np.array(faces)


def _bump(v, center, radius):
    d2 = np.sum(((v - center) / radius) ** 2, axis=1)
    return np.exp(-d2)


def make_neutral(n_lat: int = 30, n_lon: int = 40):
    """Neutral head mesh and eye index sets (~1.4k vertices by default)."""
    face_v, face_f = _uv_sphere(np.zeros(3), FACE_RADII, n_lat, n_lon)
    # Nose: push the front equator vertex and its neighbourhood forward.
    nose_idx = 1 + (n_lat // 2 - 1) * n_lon
    nose_center = face_v[nose_idx].copy()
    face_v[:, 2] += 0.25 * _bump(face_v, nose_center, np.array([0.12, 0.15, 0.4]))
    verts, faces = [face_v], [face_f]
    eyes, landmarks = {}, {"nose_tip": int(nose_idx)}
    offset = len(face_v)
    for name, c in EYE_CENTERS.items():
        ev, ef = _uv_sphere(c, np.full(3, EYE_RADIUS), 6, 8)
        ev = np.vstack([ev, c])  # unreferenced pivot vertex
        verts.append(ev)
        faces.append(ef + offset)
        eyes[name] = np.arange(offset, offset + len(ev))
        landmarks[f"{name}_eye_center"] = int(offset + len(ev) - 1)
        offset += len(ev)
    mesh = Mesh(np.vstack(verts), np.vstack(faces), landmarks)
    return mesh, eyes


def _face_only(neutral, eyes):
    mask = np.ones(len(neutral.vertices), dtype=bool)
    for idx in eyes.values():
        mask[idx] = False
    return mask


def viseme_displacement(neutral, eyes, params):
    jaw, spread, rnd, press = params
    v = neutral.vertices
    face = _face_only(neutral, eyes)[:, None]
    w = _bump(v, MOUTH_CENTER, np.array([0.35, 0.3, 0.5]))[:, None]
    below = (v[:, 1] < MOUTH_CENTER[1])[:, None]
    d = np.zeros_like(v)
    d[:, 1:2] += np.where(below, -0.18 * jaw, 0.03 * jaw) * w
    d[:, 0:1] += 0.12 * spread * np.sign(v[:, 0:1]) * w
    d[:, 0:1] -= 0.1 * rnd * (v[:, 0:1] - MOUTH_CENTER[0]) * w
    d[:, 2:3] += 0.08 * rnd * w
    d[:, 1:2] += np.where(below, 0.03, -0.03) * press * w
    return np.where(face, d, 0.0)


def expression_displacement(neutral, eyes, name):
    v = neutral.vertices
    face = _face_only(neutral, eyes)[:, None]
    brow = _bump(v, np.array([0.0, 0.55, 0.7]), np.array([0.5, 0.15, 0.4]))
    inner_brow = _bump(v, np.array([0.0, 0.5, 0.75]), np.array([0.2, 0.15, 0.4]))
    cheeks = _bump(np.abs(v), np.array([0.45, 0.05, 0.6]), np.array([0.2, 0.15, 0.4]))
    corners = _bump(np.abs(v), np.array([0.25, -0.45, 0.7]), np.array([0.12, 0.12, 0.4]))
    jaw = _bump(v, np.array([0.0, -0.7, 0.6]), np.array([0.4, 0.3, 0.5]))
    nose = _bump(v, np.array([0.0, -0.05, 0.9]), np.array([0.15, 0.1, 0.3]))
    d = np.zeros_like(v)
    up = lambda amount, field: np.outer(field, [0.0, amount, 0.0])  # noqa: E731
    if name == "joy":
        d += up(0.06, cheeks) + up(0.1, corners) + np.outer(corners * np.sign(v[:, 0]), [0.05, 0, 0])
    elif name == "sadness":
        d += up(0.06, inner_brow) + up(-0.03, brow) + up(-0.1, corners)
    elif name == "anger":
        d += up(-0.08, brow) + np.outer(inner_brow * -np.sign(v[:, 0]), [0.03, 0, 0]) + up(-0.03, corners)
    elif name == "disgust":
        d += up(-0.04, brow) + up(0.05, nose) + up(0.02, cheeks) + up(-0.06, corners)
    elif name == "fear":
        d += up(0.06, brow) + up(0.04, inner_brow) + up(-0.12, jaw) + np.outer(corners * np.sign(v[:, 0]), [0.06, 0, 0])
    elif name == "surprise":
        d += up(0.12, brow) + up(-0.25, jaw)
    else:
        raise ValueError(name)
    return np.where(face, d, 0.0)


def make_target_specs(neutral: Mesh, eyes: dict) -> list:
    """Full target meshes for all visemes, expressions and pre-blends."""
    specs = []
    for vid, params in VISEME_PARAMS.items():
        specs.append({"id": viseme_target_id(vid), "kind": "viseme",
                      "mesh": neutral.copy(neutral.vertices + viseme_displacement(neutral, eyes, params)),
                      "meta": {"viseme": vid}})
    for name in EXPRESSIONS:
        specs.append({"id": name, "kind": "expression",
                      "mesh": neutral.copy(neutral.vertices + expression_displacement(neutral, eyes, name)),
                      "meta": {"facs": FACS[name]}})
    below_nose = ~(neutral.vertices[:, 1] > neutral.vertices[neutral.landmarks["nose_tip"], 1])
    for vid, vname in ((1, "bilabial"), (2, "labiodental")):
        lips = viseme_displacement(neutral, eyes, VISEME_PARAMS[vid])
        for name in ("anger", "fear", "surprise"):
            expr = expression_displacement(neutral, eyes, name)
            # Keep the lips closed: only the corners and cheeks follow the emotion.
            expr[:, 1] = np.maximum(expr[:, 1], -0.02)
            d = lips + np.where(below_nose[:, None], 0.5 * expr, 0.0)
            specs.append({"id": f"preblend_{vname}_{name}", "kind": "preblend",
                          "mesh": neutral.copy(neutral.vertices + d),
                          "meta": {"viseme": vid, "expression": name}})
    return specs


def make_test_head(n_lat: int = 30, n_lon: int = 40):
    neutral, eyes = make_neutral(n_lat, n_lon)
    ms = build_morphset(neutral, make_target_specs(neutral, eyes), eyes)
    ms.check_complete()
    return ms


def write_test_head(directory: Union[str, Path], n_lat: int = 30, n_lon: int = 40) -> Path:
    """Write OBJ files plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    neutral, eyes = make_neutral(n_lat, n_lon)
    write_obj(neutral, directory / "neutral.obj", "neutral")
    records = []
    for spec in make_target_specs(neutral, eyes):
        fname = f"{spec['id']}.obj"
        write_obj(spec["mesh"], directory / fname, spec["id"])
        records.append({"id": spec["id"], "kind": spec["kind"], "file": fname, **spec["meta"]})
    manifest = {
        "neutral": "neutral.obj",
        "landmarks": neutral.landmarks,
        "eyes": {k: v.tolist() for k, v in eyes.items()},
        "targets": records,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path
