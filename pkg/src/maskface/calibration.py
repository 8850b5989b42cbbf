"""Projection calibration: checkerboards, piecewise homographies, mold
placement and pre-distortion of the neutral model.

Row-vector convention throughout: a model point ``n`` (homogeneous, 1x4)
projects to clip space as ``n @ WVP`` and to screen as its homogeneous
divide. The projection matrix is expected to include the viewport, so
screen coordinates are pixels.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from maskface.mesh import Mesh

W_EPS = 1e-12
COLLINEAR_TOL = 1e-9
INVERSE_TOL = 1e-9


class CalibrationError(ValueError):
    pass


class BadDimensions(CalibrationError):
    pass


class InsufficientPoints(CalibrationError):
    pass


class DegenerateConfiguration(CalibrationError):
    pass


class DegenerateCell(DegenerateConfiguration):
    def __init__(self, row, col, reason):
        self.cell = (row, col)
        super().__init__(f"cell ({row}, {col}): {reason}")


class ProjectiveDivideByZero(CalibrationError):
    pass


class UninvertibleWVP(CalibrationError):
    pass


def checked_inverse(m: np.ndarray, tol: float = INVERSE_TOL, exc=CalibrationError) -> np.ndarray:
    """Inverse of ``m``, rejected unless ``||m @ inv - I||_inf < tol``."""
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError as err:
        raise exc(f"singular matrix: {err}") from None
    err = np.abs(m @ inv - np.eye(len(m))).max()
    if not np.isfinite(err) or err >= tol:
        raise exc(f"matrix inverse check failed (residual {err:.3g})")
    return inv


# ---------------------------------------------------------------- checkerboard

@dataclass
class Checkerboard:
    rows: int
    cols: int
    width: float
    height: float
    corners: np.ndarray  # ((rows+1)*(cols+1), 2), row-major
    colors: np.ndarray  # (rows, cols), 1 = white

    @property
    def lattice(self) -> np.ndarray:
        return self.corners.reshape(self.rows + 1, self.cols + 1, 2)

    def render(self) -> np.ndarray:
        w, h = int(round(self.width)), int(round(self.height))
        xs = np.minimum((np.arange(w) + 0.5) * self.cols // self.width, self.cols - 1).astype(int)
        ys = np.minimum((np.arange(h) + 0.5) * self.rows // self.height, self.rows - 1).astype(int)
        return (self.colors[ys][:, xs] * 255).astype(np.uint8)

    def to_pgm(self) -> bytes:
        img = self.render()
        header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
        return header + img.tobytes()


def gen_checkerboard(rows: int, cols: int, width: float, height: float) -> Checkerboard:
    if rows < 1 or cols < 1 or int(rows) != rows or int(cols) != cols:
        raise BadDimensions(f"rows and cols must be positive integers, got {rows}x{cols}")
    if not (width > 0 and height > 0):
        raise BadDimensions(f"screen size must be positive, got {width}x{height}")
    xs = np.arange(cols + 1) * (width / cols)
    ys = np.arange(rows + 1) * (height / rows)
    gx, gy = np.meshgrid(xs, ys)
    corners = np.stack([gx.ravel(), gy.ravel()], axis=1)
    colors = (np.add.outer(np.arange(rows), np.arange(cols)) % 2 == 0).astype(np.uint8)
    return Checkerboard(rows, cols, float(width), float(height), corners, colors)


# ---------------------------------------------------------------- homographies

@dataclass
class Homography:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float).reshape(3, 3)
        if abs(m[2, 2]) > W_EPS:
            m = m / m[2, 2]
        else:
            m = m / np.abs(m).max()
        if abs(np.linalg.det(m)) <= 1e-12:
            raise DegenerateConfiguration("homography is singular")
        self.matrix = m

    def apply(self, points) -> np.ndarray:
        return apply_h(self.matrix, points)

    def inverse(self) -> "Homography":
        return Homography(checked_inverse(self.matrix, exc=DegenerateConfiguration))


def apply_h(h: np.ndarray, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 2)
    hom = flat @ h[:, :2].T + h[:, 2]
    w = hom[:, 2]
    if np.any(np.abs(w) < W_EPS):
        raise ProjectiveDivideByZero("point maps to infinity (|w| < 1e-12)")
    return (hom[:, :2] / w[:, None]).reshape(pts.shape)


def _normalizer(pts: np.ndarray) -> np.ndarray:
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    if d == 0:
        raise DegenerateConfiguration("all points coincide")
    s = math.sqrt(2) / d
    return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1.0]])


def _check_spread(pts: np.ndarray, what: str) -> None:
    """Reject coincident points, and collinear triples for minimal sets."""
    for i, j in combinations(range(len(pts)), 2):
        if np.linalg.norm(pts[i] - pts[j]) < COLLINEAR_TOL:
            raise DegenerateConfiguration(f"{what} points {i} and {j} coincide")
    if len(pts) == 4:
        for i, j, k in combinations(range(4), 3):
            a, b = pts[j] - pts[i], pts[k] - pts[i]
            if abs(a[0] * b[1] - a[1] * b[0]) < COLLINEAR_TOL:
                raise DegenerateConfiguration(f"{what} points {i}, {j}, {k} are collinear")
    else:
        sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
        if sv[1] < COLLINEAR_TOL * max(sv[0], 1.0):
            raise DegenerateConfiguration(f"all {what} points are collinear")


def estimate_homography(src, dst) -> Homography:
    """Normalized DLT fit of ``dst ~ H src`` from four or more pairs."""
    src = np.asarray(src, dtype=float).reshape(-1, 2)
    dst = np.asarray(dst, dtype=float).reshape(-1, 2)
    if len(src) != len(dst):
        raise ValueError("src and dst must have the same number of points")
    if len(src) < 4:
        raise InsufficientPoints(f"need at least 4 correspondences, got {len(src)}")
    if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dst))):
        raise DegenerateConfiguration("non-finite coordinates")
    t_src, t_dst = _normalizer(src), _normalizer(dst)
    ns = src @ t_src[:2, :2].T + t_src[:2, 2]
    nd = dst @ t_dst[:2, :2].T + t_dst[:2, 2]
    _check_spread(ns, "source")
    _check_spread(nd, "destination")

    n = len(src)
    a = np.zeros((2 * n, 9))
    x, y = ns[:, 0], ns[:, 1]
    u, v = nd[:, 0], nd[:, 1]
    a[0::2, 0], a[0::2, 1], a[0::2, 2] = -x, -y, -1
    a[0::2, 6], a[0::2, 7], a[0::2, 8] = u * x, u * y, u
    a[1::2, 3], a[1::2, 4], a[1::2, 5] = -x, -y, -1
    a[1::2, 6], a[1::2, 7], a[1::2, 8] = v * x, v * y, v
    _, s, vt = np.linalg.svd(a)
    if s[7] < 1e-12 * s[0]:
        raise DegenerateConfiguration("correspondences do not determine a unique homography")
    hn = vt[-1].reshape(3, 3)
    h = checked_inverse(t_dst, exc=DegenerateConfiguration) @ hn @ t_src
    return Homography(h)


def _affine_from_triangle(src, dst) -> np.ndarray:
    """3x3 matrix of the affine map taking three src points onto dst."""
    m = np.hstack([np.asarray(src, float), np.ones((3, 1))])
    if abs(np.linalg.det(m)) < COLLINEAR_TOL:
        raise DegenerateConfiguration("triangle is degenerate")
    coef = np.linalg.solve(m, np.asarray(dst, float))  # (3, 2)
    out = np.eye(3)
    out[:2, :] = coef.T
    return out


# ---------------------------------------------------------------- piecewise map

@dataclass
class PiecewiseMap:
    """Per-cell projective maps over a uniform screen lattice.

    ``cells`` has shape ``(R, C, 3, 3)`` in homography mode and
    ``(R, C, 2, 3, 3)`` in triangle mode (upper-right triangle first, split
    along the cell's main diagonal).
    """

    screen_corners: np.ndarray  # (R+1, C+1, 2)
    mask_corners: np.ndarray  # (R+1, C+1, 2)
    cells: np.ndarray
    mode: str = "homography"
    origin: np.ndarray = field(init=False)
    spacing: np.ndarray = field(init=False)

    def __post_init__(self):
        self.screen_corners = np.asarray(self.screen_corners, float)
        self.mask_corners = np.asarray(self.mask_corners, float)
        self.cells = np.asarray(self.cells, float)
        self.origin = self.screen_corners[0, 0].copy()
        self.spacing = np.array([
            self.screen_corners[0, 1, 0] - self.origin[0],
            self.screen_corners[1, 0, 1] - self.origin[1],
        ])

    @property
    def rows(self) -> int:
        return self.screen_corners.shape[0] - 1

    @property
    def cols(self) -> int:
        return self.screen_corners.shape[1] - 1

    def locate(self, points):
        """Cell indices ``(row, col)`` and an outside-lattice flag per point."""
        pts = np.asarray(points, float).reshape(-1, 2)
        rel = (pts - self.origin) / self.spacing
        col = np.floor(rel[:, 0]).astype(np.int64)
        row = np.floor(rel[:, 1]).astype(np.int64)
        outside = (rel[:, 0] < 0) | (rel[:, 0] > self.cols) | (rel[:, 1] < 0) | (rel[:, 1] > self.rows)
        return np.clip(row, 0, self.rows - 1), np.clip(col, 0, self.cols - 1), outside

    def cell_matrices(self, row, col, points) -> np.ndarray:
        """The 3x3 matrix used for each point given its (clamped) cell."""
        if self.mode == "homography":
            return self.cells[row, col]
        pts = np.asarray(points, float).reshape(-1, 2)
        rel = (pts - self.origin) / self.spacing
        u, v = rel[:, 0] - col, rel[:, 1] - row
        tri = np.where(u >= v, 0, 1)
        return self.cells[row, col, tri]

    def apply_cell(self, row: int, col: int, points) -> np.ndarray:
        """Evaluate one specific cell's map, ignoring which cell contains the points."""
        pts = np.asarray(points, float).reshape(-1, 2)
        r = np.full(len(pts), row)
        c = np.full(len(pts), col)
        return _apply_many(self.cell_matrices(r, c, pts), pts).reshape(np.shape(points))

    def map_points(self, points):
        """Map screen points to mask points; returns ``(mapped, outside)``."""
        pts = np.asarray(points, float)
        flat = pts.reshape(-1, 2)
        row, col, outside = self.locate(flat)
        mapped = _apply_many(self.cell_matrices(row, col, flat), flat)
        return mapped.reshape(pts.shape), outside

    def inverse_points(self, points, tol: float = 1e-9):
        """Invert the map exactly by testing each cell's inverse transform.

        Returns ``(screen_points, found)``; points outside the map's image
        keep NaN coordinates.
        """
        pts = np.asarray(points, float).reshape(-1, 2)
        out = np.full_like(pts, np.nan)
        found = np.zeros(len(pts), dtype=bool)
        if self.mode == "homography":
            mats = [(r, c, None, self.cells[r, c]) for r in range(self.rows) for c in range(self.cols)]
        else:
            mats = [(r, c, k, self.cells[r, c, k])
                    for r in range(self.rows) for c in range(self.cols) for k in (0, 1)]
        for r, c, k, m in mats:
            todo = np.flatnonzero(~found)
            if not todo.size:
                break
            inv = checked_inverse(m, exc=DegenerateConfiguration)
            hom = pts[todo] @ inv[:, :2].T + inv[:, 2]
            ok_w = np.abs(hom[:, 2]) >= W_EPS
            cand = np.where(ok_w[:, None], hom[:, :2] / np.where(ok_w, hom[:, 2], 1.0)[:, None], np.nan)
            rel = (cand - self.origin) / self.spacing
            u, v = rel[:, 0] - c, rel[:, 1] - r
            inside = ok_w & (u >= -tol) & (u <= 1 + tol) & (v >= -tol) & (v <= 1 + tol)
            if k is not None:
                inside &= (u >= v - tol) if k == 0 else (u <= v + tol)
            hit = todo[inside]
            out[hit] = cand[inside]
            found[hit] = True
        return out.reshape(np.shape(points)), found

    def to_json(self) -> str:
        doc = {
            "format": "piecewise-map",
            "mode": self.mode,
            "rows": self.rows,
            "cols": self.cols,
            "screen_corners": self.screen_corners.tolist(),
            "mask_corners": self.mask_corners.tolist(),
            "cells": self.cells.tolist(),
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseMap":
        doc = json.loads(text)
        if doc.get("format") != "piecewise-map":
            raise CalibrationError("not a piecewise-map file")
        return cls(np.array(doc["screen_corners"]), np.array(doc["mask_corners"]),
                   np.array(doc["cells"]), doc.get("mode", "homography"))


def _apply_many(mats: np.ndarray, pts: np.ndarray) -> np.ndarray:
    hom = np.einsum("nij,nj->ni", mats, np.hstack([pts, np.ones((len(pts), 1))]))
    w = hom[:, 2]
    if np.any(np.abs(w) < W_EPS):
        raise ProjectiveDivideByZero("point maps to infinity (|w| < 1e-12)")
    return hom[:, :2] / w[:, None]


def build_piecewise_map(screen_corners, mask_corners, mode: str = "homography") -> PiecewiseMap:
    """Fit one exact 4-point homography per lattice cell.

    Both corner arrays have shape ``(R+1, C+1, 2)`` (flat row-major arrays
    are reshaped when a :class:`Checkerboard` lattice size can be inferred
    from ``screen_corners``). ``mode="triangles"`` fits two affine maps per
    cell instead.
    """
    sc = np.asarray(screen_corners, float)
    mc = np.asarray(mask_corners, float)
    if sc.shape != mc.shape or sc.ndim != 3 or sc.shape[2] != 2:
        raise BadDimensions(f"corner arrays must share shape (R+1, C+1, 2); got {sc.shape} and {mc.shape}")
    rows, cols = sc.shape[0] - 1, sc.shape[1] - 1
    if rows < 1 or cols < 1:
        raise BadDimensions("lattice needs at least one cell")
    dx, dy = sc[0, 1, 0] - sc[0, 0, 0], sc[1, 0, 1] - sc[0, 0, 1]
    expect_x = sc[0, 0, 0] + dx * np.arange(cols + 1)
    expect_y = sc[0, 0, 1] + dy * np.arange(rows + 1)
    scale = max(abs(dx), abs(dy), 1.0)
    if (dx <= 0 or dy <= 0 or np.abs(sc[..., 0] - expect_x[None, :]).max() > 1e-9 * scale * cols
            or np.abs(sc[..., 1] - expect_y[:, None]).max() > 1e-9 * scale * rows):
        raise BadDimensions("screen corners must form a uniform axis-aligned lattice")

    if mode == "homography":
        cells = np.zeros((rows, cols, 3, 3))
    elif mode == "triangles":
        cells = np.zeros((rows, cols, 2, 3, 3))
    else:
        raise ValueError(f"unknown piecewise mode {mode!r}")
    for r in range(rows):
        for c in range(cols):
            quad = [(r, c), (r, c + 1), (r + 1, c + 1), (r + 1, c)]
            s = np.array([sc[i, j] for i, j in quad])
            m = np.array([mc[i, j] for i, j in quad])
            try:
                if mode == "homography":
                    cells[r, c] = estimate_homography(s, m).matrix
                else:
                    cells[r, c, 0] = _affine_from_triangle(s[[0, 1, 2]], m[[0, 1, 2]])
                    cells[r, c, 1] = _affine_from_triangle(s[[0, 2, 3]], m[[0, 2, 3]])
            except DegenerateConfiguration as err:
                raise DegenerateCell(r, c, str(err)) from None
    return PiecewiseMap(sc, mc, cells, mode)


def map_point(pmap: PiecewiseMap, p):
    """Map one screen point; returns ``(mask_point, outside_flag)``."""
    mapped, outside = pmap.map_points(np.asarray(p, float).reshape(1, 2))
    return mapped[0], bool(outside[0])


def parse_correspondences(text: str, rows: int, cols: int) -> np.ndarray:
    """Read ``row,col,mask_x,mask_y`` records into an ``(R+1, C+1, 2)`` array.

    A non-numeric first record is treated as a header.
    """
    out = np.full((rows + 1, cols + 1, 2), np.nan)
    for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not rec or not "".join(rec).strip() or rec[0].lstrip().startswith("#"):
            continue
        if len(rec) != 4:
            raise CalibrationError(f"line {lineno}: expected row,col,mask_x,mask_y")
        try:
            r, c = int(rec[0]), int(rec[1])
            x, y = float(rec[2]), float(rec[3])
        except ValueError:
            if lineno == 1:
                continue
            raise CalibrationError(f"line {lineno}: non-numeric field in {rec!r}") from None
        if not (0 <= r <= rows and 0 <= c <= cols):
            raise CalibrationError(f"line {lineno}: corner ({r}, {c}) outside {rows}x{cols} grid")
        out[r, c] = (x, y)
    missing = np.argwhere(np.isnan(out[..., 0]))
    if len(missing):
        r, c = missing[0]
        raise CalibrationError(f"missing correspondence for corner ({r}, {c}) and {len(missing) - 1} more")
    return out


def format_correspondences(mask_corners: np.ndarray) -> str:
    lines = ["row,col,mask_x,mask_y"]
    for r in range(mask_corners.shape[0]):
        for c in range(mask_corners.shape[1]):
            x, y = mask_corners[r, c]
            lines.append(f"{r},{c},{float(x)!r},{float(y)!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- mold placement

@dataclass
class MoldPlacement:
    matrix: np.ndarray  # (2, 3)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, float).reshape(2, 3)
        if abs(np.linalg.det(self.matrix[:, :2])) < 1e-12:
            raise DegenerateConfiguration("placement's linear part is singular")

    @classmethod
    def identity(cls) -> "MoldPlacement":
        return cls(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, float)
        flat = pts.reshape(-1, 2)
        return (flat @ self.matrix[:, :2].T + self.matrix[:, 2]).reshape(pts.shape)

    def is_identity(self) -> bool:
        return np.array_equal(self.matrix, np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))


@dataclass
class FitReport:
    residuals: np.ndarray  # per-point Euclidean error
    rms: float
    max: float


def fit_affine_mold(mold_points, mask_points):
    """Least-squares 6-parameter affine map from mold to mask-image points.

    Returns ``(MoldPlacement, FitReport)``.
    """
    src = np.asarray(mold_points, float).reshape(-1, 2)
    dst = np.asarray(mask_points, float).reshape(-1, 2)
    if len(src) != len(dst):
        raise ValueError("point sets differ in length")
    if len(src) < 3:
        raise InsufficientPoints(f"need at least 3 point pairs, got {len(src)}")
    design = np.hstack([src, np.ones((len(src), 1))])
    sv = np.linalg.svd(src - src.mean(axis=0), compute_uv=False)
    if sv[1] <= COLLINEAR_TOL * max(sv[0], 1.0):
        raise DegenerateConfiguration("mold points are collinear")
    coef, *_ = np.linalg.lstsq(design, dst, rcond=None)  # (3, 2)
    placement = MoldPlacement(coef.T)
    res = np.linalg.norm(placement.apply(src) - dst, axis=1)
    return placement, FitReport(res, float(np.sqrt(np.mean(res ** 2))), float(res.max()))


def _numbers(text: str, what: str) -> list:
    nums = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in line.split("#", 1)[0].replace(",", " ").split():
            try:
                nums.append(float(tok))
            except ValueError:
                raise CalibrationError(f"{what} line {lineno}: not a number: {tok!r}") from None
    return nums


def parse_placement(text: str) -> MoldPlacement:
    nums = _numbers(text, "placement")
    if len(nums) != 6:
        raise CalibrationError(f"placement needs 6 numbers (2x3 row-major), got {len(nums)}")
    return MoldPlacement(np.array(nums).reshape(2, 3))


def format_placement(placement: MoldPlacement) -> str:
    return "\n".join(" ".join(repr(float(x)) for x in row) for row in placement.matrix) + "\n"


# ---------------------------------------------------------------- camera + pre-distortion

@dataclass
class CameraMatrices:
    world: np.ndarray
    view: np.ndarray
    projection: np.ndarray

    def __post_init__(self):
        for name in ("world", "view", "projection"):
            m = np.asarray(getattr(self, name), float)
            if m.shape != (4, 4):
                raise CalibrationError(f"{name} matrix must be 4x4, got {m.shape}")
            setattr(self, name, m)

    @property
    def wvp(self) -> np.ndarray:
        return self.world @ self.view @ self.projection

    @classmethod
    def identity(cls) -> "CameraMatrices":
        return cls(np.eye(4), np.eye(4), np.eye(4))


def parse_camera_matrices(text: str) -> CameraMatrices:
    """48 numbers: world, view, projection, each row-major 4x4."""
    nums = _numbers(text, "camera file")
    if len(nums) != 48:
        raise CalibrationError(f"camera file needs 48 numbers (3 row-major 4x4 matrices), got {len(nums)}")
    m = np.array(nums).reshape(3, 4, 4)
    return CameraMatrices(m[0], m[1], m[2])


def format_camera_matrices(cams: CameraMatrices) -> str:
    out = []
    for name in ("world", "view", "projection"):
        out.append(f"# {name}")
        out += [" ".join(repr(float(x)) for x in row) for row in getattr(cams, name)]
    return "\n".join(out) + "\n"


def project_vertices(vertices, wvp: np.ndarray):
    """Screen (x, y) of each vertex plus its clip-space (z, w)."""
    v = np.asarray(vertices, float).reshape(-1, 3)
    clip = np.hstack([v, np.ones((len(v), 1))]) @ wvp
    w = clip[:, 3]
    if np.any(np.abs(w) < W_EPS):
        raise ProjectiveDivideByZero("vertex projects with |w| < 1e-12")
    return clip[:, :2] / w[:, None], clip[:, 2], w


def predistort_model(
    neutral: Mesh,
    cams: CameraMatrices,
    pmap: Optional[PiecewiseMap],
    placement: Optional[MoldPlacement] = None,
    invert: bool = False,
) -> Mesh:
    """Warp the neutral model so its screen projection follows the map.

    Each vertex is projected, its screen position is registered with the
    mold placement and then sent through the piecewise map (or the map's
    exact inverse with ``invert=True``, for maps measured as screen-to-mask
    distortion). The vertex keeps its clip-space depth and w, so
    ``S' @ inv(WVP)`` lands back in model space exactly.
    """
    wvp = cams.wvp
    inv = checked_inverse(wvp, exc=UninvertibleWVP)
    xy, z, w = project_vertices(neutral.vertices, wvp)
    placed = xy if placement is None or placement.is_identity() else placement.apply(xy)
    if pmap is None:
        warped = placed
    elif invert:
        warped, found = pmap.inverse_points(placed)
        warped = np.where(found[:, None], warped, placed)
    else:
        warped, _ = pmap.map_points(placed)
    clip = np.column_stack([warped * w[:, None], z, w])
    model = clip @ inv
    mw = model[:, 3]
    if np.any(np.abs(mw) < W_EPS):
        raise ProjectiveDivideByZero("pre-distorted vertex has |w| < 1e-12 in model space")
    return neutral.copy(model[:, :3] / mw[:, None])


def perspective_camera(width: float, height: float, fov_y_deg: float = 40.0,
                       distance: float = 4.0, near: float = 0.1, far: float = 100.0) -> CameraMatrices:
    """A row-vector camera looking down -z at the origin, viewport in pixels.

    World is identity, view translates by ``-distance`` along z, projection
    is a standard perspective with the pixel viewport folded in (y down).
    """
    view = np.eye(4)
    view[3, 2] = -distance
    f = 1.0 / math.tan(math.radians(fov_y_deg) / 2)
    aspect = width / height
    proj = np.zeros((4, 4))
    proj[0, 0] = f / aspect
    proj[1, 1] = f
    proj[2, 2] = (far + near) / (near - far)
    proj[3, 2] = 2 * far * near / (near - far)
    proj[2, 3] = -1.0
    # NDC -> pixels: x' = (x + 1) w / 2, y' = (1 - y) h / 2, applied before the divide.
    viewport = np.array([
        [width / 2, 0, 0, 0],
        [0, -height / 2, 0, 0],
        [0, 0, 1, 0],
        [width / 2, height / 2, 0, 1],
    ])
    return CameraMatrices(np.eye(4), view, proj @ viewport)


def radial_warp(width: float, height: float, k1: float = 0.08, k2: float = 0.0,
                shift=(0.0, 0.0)) -> Callable:
    """Smooth synthetic lens-like distortion about the screen centre."""
    c = np.array([width / 2, height / 2])
    scale = 0.5 * math.hypot(width, height)
    sh = np.asarray(shift, float)

    def warp(points):
        p = np.asarray(points, float)
        d = (p - c) / scale
        r2 = (d ** 2).sum(axis=-1, keepdims=True)
        return c + d * scale * (1 + k1 * r2 + k2 * r2 ** 2) + sh

    return warp
