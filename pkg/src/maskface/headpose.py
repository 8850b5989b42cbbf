"""Kinematic model of the 3-DoF neck: symmetric joint limits and look-at poses.

Head frame: +x toward the agent's left, +y up, +z forward out of the face.
Positive yaw turns toward +x, positive pitch looks up.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# Total travel 150 / 30 / 30 degrees, split evenly about the rest pose.
YAW_LIMIT = 75.0
PITCH_LIMIT = 15.0
ROLL_LIMIT = 15.0


class NonFiniteInput(ValueError):
    pass


class DegenerateTarget(ValueError):
    pass


@dataclass(frozen=True)
class NeckPose:
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0


class ClampFlags(NamedTuple):
    yaw: bool
    pitch: bool
    roll: bool

    @property
    def any(self) -> bool:
        return self.yaw or self.pitch or self.roll


def _clamp(x, limit):
    return min(max(x, -limit), limit)


def clamp_neck(yaw: float, pitch: float, roll: float):
    """Clamp raw angles (degrees) into the neck envelope.

    Returns ``(NeckPose, ClampFlags)``.
    """
    if not all(math.isfinite(v) for v in (yaw, pitch, roll)):
        raise NonFiniteInput(f"non-finite neck angles {(yaw, pitch, roll)}")
    pose = NeckPose(_clamp(yaw, YAW_LIMIT), _clamp(pitch, PITCH_LIMIT), _clamp(roll, ROLL_LIMIT))
    flags = ClampFlags(pose.yaw != yaw, pose.pitch != pitch, pose.roll != roll)
    return pose, flags


def clamp_neck_many(angles):
    """Vectorised :func:`clamp_neck` over an ``(n, 3)`` array of yaw/pitch/roll.

    Returns ``(clamped, flags)`` with ``flags`` a boolean ``(n, 3)`` array.
    """
    a = np.asarray(angles, dtype=float)
    if not np.all(np.isfinite(a)):
        raise NonFiniteInput("non-finite neck angles")
    lim = np.array([YAW_LIMIT, PITCH_LIMIT, ROLL_LIMIT])
    out = np.clip(a, -lim, lim)
    return out, out != a


def look_angles(origin, target):
    """(yaw, pitch) in degrees pointing the +z axis at ``origin`` toward ``target``."""
    d = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    if not np.all(np.isfinite(d)):
        raise NonFiniteInput("non-finite target")
    horiz = math.hypot(d[0], d[2])
    if horiz == 0.0 and d[1] == 0.0:
        raise DegenerateTarget("target coincides with origin")
    yaw = math.degrees(math.atan2(d[0], d[2])) if horiz > 0 else 0.0
    pitch = math.degrees(math.atan2(d[1], horiz))
    return yaw, pitch


def pose_toward(target, head_origin=(0.0, 0.0, 0.0)):
    """Clamped neck pose aiming the face at ``target``; roll is always 0."""
    yaw, pitch = look_angles(head_origin, target)
    return clamp_neck(yaw, pitch, 0.0)


def head_rotation(pose: NeckPose) -> np.ndarray:
    """Column-vector rotation: roll about z, then pitch, then yaw."""
    from maskface.mesh import rotation_matrix

    r = math.radians(pose.roll)
    c, s = math.cos(r), math.sin(r)
    roll = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return rotation_matrix(pose.yaw, pose.pitch) @ roll
