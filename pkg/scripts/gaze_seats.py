"""Eye and neck angles for a row of observers seated around the head.

Observers sit on an arc at the given distance; for each we report the eye
angles with the head fixed and the split between neck and eyes when the
head turns toward them (neck clamped to its joint limits).
"""
import argparse

import numpy as np

from maskface.headpose import look_angles, pose_toward
from maskface.mesh import rotation_matrix


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--distance", type=float, default=1.5, help="metres")
    ap.add_argument("--height", type=float, default=0.0, help="observer eye height relative to the head")
    ap.add_argument("--seats", type=float, nargs="+", default=[-90, -60, -45, -25, 0, 25, 45, 60, 90])
    args = ap.parse_args()
    print(f"{'seat':>6} {'eyes_only':>18} {'neck':>16} {'eyes_after_neck':>18}")
    for deg in args.seats:
        a = np.radians(deg)
        target = np.array([args.distance * np.sin(a), args.height, args.distance * np.cos(a)])
        eyes = look_angles(np.zeros(3), target)
        neck, flags = pose_toward(target)
        rest = look_angles(np.zeros(3), rotation_matrix(neck.yaw, neck.pitch).T @ target)
        mark = "*" if flags.any else " "
        print(f"{deg:6.0f} ({eyes[0]:7.2f},{eyes[1]:7.2f}) ({neck.yaw:6.2f},{neck.pitch:6.2f}){mark}"
              f" ({rest[0]:7.2f},{rest[1]:7.2f})")
    print("\n* neck clamped; the eyes take up the remainder (subject to their own range).")


if __name__ == "__main__":
    main()
