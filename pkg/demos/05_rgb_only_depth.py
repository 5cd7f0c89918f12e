"""Depth from a single RGB camera via the weak-perspective hand scale.

Without a depth map, the wrist's distance is recovered from how large the
hand appears: depth = C * f / s_h, with C fit once from a single frame at
a known distance. This works while the whole hand sits at roughly one
depth, and breaks visibly when the fingers curl toward the camera (a
pinch), which is exactly the failure the gripper gesture triggers.
"""

import numpy as np

from handteleop.handstream import (
    CameraIntrinsics,
    calibrate_depth_scale,
    weak_perspective_depth,
)
from handteleop.synthetic import hand_keypoints


def quasi_planar_hand(curl=0.0, seed=0):
    rng = np.random.default_rng(seed)
    shape = hand_keypoints(center=(0.0, 0.0))
    shape = (shape - shape.mean(axis=0)) * 0.0015  # ~20 cm hand, meters
    z = rng.normal(0, 0.004, 21)
    z -= z.mean()
    if curl:
        w = np.zeros(21)
        w[1:] = 1.0
        z -= curl * (w / w.mean())
    return np.column_stack([shape, z])


def render(points, depth, intr):
    z = depth + points[:, 2]
    return np.column_stack(
        [intr.fx * points[:, 0] / z + intr.cx, intr.fy * points[:, 1] / z + intr.cy]
    )


def fit_scale(pixels, canonical):
    dp = pixels - pixels.mean(axis=0)
    ds = canonical - canonical.mean(axis=0)
    return float(np.sum(dp * ds) / np.sum(ds * ds))


def main():
    intr = CameraIntrinsics(fx=600, fy=600, cx=320, cy=240)
    hand = quasi_planar_hand()
    canonical = hand[:, :2]

    s_ref = fit_scale(render(hand, 0.5, intr), canonical)
    C = calibrate_depth_scale(0.5, s_ref, intr)
    print(f"calibrated C from one frame at 0.50 m: C = {C:.6f}\n")

    print("true depth   estimated   error")
    for depth in np.arange(0.4, 1.21, 0.1):
        s = fit_scale(render(hand, depth, intr), canonical)
        est = weak_perspective_depth(s, intr, C)
        print(f"  {depth:>6.2f} m   {est:>7.3f} m  {100 * abs(est - depth) / depth:>5.2f}%")

    print("\nnow the operator pinches; fingers curl ~6 cm toward the camera:")
    pinched = quasi_planar_hand(curl=0.06)
    s = fit_scale(render(pinched, 0.5, intr), canonical)
    est = weak_perspective_depth(s, intr, C)
    print(
        f"  true 0.50 m -> estimated {est:.3f} m "
        f"({100 * (est - 0.5) / 0.5:+.1f}%): the apparent hand grows, the\n"
        "  depth estimate drops, and the arm lurches toward the camera's\n"
        "  idea of the hand. RGB-only control needs the pinch gesture to be\n"
        "  treated with care."
    )


if __name__ == "__main__":
    main()
