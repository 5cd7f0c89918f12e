"""Operator-frame calibration from three wrist sweeps.

The operator sweeps their wrist along the directions they want the robot's
x, y and z to follow. Each sweep is RANSAC-fit to a 3D line; the signed
directions give both a Cartesian frame (nearest rotation + closest point)
and the oblique basis. This script calibrates from clean, noisy, and
skewed synthetic sweeps and prints the quality diagnostics for each.
"""

import numpy as np

from handteleop.calibration import calibrate, frame_quality_report
from handteleop.synthetic import make_sweep


def show(title, sweeps):
    frames = calibrate(sweeps)
    print(f"\n=== {title} ===")
    print("Cartesian frame origin (camera frame):", np.round(frames.cartesian.translation, 4))
    print("Cartesian frame rotation:\n", np.round(frames.cartesian.rotation, 4))
    print("Oblique axes (in the Cartesian frame):")
    for name, axis in zip("xyz", (frames.oblique.ax, frames.oblique.ay, frames.oblique.az)):
        print(f"  a_{name} = {np.round(axis, 4)}")
    print(frame_quality_report(frames))


def main():
    rng = np.random.default_rng(0)

    show(
        "clean orthogonal sweeps through (0, 0, 0.5)",
        [
            make_sweep("x", (1, 0, 0), origin=(0, 0, 0.5)),
            make_sweep("y", (0, 1, 0), origin=(0, 0, 0.5)),
            make_sweep("z", (0, 0, 1), origin=(0, 0, 0.5)),
        ],
    )

    show(
        "noisy sweeps (2 mm tracker jitter)",
        [
            make_sweep("x", (1, 0, 0), noise=0.002, rng=rng),
            make_sweep("y", (0, 1, 0), noise=0.002, rng=rng),
            make_sweep("z", (0, 0, 1), noise=0.002, rng=rng),
        ],
    )

    # A realistic operator rarely sweeps perfectly orthogonal axes: here the
    # y sweep is tilted 15 degrees toward x. Note how the Cartesian frame
    # splits the difference while the oblique basis keeps the true lines.
    rad = np.radians(15)
    show(
        "skewed sweeps (y tilted 15 degrees toward x)",
        [
            make_sweep("x", (1, 0, 0)),
            make_sweep("y", (np.sin(rad), np.cos(rad), 0)),
            make_sweep("z", (0, 0, 1)),
        ],
    )

    # Sweeping the same line backwards flips the axis sign: the robot moves
    # where the hand travelled, not along an arbitrary fit direction.
    forward = make_sweep("y", (0, 1, 0))
    print("\n=== sign convention ===")
    f = calibrate([make_sweep("x", (1, 0.1, 0)), forward, make_sweep("z", (0, 0, 1))])
    print("y axis, forward sweep :", np.round(f.cartesian.rotation @ f.oblique.ay, 4))
    backward = type(forward)("y", forward.times, forward.positions[::-1].copy())
    b = calibrate([make_sweep("x", (1, 0.1, 0)), backward, make_sweep("z", (0, 0, 1))])
    print("y axis, reversed sweep:", np.round(b.cartesian.rotation @ b.oblique.ay, 4))


if __name__ == "__main__":
    main()
