"""Why the oblique operator frame exists: motion repeatability.

If the operator's three sweeps are not orthogonal, projecting them to a
rotation means that repeating a calibration motion during teleoperation
moves the end effector in a *different* direction than promised. The
oblique basis projects each displacement parallel to the other two axes'
plane instead, so calibration motion is reproduced exactly.

This script calibrates from sweeps with a skewed y axis and compares the
end-effector displacement produced by the same wrist motion in both modes.
"""

import numpy as np

from handteleop.geometry import RigidTransform
from handteleop.retarget import RetargetConfig, ScalingState, reengage, translate
from handteleop.synthetic import right_hand, make_sweep
from handteleop.calibration import calibrate


def main():
    skew = np.radians(15)
    sweeps = [
        make_sweep("x", (1, 0, 0), origin=(0, 0, 0.5)),
        make_sweep("y", (np.sin(skew), np.cos(skew), 0), origin=(0, 0, 0.5)),
        make_sweep("z", (0, 0, 1), origin=(0, 0, 0.5)),
    ]
    frames = calibrate(sweeps)
    arm = RigidTransform(np.eye(3), [0.4, -0.1, 0.3])
    wrist0 = right_hand([0.0, 0.0, 0.5])
    y_line = np.array([np.sin(skew), np.cos(skew), 0.0])

    print("operator repeats the exact y-sweep motion, 20 cm, alpha = 0.3\n")
    print(f"{'mode':<10} {'EE displacement [mm]':<30} cross-axis leak")
    for mode in ("cartesian", "oblique"):
        cfg = RetargetConfig(mode=mode)
        eng = reengage(wrist0, arm, frames, cfg)
        pos = translate(
            wrist0.wrist_position + 0.20 * y_line, frames, eng,
            ScalingState("fast", cfg.alpha_fast), cfg,
        )
        disp = (pos - arm.translation) * 1000
        leak = np.linalg.norm([disp[0], disp[2]])
        print(f"{mode:<10} {np.round(disp, 3)!s:<30} {leak:.3f} mm")

    print(
        "\nIn Cartesian mode the end effector drifts off the commanded axis\n"
        "by several millimeters per 20 cm of hand travel; in oblique mode the\n"
        "motion lands exactly on the wrist-camera-frame y axis. Precision\n"
        "tasks live or die on those millimeters."
    )


if __name__ == "__main__":
    main()
