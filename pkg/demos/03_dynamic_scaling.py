"""Dynamic motion scaling and clutching.

The left hand drives a three-state machine: lowering the left wrist
selects the precise scaling factor (0.02), pinching thumb to pinky freezes
the robot entirely (0), anything else is fast (0.3). Every change
re-anchors the map at the current wrist and end-effector poses, so
switching never jerks the arm and the operator can reposition a wrist
that is about to leave the camera's field of view.
"""

import numpy as np

from handteleop.geometry import RigidTransform
from handteleop.handstream import HandFrame
from handteleop.retarget import RetargetConfig, RetargetState, step
from handteleop.synthetic import identity_frames, left_control_hand, right_hand


def main():
    cfg = RetargetConfig()
    frames = identity_frames()
    pose = RigidTransform(np.eye(3), [0.40, -0.10, 0.30])
    state = RetargetState.initial(cfg)
    slow = left_control_hand(wrist_y=0.0)
    freeze = left_control_hand(wrist_y=0.0, freeze=True)

    script = [
        ("engage",                     [0.00, 0.00, 0.5], None),
        ("fast: move 10 cm",           [0.10, 0.00, 0.5], None),
        ("lower left wrist -> slow",   [0.10, 0.00, 0.5], slow),
        ("slow: move 10 cm",           [0.20, 0.00, 0.5], slow),
        ("pinch -> frozen",            [0.20, 0.00, 0.5], freeze),
        ("frozen: reposition 40 cm",   [-0.20, 0.00, 0.5], freeze),
        ("release -> fast",            [-0.20, 0.00, 0.5], None),
        ("fast: move 10 cm again",     [-0.10, 0.00, 0.5], None),
    ]

    print(f"{'event':<28} {'alpha':>6} {'EE x [mm]':>10} {'step [mm]':>10}")
    prev_x = pose.translation[0]
    for k, (label, wrist, left) in enumerate(script):
        frame = HandFrame(t=0.1 * k, right=right_hand(wrist), left=left)
        cmd, state = step(frame, pose, frames, state, cfg)
        pose = cmd.pose  # ideal tracking for readability
        x_mm = pose.translation[0] * 1000
        print(f"{label:<28} {cmd.alpha_active:>6.2f} {x_mm:>10.2f} {x_mm - prev_x * 1000:>10.2f}")
        prev_x = pose.translation[0]

    print(
        "\n10 cm of wrist motion moved the arm 30 mm in fast mode and exactly\n"
        "2 mm in precise mode. The frozen reposition moved the hand 40 cm and\n"
        "the arm not at all; re-engaging afterwards resumed from the new wrist\n"
        "origin without any jump."
    )


if __name__ == "__main__":
    main()
