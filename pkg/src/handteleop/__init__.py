"""Hand-tracking teleoperation engine.

Turns a stream of tracked hand poses into desired robot end-effector pose
and gripper commands: runtime operator-frame calibration from wrist
sweeps, oblique-coordinate motion correspondence for repeatable control,
dynamic motion scaling with clutching, and a simulated rate-limited end
effector for closed-loop evaluation.
"""

from .geometry import (
    Line3,
    ObliqueBasis,
    RansacConfig,
    RigidTransform,
    closest_point_to_lines,
    fit_line_least_squares,
    nearest_rotation,
    oblique_measures,
    ransac_line,
)
from .calibration import (
    CalibrationSweep,
    OperatorFrames,
    calibrate,
    frame_quality_report,
)
from .handstream import (
    CameraIntrinsics,
    HandFrame,
    HandObservation,
    deproject,
    keypoint_bbox,
    project,
    stream_read,
    stream_write,
    weak_perspective_depth,
)
from .retarget import (
    EngagementState,
    RetargetCommand,
    RetargetConfig,
    RetargetState,
    ScalingState,
    gripper_command,
    reengage,
    rotate,
    step,
    translate,
    update_scaling,
)
from .simarm import (
    ArmSimulator,
    ArmState,
    EpisodeReport,
    Scenario,
    ServoConfig,
    check_scenario,
    peg_in_hole_scenario,
    run_episode,
)

__version__ = "0.1.0"
