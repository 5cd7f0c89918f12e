"""Per-frame motion retargeting: hand observations in the operator camera
frame become desired end-effector poses in the robot world frame.

Translation maps the wrist displacement since the last engagement through
the operator frame (Cartesian or oblique), scales it by the active motion
scaling factor, and rebases it at the end-effector pose captured at
engagement. Rotation bridges the wrist orientation through the Cartesian
operator frame into the fixed wrist-camera frame, composed with a
per-engagement constant offset so the map is continuous at engagement.
Every scaling change re-anchors both sides (clutching), letting the
operator reposition without moving the robot.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .calibration import OperatorFrames
from .geometry import RigidTransform, nearest_rotation, oblique_measures
from .handstream import HandFrame, HandObservation, PINKY_TIP, THUMB_TIP, INDEX_TIP, WRIST

GRIPPER_OPEN = "open"
GRIPPER_CLOSED = "closed"

MODE_FAST = "fast"
MODE_SLOW = "slow"
MODE_FROZEN = "frozen"


class NotCalibrated(RuntimeError):
    """The pipeline needs calibrated operator frames before stepping."""


@dataclass(frozen=True)
class RetargetConfig:
    alpha_fast: float = 0.3
    alpha_slow: float = 0.02
    # Left-hand control thresholds; bring-up defaults, see README.
    left_wrist_y_threshold: float = 0.10   # meters, camera frame
    pinch_freeze_threshold: float = 40.0   # pixels, left thumb-pinky
    gripper_close_threshold: float = 60.0  # pixels, right thumb-index
    mode: str = "oblique"                  # "cartesian" | "oblique"
    wcf_pose: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        if not (0.0 < self.alpha_slow < self.alpha_fast <= 1.0):
            raise ValueError("need 0 < alpha_slow < alpha_fast <= 1")
        if self.pinch_freeze_threshold <= 0 or self.gripper_close_threshold <= 0:
            raise ValueError("pixel thresholds must be positive")
        if self.mode not in ("cartesian", "oblique"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class ScalingState:
    mode: str   # "fast" | "slow" | "frozen"
    alpha: float

    @classmethod
    def fast(cls, cfg: RetargetConfig) -> "ScalingState":
        return cls(MODE_FAST, cfg.alpha_fast)


@dataclass(frozen=True)
class EngagementState:
    """Clutch anchor captured when the map is (re)engaged."""

    wrist_origin: np.ndarray        # right wrist position, camera frame
    ee_ref_pose: RigidTransform     # end-effector pose, world frame
    rotation_offset: np.ndarray     # makes rotate() return ee_ref rotation


@dataclass(frozen=True)
class RetargetCommand:
    pose: RigidTransform            # desired end-effector pose, world frame
    gripper: str
    alpha_active: float
    engaged: bool


@dataclass(frozen=True)
class RetargetState:
    scaling: ScalingState
    engagement: Optional[EngagementState] = None
    gripper: str = GRIPPER_OPEN
    last_command: Optional[RetargetCommand] = None

    @classmethod
    def initial(cls, cfg: RetargetConfig) -> "RetargetState":
        return cls(scaling=ScalingState.fast(cfg))


def update_scaling(
    left: Optional[HandObservation], cfg: RetargetConfig, prev: ScalingState
) -> ScalingState:
    """Pick the scaling mode from the left hand: pinching thumb to pinky
    freezes all robot motion, a lowered wrist-y selects precise scaling,
    anything else (including no left hand) selects fast scaling."""
    if left is None:
        return ScalingState(MODE_FAST, cfg.alpha_fast)
    pinch = float(np.linalg.norm(left.keypoints[THUMB_TIP] - left.keypoints[PINKY_TIP]))
    if pinch < cfg.pinch_freeze_threshold:
        return ScalingState(MODE_FROZEN, 0.0)
    if float(left.wrist_position[1]) < cfg.left_wrist_y_threshold:
        return ScalingState(MODE_SLOW, cfg.alpha_slow)
    return ScalingState(MODE_FAST, cfg.alpha_fast)


def _bridge_rotation(frames: OperatorFrames, cfg: RetargetConfig) -> np.ndarray:
    """R(world <- wcf) @ R(cf <- camera): the fixed part of the rotation map."""
    return cfg.wcf_pose.rotation @ frames.cartesian.rotation.T


def reengage(
    right: HandObservation,
    arm_pose: RigidTransform,
    frames: OperatorFrames,
    cfg: RetargetConfig,
) -> EngagementState:
    """Anchor the map at the current wrist and end-effector poses.

    The rotation offset is chosen so rotate() reproduces the arm's current
    rotation exactly at this instant; translate() reproduces its position
    by construction (zero displacement).
    """
    bridged = _bridge_rotation(frames, cfg) @ right.wrist_rotation
    return EngagementState(
        wrist_origin=right.wrist_position.copy(),
        ee_ref_pose=arm_pose,
        rotation_offset=bridged.T @ arm_pose.rotation,
    )


def translate(
    wrist_position: np.ndarray,
    frames: OperatorFrames,
    engagement: EngagementState,
    scaling: ScalingState,
    cfg: RetargetConfig,
) -> np.ndarray:
    """Desired end-effector position (world frame) for a wrist position."""
    delta_cam = np.asarray(wrist_position, dtype=float) - engagement.wrist_origin
    # Displacements are free vectors: rotation only, no origin shift.
    delta_cf = frames.cartesian.rotation.T @ delta_cam
    if cfg.mode == "oblique":
        measures = oblique_measures(delta_cf, frames.oblique)
    else:
        measures = delta_cf
    return engagement.ee_ref_pose.translation + cfg.wcf_pose.rotation @ (
        scaling.alpha * measures
    )


def rotate(
    wrist_rotation: np.ndarray,
    frames: OperatorFrames,
    engagement: EngagementState,
    cfg: RetargetConfig,
) -> np.ndarray:
    """Desired end-effector rotation (world frame) for a wrist rotation.

    Always bridges through the Cartesian operator frame; the oblique basis
    applies to positions only. The result is re-projected onto SO(3) so
    noisy inputs cannot leak non-orthogonality into commands.
    """
    desired = (
        _bridge_rotation(frames, cfg)
        @ np.asarray(wrist_rotation, dtype=float)
        @ engagement.rotation_offset
    )
    return nearest_rotation(desired)


def gripper_command(
    keypoints: np.ndarray, cfg: RetargetConfig, prev: str = GRIPPER_OPEN
) -> str:
    """Gripper state from the right thumb-index pixel distance, with a 20%
    hysteresis band around the threshold to prevent chatter."""
    kp = np.asarray(keypoints, dtype=float)
    distance = float(np.linalg.norm(kp[THUMB_TIP] - kp[INDEX_TIP]))
    if prev == GRIPPER_CLOSED:
        return GRIPPER_OPEN if distance > 1.1 * cfg.gripper_close_threshold else GRIPPER_CLOSED
    return GRIPPER_CLOSED if distance < 0.9 * cfg.gripper_close_threshold else GRIPPER_OPEN


def _hold_pose(state: RetargetState, arm_pose: RigidTransform) -> RigidTransform:
    if state.last_command is not None:
        return state.last_command.pose
    return arm_pose


def step(
    frame: HandFrame,
    arm_pose: RigidTransform,
    frames: Optional[OperatorFrames],
    state: RetargetState,
    cfg: RetargetConfig,
) -> tuple[RetargetCommand, RetargetState]:
    """One control tick: a hand frame in, a command and successor state out.

    Re-engages (clutches) whenever the scaling factor changes or the right
    hand reappears after a dropout; on those ticks the command equals the
    current arm pose, so mode switches never jump. While frozen or with no
    right hand, the last commanded pose is held.
    """
    if frames is None:
        raise NotCalibrated("calibrate operator frames before stepping")

    scaling = update_scaling(frame.left, cfg, state.scaling)
    alpha_changed = scaling.alpha != state.scaling.alpha

    if frame.right is None:
        command = RetargetCommand(
            pose=_hold_pose(state, arm_pose),
            gripper=state.gripper,
            alpha_active=scaling.alpha,
            engaged=False,
        )
        new_state = replace(
            state, scaling=scaling, engagement=None, last_command=command
        )
        return command, new_state

    if state.engagement is None or alpha_changed:
        engagement = reengage(frame.right, arm_pose, frames, cfg)
        command = RetargetCommand(
            pose=arm_pose,
            gripper=state.gripper,
            alpha_active=scaling.alpha,
            engaged=True,
        )
        new_state = RetargetState(
            scaling=scaling,
            engagement=engagement,
            gripper=state.gripper,
            last_command=command,
        )
        return command, new_state

    if scaling.mode == MODE_FROZEN:
        # No robot motion while frozen: hold the full last command.
        command = RetargetCommand(
            pose=_hold_pose(state, arm_pose),
            gripper=state.gripper,
            alpha_active=0.0,
            engaged=True,
        )
        return command, replace(state, scaling=scaling, last_command=command)

    gripper = gripper_command(frame.right.keypoints, cfg, state.gripper)
    command = RetargetCommand(
        pose=RigidTransform(
            rotate(frame.right.wrist_rotation, frames, state.engagement, cfg),
            translate(
                frame.right.wrist_position, frames, state.engagement, scaling, cfg
            ),
        ),
        gripper=gripper,
        alpha_active=scaling.alpha,
        engaged=True,
    )
    new_state = replace(
        state, scaling=scaling, gripper=gripper, last_command=command
    )
    return command, new_state
