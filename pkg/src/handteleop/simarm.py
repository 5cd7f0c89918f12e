"""Simulated end effector: a rate-limited servo behind a pure command
delay, plus scripted task scenarios and episode execution.

The servo models the sluggish manufacturer-style pose controller: each
commanded pose is applied `command_latency` seconds after it was issued
(FIFO delay line), and the pose moves toward the active target at bounded
linear and angular speed every tick.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Optional, Union

import numpy as np
from scipy.spatial.transform import Rotation

from .calibration import OperatorFrames
from .geometry import RigidTransform, geodesic_distance
from .handstream import HandFrame
from .retarget import (
    GRIPPER_OPEN,
    RetargetCommand,
    RetargetConfig,
    RetargetState,
    step as retarget_step,
)


@dataclass(frozen=True)
class ArmState:
    pose: RigidTransform
    gripper: str = GRIPPER_OPEN
    time: float = 0.0


@dataclass(frozen=True)
class ServoConfig:
    max_linear_speed: float = 0.15    # m/s
    max_angular_speed: float = 1.0    # rad/s
    command_latency: float = 0.4      # s
    tick: float = 0.01                # s

    def __post_init__(self):
        if min(self.max_linear_speed, self.max_angular_speed, self.tick) <= 0:
            raise ValueError("speeds and tick must be positive")
        if self.command_latency < 0:
            raise ValueError("latency cannot be negative")


def move_toward(
    pose: RigidTransform,
    target: RigidTransform,
    max_translation: float,
    max_rotation: float,
) -> RigidTransform:
    """Advance a pose toward a target pose along the straight line and the
    rotation geodesic, each by at most the given step."""
    offset = target.translation - pose.translation
    dist = float(np.linalg.norm(offset))
    if dist <= max_translation:
        translation = target.translation
    else:
        translation = pose.translation + offset * (max_translation / dist)

    rot = Rotation.from_matrix(pose.rotation)
    rotvec = (rot.inv() * Rotation.from_matrix(target.rotation)).as_rotvec()
    angle = float(np.linalg.norm(rotvec))
    if angle <= max_rotation:
        rotation = target.rotation
    else:
        # Compose in quaternion space so repeated stepping cannot drift the
        # pose off SO(3).
        rotation = (rot * Rotation.from_rotvec(rotvec * (max_rotation / angle))).as_matrix()
    return RigidTransform(rotation, translation)


class ArmSimulator:
    """Deterministic single-threaded stepping of the simulated arm.

    step(command) queues the command at the current sim time and advances
    one tick; commands become active once their latency has elapsed.
    """

    def __init__(self, initial: ArmState, cfg: ServoConfig):
        self.cfg = cfg
        self.state = initial
        self._pending: deque[tuple[float, RetargetCommand]] = deque()
        self._active: Optional[RetargetCommand] = None

    @property
    def active_command(self) -> Optional[RetargetCommand]:
        return self._active

    def submit(self, command: RetargetCommand) -> None:
        """Queue a command at the current sim time without advancing."""
        self._pending.append((self.state.time, command))

    def step(self, command: Optional[RetargetCommand] = None) -> ArmState:
        if command is not None:
            self.submit(command)
        while self._pending and (
            self._pending[0][0] + self.cfg.command_latency <= self.state.time
        ):
            self._active = self._pending.popleft()[1]

        pose = self.state.pose
        gripper = self.state.gripper
        if self._active is not None:
            pose = move_toward(
                pose,
                self._active.pose,
                self.cfg.max_linear_speed * self.cfg.tick,
                self.cfg.max_angular_speed * self.cfg.tick,
            )
            gripper = self._active.gripper
        self.state = ArmState(pose, gripper, self.state.time + self.cfg.tick)
        return self.state


@dataclass(frozen=True)
class Scenario:
    kind: str                      # "peg_in_hole" | "pick_place"
    target_pose: RigidTransform
    position_tolerance: float      # meters
    axis_tolerance: float          # radians

    def __post_init__(self):
        if self.position_tolerance <= 0 or self.axis_tolerance <= 0:
            raise ValueError("tolerances must be positive")


def peg_in_hole_scenario(
    target_pose: Optional[RigidTransform] = None, clearance: float = 0.003
) -> Scenario:
    """Desk-scale peg insertion: success requires the end effector within
    half the peg/hole clearance and the tool axis within 5 degrees."""
    if target_pose is None:
        target_pose = RigidTransform(np.eye(3), np.array([0.45, 0.10, 0.15]))
    return Scenario(
        kind="peg_in_hole",
        target_pose=target_pose,
        position_tolerance=clearance / 2,
        axis_tolerance=np.radians(5.0),
    )


def pick_place_scenario(target_pose: Optional[RigidTransform] = None) -> Scenario:
    if target_pose is None:
        target_pose = RigidTransform(np.eye(3), np.array([0.50, -0.20, 0.20]))
    return Scenario(
        kind="pick_place",
        target_pose=target_pose,
        position_tolerance=0.02,
        axis_tolerance=np.radians(15.0),
    )


SCENARIOS = {
    "peg_in_hole": peg_in_hole_scenario,
    "pick_place": pick_place_scenario,
}


@dataclass(frozen=True)
class ScenarioCheck:
    success: bool
    position_error: float   # meters
    axis_error: float       # radians


def check_scenario(state: ArmState, scenario: Scenario) -> ScenarioCheck:
    """Position error is the Euclidean distance to the target; axis error
    is the angle between the current and target tool z-axes (what the
    insertion clearance actually constrains)."""
    position_error = float(
        np.linalg.norm(state.pose.translation - scenario.target_pose.translation)
    )
    z_now = state.pose.rotation[:, 2]
    z_target = scenario.target_pose.rotation[:, 2]
    axis_error = float(np.arccos(np.clip(float(np.dot(z_now, z_target)), -1.0, 1.0)))
    return ScenarioCheck(
        success=bool(
            position_error < scenario.position_tolerance
            and axis_error < scenario.axis_tolerance
        ),
        position_error=position_error,
        axis_error=axis_error,
    )


@dataclass
class TickLog:
    t: float
    commanded: Optional[RigidTransform]
    achieved: RigidTransform
    alpha: float
    gripper: str

    def to_obj(self) -> dict:
        cmd = self.commanded
        return {
            "t": float(self.t),
            "commanded": None
            if cmd is None
            else {
                "r": [float(x) for x in cmd.rotation.ravel()],
                "p": [float(x) for x in cmd.translation],
            },
            "achieved": {
                "r": [float(x) for x in self.achieved.rotation.ravel()],
                "p": [float(x) for x in self.achieved.translation],
            },
            "alpha": float(self.alpha),
            "gripper": self.gripper,
        }


@dataclass
class EpisodeReport:
    success: bool
    duration: float
    num_frames: int
    num_ticks: int
    position_error: float
    axis_error: float
    log: list[TickLog] = field(default_factory=list, repr=False)

    def to_obj(self) -> dict:
        return {
            "success": bool(self.success),
            "duration": float(self.duration),
            "num_frames": int(self.num_frames),
            "num_ticks": int(self.num_ticks),
            "position_error": float(self.position_error),
            "axis_error": float(self.axis_error),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), separators=(",", ":"))


def write_trajectory_log(path_or_file: Union[str, IO], log: Iterable[TickLog]) -> None:
    if hasattr(path_or_file, "write"):
        for entry in log:
            path_or_file.write(json.dumps(entry.to_obj(), separators=(",", ":")) + "\n")
        return
    with open(path_or_file, "w", encoding="utf-8") as f:
        write_trajectory_log(f, log)


DEFAULT_ARM_POSE = RigidTransform(np.eye(3), np.array([0.45, -0.10, 0.30]))


def run_episode(
    hand_frames: Iterable[HandFrame],
    operator_frames: OperatorFrames,
    retarget_cfg: RetargetConfig,
    servo_cfg: ServoConfig,
    scenario: Scenario,
    initial_pose: Optional[RigidTransform] = None,
    settle_time: float = 2.0,
    keep_log: bool = True,
) -> EpisodeReport:
    """Drive the retarget pipeline and the simulated arm over a hand-frame
    stream, then let the servo settle and check the scenario."""
    frames_iter = iter(hand_frames)
    first = next(frames_iter, None)
    start_pose = initial_pose if initial_pose is not None else DEFAULT_ARM_POSE
    t0 = first.t if first is not None else 0.0
    sim = ArmSimulator(ArmState(start_pose, GRIPPER_OPEN, t0), servo_cfg)
    rstate = RetargetState.initial(retarget_cfg)
    log: list[TickLog] = []
    num_frames = 0
    num_ticks = 0

    def record():
        cmd = sim.active_command
        if keep_log:
            log.append(
                TickLog(
                    t=sim.state.time,
                    commanded=None if cmd is None else cmd.pose,
                    achieved=sim.state.pose,
                    alpha=rstate.scaling.alpha,
                    gripper=sim.state.gripper,
                )
            )

    frame = first
    while frame is not None:
        while sim.state.time < frame.t - 1e-9:
            sim.step()
            num_ticks += 1
            record()
        command, rstate = retarget_step(
            frame, sim.state.pose, operator_frames, rstate, retarget_cfg
        )
        sim.step(command)
        num_ticks += 1
        record()
        num_frames += 1
        frame = next(frames_iter, None)

    for _ in range(int(round(settle_time / servo_cfg.tick))):
        sim.step()
        num_ticks += 1
        record()

    check = check_scenario(sim.state, scenario)
    return EpisodeReport(
        success=check.success,
        duration=sim.state.time - t0,
        num_frames=num_frames,
        num_ticks=num_ticks,
        position_error=check.position_error,
        axis_error=check.axis_error,
        log=log,
    )
