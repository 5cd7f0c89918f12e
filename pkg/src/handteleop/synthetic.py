"""Synthetic hand input: a virtual hand for driving the engine without a
camera, calibration sweep generators, and deterministic scripted operators
for the task scenarios.

The scripted peg-in-hole operator is a simple closed-loop policy: it
watches the simulated end effector, moves its virtual wrist to shrink the
remaining error (divided by the active scaling factor), and switches to
precise scaling for the final descent. Tracker noise is added to the
*observed* wrist positions, which is where a real hand-pose estimator
injects it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .calibration import (
    CalibrationDiagnostics,
    CalibrationSweep,
    OperatorFrames,
)
from .geometry import ObliqueBasis, RigidTransform
from .handstream import (
    HandFrame,
    HandObservation,
    INDEX_TIP,
    PINKY_TIP,
    THUMB_TIP,
    frame_to_obj,
)
from .retarget import RetargetConfig, RetargetState, step as retarget_step
from .simarm import (
    ArmSimulator,
    ArmState,
    EpisodeReport,
    Scenario,
    ServoConfig,
    TickLog,
    check_scenario,
)
from .retarget import GRIPPER_OPEN

# Rough open-hand landmark layout (pixels, wrist at the origin, fingers up).
_HAND_TEMPLATE = np.array(
    [
        (0, 0),                                    # wrist
        (-25, -20), (-45, -40), (-60, -60), (-70, -75),   # thumb chain
        (-20, -55), (-25, -85), (-28, -105), (-30, -120),  # index chain
        (0, -60), (0, -95), (0, -115), (0, -130),          # middle chain
        (18, -55), (22, -88), (25, -108), (27, -122),      # ring chain
        (35, -45), (42, -70), (47, -88), (50, -100),       # pinky chain
    ],
    dtype=float,
)


def hand_keypoints(
    center=(320.0, 240.0),
    pinch_px: float = 120.0,
    thumb_pinky_px: Optional[float] = None,
) -> np.ndarray:
    """Plausible 21-landmark layout with controllable gesture distances:
    thumb-index separation `pinch_px` and, optionally, thumb-pinky
    separation `thumb_pinky_px`."""
    kp = _HAND_TEMPLATE + np.asarray(center, dtype=float)
    mid = (kp[THUMB_TIP] + kp[INDEX_TIP]) / 2
    gap = kp[INDEX_TIP] - kp[THUMB_TIP]
    gap = gap / np.linalg.norm(gap)
    kp[THUMB_TIP] = mid - gap * (pinch_px / 2)
    kp[INDEX_TIP] = mid + gap * (pinch_px / 2)
    if thumb_pinky_px is not None:
        span = kp[PINKY_TIP] - kp[THUMB_TIP]
        span = span / np.linalg.norm(span)
        kp[PINKY_TIP] = kp[THUMB_TIP] + span * thumb_pinky_px
    return kp


def right_hand(
    wrist_position,
    wrist_rotation=None,
    pinch_px: float = 120.0,
    confidence: float = 1.0,
) -> HandObservation:
    return HandObservation(
        keypoints=hand_keypoints(pinch_px=pinch_px),
        wrist_position=np.asarray(wrist_position, dtype=float),
        wrist_rotation=np.eye(3) if wrist_rotation is None else wrist_rotation,
        confidence=confidence,
    )


def left_control_hand(
    wrist_y: float, freeze: bool = False, wrist_x: float = -0.3, wrist_z: float = 0.6
) -> HandObservation:
    """Left hand posed to drive the scaling state machine: `wrist_y` feeds
    the slow/fast threshold, `freeze` pinches thumb to pinky."""
    return HandObservation(
        keypoints=hand_keypoints(
            center=(160.0, 240.0), thumb_pinky_px=5.0 if freeze else 160.0
        ),
        wrist_position=np.array([wrist_x, wrist_y, wrist_z]),
        wrist_rotation=np.eye(3),
        confidence=1.0,
    )


def identity_frames(origin=(0.0, 0.0, 0.0)) -> OperatorFrames:
    """Operator frames aligned with the camera axes (no skew); useful for
    tests and scripted scenarios."""
    return OperatorFrames(
        cartesian=RigidTransform(np.eye(3), np.asarray(origin, dtype=float)),
        oblique=ObliqueBasis.identity(),
        diagnostics=CalibrationDiagnostics(
            axis_pair_angles=np.array([90.0, 90.0, 90.0]),
            residual_rms=np.zeros(3),
            origin_residual=0.0,
        ),
    )


def make_sweep(
    axis: str,
    direction,
    origin=(0.0, 0.0, 0.5),
    length: float = 0.4,
    n: int = 60,
    t0: float = 0.0,
    dt: float = 1 / 30,
    noise: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> CalibrationSweep:
    """Straight wrist sweep through `origin` along `direction`, travelling
    in the +direction sense, with optional isotropic Gaussian noise."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    s = np.linspace(-length / 2, length / 2, n)
    positions = np.asarray(origin, dtype=float) + np.outer(s, d)
    if noise > 0.0:
        if rng is None:
            rng = np.random.default_rng(0)
        positions = positions + rng.normal(0.0, noise, positions.shape)
    times = t0 + dt * np.arange(n)
    return CalibrationSweep(axis, times, positions)


def sweep_hand_frames(sweep: CalibrationSweep, pinch_px: float = 120.0) -> list[HandFrame]:
    """Render a calibration sweep as right-hand frames for the wire path."""
    return [
        HandFrame(t=float(t), right=right_hand(p, pinch_px=pinch_px))
        for t, p in zip(sweep.times, sweep.positions)
    ]


@dataclass
class PegInHoleOperator:
    """Deterministic closed-loop operator for the peg-in-hole scenario.

    Phases: fast approach to a hover point above the hole, precise descent
    onto the target, then a short hold. With dynamic=False the left-hand
    gestures are omitted, pinning the engine at the fast scaling factor
    (the ablation case).
    """

    scenario: Scenario
    cfg: RetargetConfig
    seed: int = 0
    dynamic: bool = True
    noise_sigma: float = 0.005      # m, tracker noise on observed wrist
    gain: float = 0.12              # fraction of the error corrected per frame
    max_wrist_step: float = 0.05    # m per frame (~0.5 m/s at 10 Hz)
    hover_height: float = 0.006     # m above the target for the handoff
    approach_tol: float = 0.003     # m, switch to precise below this
    descend_tol: float = 0.0005     # m, begin hold below this
    settle_frames: int = 6          # consecutive in-tolerance frames (> latency)
    hold_frames: int = 10
    max_frames: int = 900
    wrist_start = (0.0, 0.2, 0.6)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)
        self._wrist = np.asarray(self.wrist_start, dtype=float)
        self._phase = "approach"
        self._held = 0
        self._settled = 0
        self._emitted = 0
        self._hover = self.scenario.target_pose.translation + np.array(
            [0.0, 0.0, self.hover_height]
        )

    def next_frame(self, t: float, arm: ArmState) -> Optional[HandFrame]:
        if self._emitted >= self.max_frames or self._held >= self.hold_frames:
            return None
        ee = arm.pose.translation
        if self._phase == "approach":
            error = self._hover - ee
            if float(np.linalg.norm(error)) < self.approach_tol:
                self._phase = "descend"
        if self._phase == "descend":
            error = self.scenario.target_pose.translation - ee
            # Declare done only once the arm has *stayed* on target longer
            # than the command latency, else in-flight commands still move it.
            if float(np.linalg.norm(error)) < self.descend_tol:
                self._settled += 1
                if self._settled >= self.settle_frames:
                    self._phase = "hold"
            else:
                self._settled = 0
        if self._phase == "hold":
            self._held += 1
            error = np.zeros(3)

        # The engine's active alpha for this frame under the dynamic schedule.
        alpha = (
            self.cfg.alpha_slow
            if (self.dynamic and self._phase in ("descend", "hold"))
            else self.cfg.alpha_fast
        )
        step = error * (self.gain / alpha)
        norm = float(np.linalg.norm(step))
        if norm > self.max_wrist_step:
            step = step * (self.max_wrist_step / norm)
        self._wrist = self._wrist + step

        observed = self._wrist + self._rng.normal(0.0, self.noise_sigma, 3)
        left = None
        if self.dynamic and self._phase in ("descend", "hold"):
            left = left_control_hand(wrist_y=0.0)
        self._emitted += 1
        return HandFrame(t=t, right=right_hand(observed), left=left)


def run_closed_loop_episode(
    policy,
    operator_frames: OperatorFrames,
    retarget_cfg: RetargetConfig,
    servo_cfg: ServoConfig,
    scenario: Scenario,
    initial_pose: RigidTransform,
    frame_rate: float = 10.0,
    settle_time: float = 2.0,
    keep_log: bool = False,
) -> tuple[EpisodeReport, list[HandFrame]]:
    """Drive a policy against the retarget pipeline and simulated arm,
    returning the report plus the emitted hand-frame stream (replayable
    through run_episode for the identical result)."""
    sim = ArmSimulator(ArmState(initial_pose, GRIPPER_OPEN, 0.0), servo_cfg)
    rstate = RetargetState.initial(retarget_cfg)
    ticks_per_frame = int(round(1.0 / (frame_rate * servo_cfg.tick)))
    emitted: list[HandFrame] = []
    log: list[TickLog] = []
    num_ticks = 0

    def record():
        if keep_log:
            cmd = sim.active_command
            log.append(
                TickLog(
                    t=sim.state.time,
                    commanded=None if cmd is None else cmd.pose,
                    achieved=sim.state.pose,
                    alpha=rstate.scaling.alpha,
                    gripper=sim.state.gripper,
                )
            )

    while True:
        frame = policy.next_frame(sim.state.time, sim.state)
        if frame is None:
            break
        emitted.append(frame)
        command, rstate = retarget_step(
            frame, sim.state.pose, operator_frames, rstate, retarget_cfg
        )
        sim.step(command)
        num_ticks += 1
        record()
        for _ in range(ticks_per_frame - 1):
            sim.step()
            num_ticks += 1
            record()

    for _ in range(int(round(settle_time / servo_cfg.tick))):
        sim.step()
        num_ticks += 1
        record()

    check = check_scenario(sim.state, scenario)
    report = EpisodeReport(
        success=check.success,
        duration=sim.state.time,
        num_frames=len(emitted),
        num_ticks=num_ticks,
        position_error=check.position_error,
        axis_error=check.axis_error,
        log=log,
    )
    return report, emitted


def strip_left_hand(frames: Iterable[HandFrame]) -> list[HandFrame]:
    """Same right-hand trajectory with all left-hand gestures removed, so
    the engine never leaves the fast scaling factor."""
    return [HandFrame(t=f.t, right=f.right, left=None) for f in frames]


def scripted_session_lines(duration_s: float = 300.0, seed: int = 7) -> list[str]:
    """A deterministic full-session wire recording: calibration protocol
    followed by teleoperation with scaling toggles, a freeze, gripper
    pinches and a right-hand dropout. Used for replay/determinism checks."""
    rng = np.random.default_rng(seed)
    lines: list[str] = []

    def emit(obj):
        lines.append(json.dumps(obj, separators=(",", ":")))

    def emit_frame(frame: HandFrame):
        obj = frame_to_obj(frame)
        obj["type"] = "hand_frame"
        emit(obj)

    t = 0.0
    dt = 0.1
    for axis, direction in (("x", (1, 0, 0)), ("y", (0, 1, 0)), ("z", (0, 0, 1))):
        emit({"type": "calib_control", "action": "begin_axis", "axis": axis})
        sweep = make_sweep(
            axis, direction, origin=(0.0, 0.1, 0.6), length=0.4, n=40,
            t0=t, dt=dt, noise=0.002, rng=rng,
        )
        for frame in sweep_hand_frames(sweep):
            emit_frame(frame)
        t = float(sweep.times[-1]) + dt
        emit({"type": "calib_control", "action": "end_axis"})
    emit({"type": "calib_control", "action": "finish"})

    wrist = np.array([0.0, 0.1, 0.6])
    n_frames = int(round((duration_s - t) / dt))
    for k in range(n_frames):
        phase = (k // 120) % 4   # rotate through fast/slow/frozen/dropout
        wrist = wrist + rng.normal(0.0, 0.004, 3)
        wrist = np.clip(wrist, [-0.3, -0.2, 0.4], [0.3, 0.4, 0.9])
        pinch = 150.0 if (k // 40) % 2 == 0 else 10.0
        left = None
        if phase == 1:
            left = left_control_hand(wrist_y=0.0)
        elif phase == 2:
            left = left_control_hand(wrist_y=0.0, freeze=True)
        right = None if (phase == 3 and k % 120 < 20) else right_hand(wrist, pinch_px=pinch)
        emit_frame(HandFrame(t=t, right=right, left=left))
        t += dt
    return lines
