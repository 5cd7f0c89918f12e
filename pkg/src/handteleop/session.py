"""Runnable engine session: wire protocol, calibration orchestration,
live socket serving, recording, and deterministic replay.

One duplex channel carries newline-delimited JSON both ways (raw TCP) or
one JSON document per message (WebSocket). Inbound messages::

    {"type": "hand_frame", "t": ..., "right": {...}|null, "left": {...}|null}
    {"type": "calib_control", "action": "begin_axis"|"end_axis"|"finish"|"reset",
     "axis": "x"|"y"|"z"}

Outbound messages: {"type": "engine_state", ...} each servo tick,
{"type": "calibration", ...} on success, {"type": "error", ...} on any
rejected input, {"type": "session_info", ...} on connect. A bare
hand-stream line (no "type") is accepted as a hand frame so plain
recordings replay directly.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import time as _time
from dataclasses import dataclass, field, replace
from typing import IO, Optional
from urllib.parse import urlparse

import numpy as np

from .calibration import (
    CalibrationError,
    CalibrationSweep,
    OperatorFrames,
    SweepDegenerate,
    calibrate,
    frame_quality_report,
    frames_to_obj,
)
from .geometry import RansacConfig, RigidTransform
from .handstream import (
    CameraIntrinsics,
    HandFrame,
    frame_from_obj,
    validate_frame_obj,
)
from .retarget import RetargetConfig, RetargetState, step as retarget_step
from .simarm import (
    DEFAULT_ARM_POSE,
    ArmSimulator,
    ArmState,
    SCENARIOS,
    Scenario,
    ServoConfig,
    TickLog,
    check_scenario,
)

logger = logging.getLogger("handteleop.session")

AXES = ("x", "y", "z")


class SessionError(Exception):
    exit_code = 1


class BindFailure(SessionError):
    exit_code = 2


class ReplayNotFound(SessionError):
    exit_code = 3


class ConfigInvalid(SessionError):
    exit_code = 4


@dataclass
class SessionConfig:
    retarget: RetargetConfig = field(default_factory=RetargetConfig)
    servo: ServoConfig = field(default_factory=ServoConfig)
    intrinsics: CameraIntrinsics = field(
        default_factory=lambda: CameraIntrinsics(fx=600, fy=600, cx=320, cy=240)
    )
    listen: Optional[str] = None      # "tcp://host:port" | "ws://host:port" | "host:port"
    replay: Optional[str] = None
    record: Optional[str] = None
    log_path: Optional[str] = None
    scenario: Optional[str] = None
    seed: int = 0
    initial_pose: RigidTransform = field(default_factory=lambda: DEFAULT_ARM_POSE)
    settle_time: float = 2.0

    def validate(self) -> None:
        if (self.listen is None) == (self.replay is None):
            raise ConfigInvalid("exactly one of --listen and --replay is required")
        if self.scenario is not None and self.scenario not in SCENARIOS:
            raise ConfigInvalid(
                f"unknown scenario {self.scenario!r}; choose from {sorted(SCENARIOS)}"
            )

    def make_scenario(self) -> Optional[Scenario]:
        if self.scenario is None:
            return None
        return SCENARIOS[self.scenario]()


def _pose_obj(pose: RigidTransform) -> dict:
    return {
        "r": [float(x) for x in pose.rotation.ravel()],
        "p": [float(x) for x in pose.translation],
    }


def config_from_obj(obj: dict) -> SessionConfig:
    """Build a SessionConfig from a decoded config document."""
    try:
        cfg = SessionConfig()
        if "retarget" in obj:
            r = dict(obj["retarget"])
            if "wcf_pose" in r:
                r["wcf_pose"] = RigidTransform(
                    np.asarray(r["wcf_pose"]["r"], dtype=float).reshape(3, 3),
                    np.asarray(r["wcf_pose"]["p"], dtype=float),
                )
            cfg.retarget = RetargetConfig(**r)
        if "servo" in obj:
            cfg.servo = ServoConfig(**obj["servo"])
        if "intrinsics" in obj:
            cfg.intrinsics = CameraIntrinsics(**obj["intrinsics"])
        if "initial_pose" in obj:
            cfg.initial_pose = RigidTransform(
                np.asarray(obj["initial_pose"]["r"], dtype=float).reshape(3, 3),
                np.asarray(obj["initial_pose"]["p"], dtype=float),
            )
        for key in ("scenario", "seed", "settle_time"):
            if key in obj:
                setattr(cfg, key, obj[key])
        return cfg
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigInvalid(f"bad config document: {exc}") from exc


def load_config(path: Optional[str]) -> SessionConfig:
    if path is None:
        return SessionConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigInvalid(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config file is not valid JSON: {exc}") from exc
    return config_from_obj(obj)


class EngineCore:
    """Deterministic single-writer engine state machine.

    All inbound messages funnel through handle_line/handle_message in
    arrival order; tick() advances the servo one step and produces the
    engine-state broadcast. No wall clock anywhere, so replaying the same
    message sequence reproduces the same outputs bit for bit.
    """

    def __init__(self, cfg: SessionConfig):
        self.cfg = cfg
        self.scenario = cfg.make_scenario()
        self.operator_frames: Optional[OperatorFrames] = None
        self.rstate = RetargetState.initial(cfg.retarget)
        self.sim = ArmSimulator(ArmState(cfg.initial_pose, "open", 0.0), cfg.servo)
        self.phase = "idle"   # idle | sweep_x | sweep_y | sweep_z | calibrated
        self._sweeps: dict[str, list[tuple[float, np.ndarray]]] = {}
        self._active_axis: Optional[str] = None
        self._last_frame_t: Optional[float] = None
        self.frames_in = 0
        self.frames_rejected = 0
        self.ticks = 0

    # -- inbound ------------------------------------------------------------

    def handle_line(self, line: str) -> list[dict]:
        line = line.strip()
        if not line:
            return []
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            return [self._reject(f"invalid JSON: {exc.msg}")]
        return self.handle_message(obj)

    def handle_message(self, obj) -> list[dict]:
        if not isinstance(obj, dict):
            return [self._reject("message must be a JSON object")]
        kind = obj.get("type", "hand_frame")  # bare stream lines are frames
        if kind == "hand_frame":
            return self._handle_hand_frame(obj)
        if kind == "calib_control":
            return self._handle_calib_control(obj)
        return [self._reject(f"unknown message type {kind!r}")]

    def _reject(self, reason: str, **extra) -> dict:
        self.frames_rejected += 1
        logger.warning("rejected input: %s", reason)
        return {"type": "error", "error": "Rejected", "message": reason, **extra}

    def _handle_hand_frame(self, obj) -> list[dict]:
        problems = validate_frame_obj(
            {k: v for k, v in obj.items() if k != "type"}
        )
        if problems:
            return [self._reject("; ".join(problems))]
        frame = frame_from_obj(obj)
        if self._last_frame_t is not None and frame.t < self._last_frame_t:
            return [
                self._reject(
                    f"timestamp {frame.t} decreases below {self._last_frame_t}"
                )
            ]
        self._last_frame_t = frame.t
        self.frames_in += 1

        if self._active_axis is not None:
            if frame.right is not None:
                self._sweeps.setdefault(self._active_axis, []).append(
                    (frame.t, frame.right.wrist_position)
                )
            return []
        if self.operator_frames is not None:
            command, self.rstate = retarget_step(
                frame, self.sim.state.pose, self.operator_frames,
                self.rstate, self.cfg.retarget,
            )
            self.sim.submit(command)
        return []

    def _handle_calib_control(self, obj) -> list[dict]:
        action = obj.get("action")
        if action == "begin_axis":
            axis = obj.get("axis")
            if axis not in AXES:
                return [self._reject(f"begin_axis needs axis in {AXES}")]
            self._active_axis = axis
            self._sweeps[axis] = []
            self.phase = f"sweep_{axis}"
            return []
        if action == "end_axis":
            self._active_axis = None
            self.phase = "calibrated" if self.operator_frames is not None else "idle"
            return []
        if action == "reset":
            self._active_axis = None
            self._sweeps.clear()
            self.phase = "calibrated" if self.operator_frames is not None else "idle"
            return []
        if action == "finish":
            return self._finish_calibration()
        return [self._reject(f"unknown calib_control action {action!r}")]

    def _finish_calibration(self) -> list[dict]:
        self._active_axis = None
        missing = [a for a in AXES if not self._sweeps.get(a)]
        if missing:
            return [
                {
                    "type": "error",
                    "error": "MissingAxis",
                    "message": f"no sweep recorded for axis {missing[0]}",
                    "missing_axis": missing[0],
                }
            ]
        sweeps = [
            CalibrationSweep.from_samples(axis, self._sweeps[axis]) for axis in AXES
        ]
        try:
            frames = calibrate(sweeps, RansacConfig(seed=self.cfg.seed))
        except CalibrationError as exc:
            # Drop the offending sweep (or all, if the blame is joint) so the
            # operator can retry; the session stays alive.
            if isinstance(exc, SweepDegenerate) and exc.axis is not None:
                self._sweeps.pop(exc.axis, None)
            else:
                self._sweeps.clear()
            self.phase = "calibrated" if self.operator_frames is not None else "idle"
            out = {
                "type": "error",
                "error": type(exc).__name__,
                "message": str(exc),
            }
            if isinstance(exc, SweepDegenerate) and exc.axis is not None:
                out["axis"] = exc.axis
            return [out]
        self.operator_frames = frames
        self.rstate = RetargetState.initial(self.cfg.retarget)
        self.phase = "calibrated"
        report = frame_quality_report(frames)
        return [
            {
                "type": "calibration",
                "frames": frames_to_obj(frames),
                "quality": {
                    "axis_pair_angles": [float(x) for x in report.axis_pair_angles],
                    "residual_rms": [float(x) for x in report.residual_rms],
                    "origin_residual": float(report.origin_residual),
                    "basis_det": float(report.basis_det),
                    "warnings": list(report.warnings),
                },
            }
        ]

    # -- time ---------------------------------------------------------------

    def tick(self) -> dict:
        state = self.sim.step()
        self.ticks += 1
        return self.state_message()

    def advance_to(self, t: float) -> list[dict]:
        out = []
        while self.sim.state.time < t - 1e-9:
            out.append(self.tick())
        return out

    def state_message(self) -> dict:
        state = self.sim.state
        command = self.sim.active_command
        return {
            "type": "engine_state",
            "t": float(state.time),
            "pose": _pose_obj(state.pose),
            "commanded": None if command is None else _pose_obj(command.pose),
            "gripper": state.gripper,
            "alpha": float(self.rstate.scaling.alpha),
            "scaling_mode": self.rstate.scaling.mode,
            "engaged": self.rstate.engagement is not None,
            "calibration_phase": self.phase,
        }

    def session_info(self) -> dict:
        scenario = self.scenario
        return {
            "type": "session_info",
            "tick": float(self.cfg.servo.tick),
            "calibration_phase": self.phase,
            "scenario": None
            if scenario is None
            else {
                "kind": scenario.kind,
                "target_pose": _pose_obj(scenario.target_pose),
                "position_tolerance": float(scenario.position_tolerance),
                "axis_tolerance": float(scenario.axis_tolerance),
            },
        }

    def tick_log(self) -> TickLog:
        cmd = self.sim.active_command
        return TickLog(
            t=self.sim.state.time,
            commanded=None if cmd is None else cmd.pose,
            achieved=self.sim.state.pose,
            alpha=self.rstate.scaling.alpha,
            gripper=self.sim.state.gripper,
        )

    def final_report(self) -> dict:
        report = {
            "frames_in": self.frames_in,
            "frames_rejected": self.frames_rejected,
            "ticks": self.ticks,
            "duration": float(self.sim.state.time),
            "calibrated": self.operator_frames is not None,
            "final_pose": _pose_obj(self.sim.state.pose),
            "gripper": self.sim.state.gripper,
            "scenario": None,
        }
        if self.scenario is not None:
            check = check_scenario(self.sim.state, self.scenario)
            report["scenario"] = {
                "kind": self.scenario.kind,
                "success": bool(check.success),
                "position_error": float(check.position_error),
                "axis_error": float(check.axis_error),
            }
        return report


# -- replay -------------------------------------------------------------------


def run_replay(cfg: SessionConfig, out: Optional[IO] = None) -> dict:
    """Drive the engine from a recorded session file in virtual time.

    Returns the final report (also written as canonical JSON to `out`).
    """
    try:
        infile = open(cfg.replay, "r", encoding="utf-8")
    except (FileNotFoundError, IsADirectoryError) as exc:
        raise ReplayNotFound(f"replay file not found: {cfg.replay}") from exc

    engine = EngineCore(cfg)
    record_f = open(cfg.record, "w", encoding="utf-8") if cfg.record else None
    log_f = open(cfg.log_path, "w", encoding="utf-8") if cfg.log_path else None

    def tick_once():
        engine.tick()
        if log_f:
            log_f.write(
                json.dumps(engine.tick_log().to_obj(), separators=(",", ":")) + "\n"
            )

    try:
        for raw in infile:
            if record_f:
                record_f.write(raw if raw.endswith("\n") else raw + "\n")
            stripped = raw.strip()
            if not stripped:
                continue
            # Advance virtual time to each frame's timestamp before applying.
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError:
                obj = None
            if (
                isinstance(obj, dict)
                and obj.get("type", "hand_frame") == "hand_frame"
                and isinstance(obj.get("t"), (int, float))
            ):
                while engine.sim.state.time < float(obj["t"]) - 1e-9:
                    tick_once()
            for msg in engine.handle_line(stripped):
                if msg.get("type") == "error":
                    logger.info("replay: %s", msg.get("message"))
        for _ in range(int(round(cfg.settle_time / cfg.servo.tick))):
            tick_once()
    finally:
        infile.close()
        if record_f:
            record_f.close()
        if log_f:
            log_f.close()

    report = engine.final_report()
    if out is not None:
        out.write(json.dumps(report, separators=(",", ":"), sort_keys=True) + "\n")
    return report


# -- live serving ---------------------------------------------------------------


def _parse_listen(listen: str) -> tuple[str, str, int]:
    if "//" not in listen:
        listen = "tcp://" + listen
    parsed = urlparse(listen)
    if parsed.scheme not in ("tcp", "ws"):
        raise ConfigInvalid(f"unsupported listen scheme {parsed.scheme!r}")
    if parsed.hostname is None or parsed.port is None:
        raise ConfigInvalid(f"listen address needs host:port, got {listen!r}")
    return parsed.scheme, parsed.hostname, parsed.port


async def _serve(cfg: SessionConfig) -> None:
    engine = EngineCore(cfg)
    inbox: asyncio.Queue[str] = asyncio.Queue()
    senders: set = set()
    record_f = open(cfg.record, "a", encoding="utf-8") if cfg.record else None
    scheme, host, port = _parse_listen(cfg.listen)

    def record(raw: str):
        if record_f:
            record_f.write(raw if raw.endswith("\n") else raw + "\n")
            record_f.flush()

    async def broadcast(msg: dict):
        if not senders:
            return
        data = json.dumps(msg, separators=(",", ":"))
        for send in list(senders):
            try:
                await send(data)
            except Exception:
                senders.discard(send)

    async def handle_tcp(reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        async def send(data: str):
            writer.write(data.encode() + b"\n")
            await writer.drain()

        senders.add(send)
        await send(json.dumps(engine.session_info(), separators=(",", ":")))
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                await inbox.put(line.decode("utf-8", errors="replace"))
        finally:
            senders.discard(send)
            writer.close()

    async def handle_ws(websocket):
        async def send(data: str):
            await websocket.send(data)

        senders.add(send)
        await send(json.dumps(engine.session_info(), separators=(",", ":")))
        try:
            async for message in websocket:
                await inbox.put(
                    message if isinstance(message, str) else message.decode()
                )
        finally:
            senders.discard(send)

    try:
        if scheme == "tcp":
            server = await asyncio.start_server(handle_tcp, host, port)
        else:
            import websockets

            server = await websockets.serve(handle_ws, host, port)
    except OSError as exc:
        raise BindFailure(f"cannot bind {cfg.listen}: {exc}") from exc

    logger.info("listening on %s://%s:%d", scheme, host, port)
    tick = cfg.servo.tick
    start = _time.monotonic()
    k = 0
    try:
        while True:
            while not inbox.empty():
                raw = inbox.get_nowait()
                record(raw)
                for msg in engine.handle_line(raw):
                    await broadcast(msg)
            await broadcast(engine.tick())
            k += 1
            delay = start + k * tick - _time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                await asyncio.sleep(0)  # yield; we're behind schedule
    finally:
        server.close()
        if record_f:
            record_f.close()


def run_session(cfg: SessionConfig, out: Optional[IO] = None) -> int:
    """Run a session to completion; returns the process exit status."""
    cfg.validate()
    if cfg.replay is not None:
        run_replay(cfg, out=out)
        return 0
    try:
        asyncio.run(_serve(cfg))
    except KeyboardInterrupt:
        logger.info("interrupted")
    return 0
