"""Hand-observation data contract and stream I/O.

An observation carries the 21 standard hand landmarks in image space plus
the wrist pose in the operator camera frame. Streams are JSON Lines, one
frame per line, schema::

    {"t": <sec>, "right": {"kp": [[u,v] x21], "p": [x,y,z],
                           "r": [9 row-major], "conf": <0..1>},
     "left": null}

Numbers are written as Python's shortest round-trip decimals, so a
canonical-form stream survives read/write cycles byte-for-byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Optional, Union

import numpy as np

from .geometry import ensure_rotation

NUM_KEYPOINTS = 21
# Standard 21-landmark hand topology indices.
WRIST = 0
THUMB_TIP = 4
INDEX_TIP = 8
PINKY_TIP = 20


class StreamError(ValueError):
    """Base class for hand-stream failures."""


class ParseError(StreamError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class MonotonicityError(StreamError):
    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class NonPositiveDepth(ValueError):
    pass


class NonPositiveScale(ValueError):
    pass


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics, all in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class HandObservation:
    """One tracked hand: 21 image keypoints plus the wrist pose in the
    operator camera frame."""

    keypoints: np.ndarray      # (21, 2) pixels
    wrist_position: np.ndarray  # (3,) meters, camera frame
    wrist_rotation: np.ndarray  # (3, 3), camera frame
    confidence: float = 1.0

    def __post_init__(self):
        kp = np.asarray(self.keypoints, dtype=float)
        if kp.shape != (NUM_KEYPOINTS, 2) or not np.all(np.isfinite(kp)):
            raise ValueError("keypoints must be a finite (21, 2) array")
        object.__setattr__(self, "keypoints", kp)
        p = np.asarray(self.wrist_position, dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValueError("wrist position must be a finite 3-vector")
        object.__setattr__(self, "wrist_position", p)
        object.__setattr__(self, "wrist_rotation", ensure_rotation(self.wrist_rotation))
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must be in [0, 1]")


@dataclass(frozen=True)
class HandFrame:
    """Timestamped pair of optional hand observations."""

    t: float
    right: Optional[HandObservation] = None
    left: Optional[HandObservation] = None

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError("timestamp must be finite")


def deproject(u: float, v: float, depth: float, intr: CameraIntrinsics) -> np.ndarray:
    """Pinhole deprojection of pixel (u, v) at the given depth (meters)."""
    if depth <= 0:
        raise NonPositiveDepth(f"depth must be positive, got {depth}")
    return np.array(
        [(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth]
    )


def project(point, intr: CameraIntrinsics) -> tuple[float, float]:
    """Forward pinhole projection; inverse of deproject."""
    x, y, z = np.asarray(point, dtype=float)
    if z <= 0:
        raise NonPositiveDepth(f"point depth must be positive, got {z}")
    return (intr.fx * x / z + intr.cx, intr.fy * y / z + intr.cy)


def keypoint_bbox(
    keypoints,
    margin: float = 0.0,
    width: Optional[int] = None,
    height: Optional[int] = None,
) -> tuple[float, float, float, float]:
    """Axis-aligned bounding box (umin, vmin, umax, vmax) of the keypoints,
    expanded by `margin` (fraction of the box size, per side) and clamped
    to the image when width/height are given."""
    kp = np.asarray(keypoints, dtype=float)
    umin, vmin = kp.min(axis=0)
    umax, vmax = kp.max(axis=0)
    du = (umax - umin) * margin
    dv = (vmax - vmin) * margin
    umin, umax = umin - du, umax + du
    vmin, vmax = vmin - dv, vmax + dv
    if width is not None:
        umin, umax = max(0.0, umin), min(float(width), umax)
    if height is not None:
        vmin, vmax = max(0.0, vmin), min(float(height), vmax)
    return (umin, vmin, umax, vmax)


def weak_perspective_depth(s_h: float, intr: CameraIntrinsics, C: float) -> float:
    """Monocular depth from the weak-perspective hand scale: C * fx / s_h.

    Valid while the whole hand sits at roughly one depth; out-of-plane
    finger motion (e.g. a pinch toward the camera) breaks the assumption.
    """
    if s_h <= 0:
        raise NonPositiveScale(f"scale must be positive, got {s_h}")
    return C * intr.fx / s_h


def calibrate_depth_scale(
    depth_ref: float, s_h_ref: float, intr: CameraIntrinsics
) -> float:
    """Fit the weak-perspective constant C from one known-depth frame."""
    if depth_ref <= 0:
        raise NonPositiveDepth(f"reference depth must be positive, got {depth_ref}")
    if s_h_ref <= 0:
        raise NonPositiveScale(f"reference scale must be positive, got {s_h_ref}")
    return depth_ref * s_h_ref / intr.fx


def median_window_depth(depth_map, u: float, v: float, window: int = 5) -> float:
    """Median depth in a window around (u, v), ignoring non-positive holes."""
    d = np.asarray(depth_map, dtype=float)
    r, c = int(round(v)), int(round(u))
    h = window // 2
    patch = d[max(0, r - h): r + h + 1, max(0, c - h): c + h + 1]
    valid = patch[patch > 0]
    if valid.size == 0:
        raise NonPositiveDepth(f"no valid depth around ({u:.0f}, {v:.0f})")
    return float(np.median(valid))


# --- JSON Lines serialization ------------------------------------------------

def _hand_to_obj(hand: Optional[HandObservation]):
    if hand is None:
        return None
    return {
        "kp": [[float(u), float(v)] for u, v in hand.keypoints],
        "p": [float(x) for x in hand.wrist_position],
        "r": [float(x) for x in hand.wrist_rotation.ravel()],
        "conf": float(hand.confidence),
    }


def _hand_from_obj(obj) -> Optional[HandObservation]:
    if obj is None:
        return None
    kp = np.asarray(obj["kp"], dtype=float)
    r = np.asarray(obj["r"], dtype=float).reshape(3, 3)
    return HandObservation(
        keypoints=kp,
        wrist_position=np.asarray(obj["p"], dtype=float),
        wrist_rotation=r,
        confidence=float(obj["conf"]),
    )


def frame_to_obj(frame: HandFrame) -> dict:
    return {
        "t": float(frame.t),
        "right": _hand_to_obj(frame.right),
        "left": _hand_to_obj(frame.left),
    }


def frame_from_obj(obj: dict) -> HandFrame:
    return HandFrame(
        t=float(obj["t"]),
        right=_hand_from_obj(obj.get("right")),
        left=_hand_from_obj(obj.get("left")),
    )


def frame_to_json(frame: HandFrame) -> str:
    return json.dumps(frame_to_obj(frame), separators=(",", ":"))


def validate_frame_obj(obj) -> list[str]:
    """Schema check for a decoded frame object; returns a list of problems
    (empty when valid). Used for wire-frame validation and console tests."""
    problems: list[str] = []
    if not isinstance(obj, dict):
        return ["frame must be a JSON object"]
    t = obj.get("t")
    if not isinstance(t, (int, float)) or not math.isfinite(t):
        problems.append("t must be a finite number")
    for side in ("right", "left"):
        hand = obj.get(side)
        if hand is None:
            continue
        if not isinstance(hand, dict):
            problems.append(f"{side} must be an object or null")
            continue
        kp = hand.get("kp")
        if (
            not isinstance(kp, list)
            or len(kp) != NUM_KEYPOINTS
            or any(not isinstance(pt, list) or len(pt) != 2 for pt in kp)
        ):
            problems.append(f"{side}.kp must be 21 [u, v] pairs")
        p = hand.get("p")
        if not isinstance(p, list) or len(p) != 3:
            problems.append(f"{side}.p must be a 3-vector")
        r = hand.get("r")
        if not isinstance(r, list) or len(r) != 9:
            problems.append(f"{side}.r must be 9 row-major reals")
        conf = hand.get("conf")
        if not isinstance(conf, (int, float)) or not (0.0 <= conf <= 1.0):
            problems.append(f"{side}.conf must be in [0, 1]")
    return problems


def _open_maybe(path_or_file: Union[str, IO], mode: str):
    if hasattr(path_or_file, "read") or hasattr(path_or_file, "write"):
        return path_or_file, False
    return open(path_or_file, mode, encoding="utf-8"), True


def stream_write(path_or_file: Union[str, IO], frames: Iterable[HandFrame]) -> int:
    """Write frames as JSON Lines; returns the number of frames written."""
    f, owned = _open_maybe(path_or_file, "w")
    count = 0
    try:
        for frame in frames:
            f.write(frame_to_json(frame))
            f.write("\n")
            count += 1
    finally:
        if owned:
            f.close()
    return count


def stream_read(path_or_file: Union[str, IO]) -> Iterator[HandFrame]:
    """Iterate frames from a JSON Lines stream.

    Raises:
        ParseError: malformed JSON or schema violation (with line number).
        MonotonicityError: a timestamp decreases (with line number).
    """
    f, owned = _open_maybe(path_or_file, "r")
    last_t = None
    try:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line_number) from exc
            problems = validate_frame_obj(obj)
            if problems:
                raise ParseError("; ".join(problems), line_number)
            try:
                frame = frame_from_obj(obj)
            except (ValueError, KeyError) as exc:
                raise ParseError(str(exc), line_number) from exc
            if last_t is not None and frame.t < last_t:
                raise MonotonicityError(
                    f"timestamp {frame.t} decreases below {last_t}", line_number
                )
            last_t = frame.t
            yield frame
    finally:
        if owned:
            f.close()
