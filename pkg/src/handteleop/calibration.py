"""Operator-frame calibration from three guided wrist sweeps.

The operator sweeps their wrist once per axis. Each sweep is RANSAC-fit to
a 3D line; the three (generally non-orthogonal) line directions yield both
a Cartesian operator frame (nearest rotation + point closest to the three
lines) and the oblique basis that preserves motion along the swept lines
exactly. Each axis is signed by the sweep's direction of travel, so moving
the wrist the same way during teleoperation moves the end effector in the
positive axis direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .geometry import (
    Line3,
    ObliqueBasis,
    RansacConfig,
    RigidTransform,
    NoConsensus,
    angle_between,
    closest_point_to_lines,
    nearest_rotation,
    ransac_line,
)

AXES = ("x", "y", "z")
MIN_SWEEP_SAMPLES = 30
MIN_SWEEP_EXTENT = 0.15   # meters
MIN_PAIR_ANGLE_DEG = 45.0
MIN_BASIS_DET = 0.05


class CalibrationError(ValueError):
    pass


class SweepDegenerate(CalibrationError):
    """A sweep is unusable: too few samples, too small, or no consensus."""

    def __init__(self, message: str, axis: Optional[str] = None):
        super().__init__(message)
        self.axis = axis


class AxesNearParallel(CalibrationError):
    """Two fitted sweep directions are closer than 45 degrees."""


class AxesNearCoplanar(CalibrationError):
    """The three fitted directions nearly span a plane only."""


@dataclass(frozen=True)
class CalibrationSweep:
    """Time-ordered wrist positions recorded while sweeping one axis."""

    axis: str                 # "x" | "y" | "z"
    times: np.ndarray         # (N,) seconds, strictly increasing
    positions: np.ndarray     # (N, 3) meters, camera frame

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or p.shape != (t.shape[0], 3):
            raise ValueError("times must be (N,) and positions (N, 3)")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", p)

    @classmethod
    def from_samples(cls, axis: str, samples: Sequence[tuple[float, np.ndarray]]):
        times = np.array([t for t, _ in samples], dtype=float)
        positions = np.array([np.asarray(p, dtype=float) for _, p in samples])
        return cls(axis, times, positions)

    @property
    def extent(self) -> float:
        """Max pairwise distance between samples."""
        if len(self.positions) < 2:
            return 0.0
        return float(pdist(self.positions).max())

    def check(self, min_samples: int = MIN_SWEEP_SAMPLES) -> None:
        n = len(self.times)
        if n < min_samples:
            raise SweepDegenerate(
                f"sweep {self.axis}: {n} samples, need at least {min_samples}",
                axis=self.axis,
            )
        if np.any(np.diff(self.times) <= 0):
            raise SweepDegenerate(
                f"sweep {self.axis}: timestamps not increasing", axis=self.axis
            )
        extent = self.extent
        if extent < MIN_SWEEP_EXTENT:
            raise SweepDegenerate(
                f"sweep {self.axis}: extent {extent * 100:.1f} cm is below "
                f"{MIN_SWEEP_EXTENT * 100:.0f} cm",
                axis=self.axis,
            )


@dataclass(frozen=True)
class CalibrationDiagnostics:
    axis_pair_angles: np.ndarray  # degrees: (x,y), (x,z), (y,z)
    residual_rms: np.ndarray      # meters, per sweep (x, y, z)
    origin_residual: float        # meters, RMS distance of origin to lines


@dataclass(frozen=True)
class OperatorFrames:
    """Calibrated operator frames: the Cartesian frame pose in the camera
    frame, and the oblique axes expressed in that Cartesian frame."""

    cartesian: RigidTransform
    oblique: ObliqueBasis
    diagnostics: CalibrationDiagnostics


def _signed_direction(sweep: CalibrationSweep, cfg: RansacConfig):
    """RANSAC line for a sweep, signed by the direction of temporal travel."""
    try:
        result = ransac_line(sweep.positions, cfg)
    except NoConsensus as exc:
        raise SweepDegenerate(f"sweep {sweep.axis}: {exc}", axis=sweep.axis) from exc
    inlier_idx = np.flatnonzero(result.inlier_mask)
    travel = sweep.positions[inlier_idx[-1]] - sweep.positions[inlier_idx[0]]
    direction = result.line.direction
    if float(np.dot(travel, direction)) < 0.0:
        direction = -direction
    line = Line3(result.line.point, direction)
    rms = float(np.sqrt(np.mean(line.distances(sweep.positions[result.inlier_mask]) ** 2)))
    return line, rms


def calibrate(
    sweeps: Sequence[CalibrationSweep],
    ransac: Optional[RansacConfig] = None,
    min_samples: int = MIN_SWEEP_SAMPLES,
) -> OperatorFrames:
    """Build the operator frames from exactly three sweeps (one per axis).

    Raises:
        SweepDegenerate: a sweep fails its size/extent/consensus checks.
        AxesNearParallel: some pair of fitted directions is under 45 deg.
        AxesNearCoplanar: fitted directions nearly lie in one plane.
    """
    if ransac is None:
        ransac = RansacConfig()
    by_axis = {s.axis: s for s in sweeps}
    if len(sweeps) != 3 or set(by_axis) != set(AXES):
        raise CalibrationError("need exactly one sweep per axis x, y, z")

    lines: dict[str, Line3] = {}
    residuals = np.zeros(3)
    for k, axis in enumerate(AXES):
        sweep = by_axis[axis]
        sweep.check(min_samples)
        lines[axis], residuals[k] = _signed_direction(sweep, ransac)

    dirs = np.column_stack([lines[a].direction for a in AXES])
    pair_angles = np.degrees(
        [
            angle_between(dirs[:, 0], dirs[:, 1]),
            angle_between(dirs[:, 0], dirs[:, 2]),
            angle_between(dirs[:, 1], dirs[:, 2]),
        ]
    )
    for angle, pair in zip(pair_angles, ("x/y", "x/z", "y/z")):
        if angle < MIN_PAIR_ANGLE_DEG or angle > 180.0 - MIN_PAIR_ANGLE_DEG:
            raise AxesNearParallel(
                f"{pair} sweep directions are {angle:.1f} deg apart"
            )
    if abs(np.linalg.det(dirs)) <= MIN_BASIS_DET:
        raise AxesNearCoplanar(
            f"sweep directions are near-coplanar (|det| = {abs(np.linalg.det(dirs)):.4f})"
        )

    rotation = nearest_rotation(dirs)
    origin = closest_point_to_lines([lines[a] for a in AXES])
    cartesian = RigidTransform(rotation, origin)
    # Oblique axes are the fitted directions re-expressed in the Cartesian
    # operator frame (rotation-only: directions are free vectors).
    oblique = ObliqueBasis.from_axes(
        rotation.T @ dirs[:, 0],
        rotation.T @ dirs[:, 1],
        rotation.T @ dirs[:, 2],
        min_det=MIN_BASIS_DET,
    )
    origin_residual = float(
        np.sqrt(np.mean([lines[a].distances(origin)[0] ** 2 for a in AXES]))
    )
    return OperatorFrames(
        cartesian=cartesian,
        oblique=oblique,
        diagnostics=CalibrationDiagnostics(pair_angles, residuals, origin_residual),
    )


@dataclass(frozen=True)
class QualityReport:
    axis_pair_angles: np.ndarray
    residual_rms: np.ndarray
    origin_residual: float
    basis_det: float
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.warnings

    def __str__(self) -> str:
        lines = [
            "operator frame quality",
            "  axis pair angles [deg]: "
            + "  ".join(
                f"{pair}={angle:.2f}"
                for pair, angle in zip(("x/y", "x/z", "y/z"), self.axis_pair_angles)
            ),
            "  sweep residual RMS [mm]: "
            + "  ".join(
                f"{axis}={rms * 1000:.2f}" for axis, rms in zip(AXES, self.residual_rms)
            ),
            f"  origin residual [mm]: {self.origin_residual * 1000:.2f}",
            f"  oblique basis det: {self.basis_det:.4f}",
        ]
        if self.warnings:
            lines += [f"  WARNING: {w}" for w in self.warnings]
        else:
            lines.append("  no warnings")
        return "\n".join(lines)


def frame_quality_report(
    frames: OperatorFrames,
    angle_warn_deg: float = 20.0,
    residual_warn: float = 0.02,
) -> QualityReport:
    """Summarize calibration health and flag questionable geometry."""
    diag = frames.diagnostics
    warnings = []
    for pair, angle in zip(("x/y", "x/z", "y/z"), diag.axis_pair_angles):
        if abs(angle - 90.0) > angle_warn_deg:
            warnings.append(f"{pair} axes {angle:.1f} deg apart (skewed sweeps)")
    for axis, rms in zip(AXES, diag.residual_rms):
        if rms > residual_warn:
            warnings.append(f"{axis} sweep residual {rms * 1000:.1f} mm (noisy sweep)")
    det = frames.oblique.det
    if abs(det) < 2 * MIN_BASIS_DET:
        warnings.append(f"oblique basis near-coplanar (det = {det:.3f})")
    return QualityReport(
        axis_pair_angles=diag.axis_pair_angles,
        residual_rms=diag.residual_rms,
        origin_residual=diag.origin_residual,
        basis_det=det,
        warnings=warnings,
    )


def frames_to_obj(frames: OperatorFrames) -> dict:
    """Single-document JSON form of a calibration result."""
    diag = frames.diagnostics
    return {
        "cartesian": {
            "rotation": [float(x) for x in frames.cartesian.rotation.ravel()],
            "translation": [float(x) for x in frames.cartesian.translation],
        },
        "oblique": {
            "ax": [float(x) for x in frames.oblique.ax],
            "ay": [float(x) for x in frames.oblique.ay],
            "az": [float(x) for x in frames.oblique.az],
        },
        "diagnostics": {
            "axis_pair_angles": [float(x) for x in diag.axis_pair_angles],
            "residual_rms": [float(x) for x in diag.residual_rms],
            "origin_residual": float(diag.origin_residual),
        },
    }


def frames_from_obj(obj: dict) -> OperatorFrames:
    cart = obj["cartesian"]
    obl = obj["oblique"]
    diag = obj["diagnostics"]
    return OperatorFrames(
        cartesian=RigidTransform(
            np.asarray(cart["rotation"], dtype=float).reshape(3, 3),
            np.asarray(cart["translation"], dtype=float),
        ),
        oblique=ObliqueBasis.from_axes(obl["ax"], obl["ay"], obl["az"]),
        diagnostics=CalibrationDiagnostics(
            axis_pair_angles=np.asarray(diag["axis_pair_angles"], dtype=float),
            residual_rms=np.asarray(diag["residual_rms"], dtype=float),
            origin_residual=float(diag["origin_residual"]),
        ),
    )
