"""3D geometry kernel: rotations, rigid transforms, robust line fitting,
and oblique (non-orthogonal) coordinate measures.

Conventions: positions in meters, angles in radians. A rotation matrix's
columns are the child frame's axes expressed in the parent frame; a rigid
transform maps child-frame coordinates into the parent frame. All
operations are pure functions over immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

UNIT_TOL = 1e-12
ROTATION_TOL = 1e-9
MIN_BASIS_DET = 0.05


class GeometryError(ValueError):
    """Base class for geometry-kernel failures."""


class DegenerateInput(GeometryError):
    """Input does not determine a solution (e.g. coincident points)."""


class NoConsensus(GeometryError):
    """RANSAC found no consensus set of the required size."""


class IllConditioned(GeometryError):
    """The nearest-rotation projection is not unique for this input."""


class Degenerate(GeometryError):
    """A linear system required by the operation is singular."""


def as_vec3(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    return v


def normalize(v) -> np.ndarray:
    """Unit vector along v. Raises DegenerateInput on (near-)zero input."""
    v = as_vec3(v)
    n = float(np.linalg.norm(v))
    if n < UNIT_TOL:
        raise DegenerateInput("cannot normalize a zero-length vector")
    return v / n


def is_rotation(R: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
        return False
    return abs(np.linalg.det(R) - 1.0) <= tol


def ensure_rotation(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if not is_rotation(R):
        raise ValueError("matrix is not a valid rotation (R^T R = I, det = +1)")
    return R


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rodrigues' formula: rotation by `angle` radians about `axis`."""
    a = normalize(axis)
    K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rotation_angle(R) -> float:
    """Geodesic angle of R from the identity, in [0, pi]."""
    R = np.asarray(R, dtype=float)
    c = (np.trace(R) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def geodesic_distance(Ra, Rb) -> float:
    """Angle of the relative rotation between Ra and Rb, in [0, pi]."""
    return rotation_angle(np.asarray(Ra).T @ np.asarray(Rb))


def angle_between(u, v) -> float:
    """Unsigned angle between two directions, in [0, pi]."""
    a = normalize(u)
    b = normalize(v)
    return float(np.arccos(np.clip(float(np.dot(a, b)), -1.0, 1.0)))


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) pose: `rotation` columns are the child axes in the parent
    frame, `translation` is the child origin in the parent frame."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", ensure_rotation(self.rotation))
        object.__setattr__(self, "translation", as_vec3(self.translation))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self * other: apply `other` first, then self."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.rotation.T, -(self.rotation.T @ self.translation))

    def apply(self, point) -> np.ndarray:
        """Map a point from the child frame into the parent frame."""
        return self.rotation @ as_vec3(point) + self.translation

    def apply_vector(self, vec) -> np.ndarray:
        """Map a free vector (no translation) into the parent frame."""
        return self.rotation @ as_vec3(vec)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def almost_equal(self, other: "RigidTransform", tol: float = 1e-9) -> bool:
        return (
            np.max(np.abs(self.translation - other.translation)) <= tol
            and geodesic_distance(self.rotation, other.rotation) <= tol
        )


@dataclass(frozen=True)
class Line3:
    """Infinite 3D line through `point` with unit `direction`."""

    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", as_vec3(self.point))
        object.__setattr__(self, "direction", normalize(self.direction))

    def distances(self, points) -> np.ndarray:
        """Perpendicular distances from points (N,3) to the line."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rel = pts - self.point
        along = rel @ self.direction
        perp = rel - np.outer(along, self.direction)
        return np.linalg.norm(perp, axis=1)


def fit_line_least_squares(points) -> Line3:
    """Least-squares 3D line fit.

    Returns the line through the centroid along the principal axis of the
    point scatter; this minimizes the sum of squared point-to-line
    distances.

    Raises:
        DegenerateInput: fewer than 2 distinct points.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (N,3) points, got shape {pts.shape}")
    if pts.shape[0] < 2:
        raise DegenerateInput("line fit needs at least 2 points")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    # Principal axis = top right-singular vector of the centered cloud.
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[0] < UNIT_TOL:
        raise DegenerateInput("line fit needs at least 2 distinct points")
    return Line3(centroid, vt[0])


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 200
    inlier_threshold: float = 0.01
    min_inliers: Optional[int] = None  # None -> max(10, ceil(0.3 * n))
    seed: int = 0

    def resolve_min_inliers(self, n_points: int) -> int:
        if self.min_inliers is not None:
            return self.min_inliers
        return max(10, int(np.ceil(0.3 * n_points)))


@dataclass(frozen=True)
class RansacResult:
    line: Line3
    inlier_mask: np.ndarray  # bool (N,)


def ransac_line(points, cfg: RansacConfig = RansacConfig()) -> RansacResult:
    """Robust 3D line fit: 2-point hypotheses, inliers by perpendicular
    distance, least-squares refit on the largest consensus set.

    Deterministic for a fixed cfg.seed.

    Raises:
        NoConsensus: best consensus set smaller than cfg.min_inliers.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    min_inliers = cfg.resolve_min_inliers(n)
    rng = np.random.default_rng(cfg.seed)

    best_mask = None
    best_count = 0
    for _ in range(cfg.iterations):
        i, j = rng.choice(n, size=2, replace=False) if n >= 2 else (0, 0)
        chord = pts[j] - pts[i]
        if np.linalg.norm(chord) < UNIT_TOL:
            continue
        candidate = Line3(pts[i], chord)
        mask = candidate.distances(pts) < cfg.inlier_threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask

    if best_mask is None or best_count < min_inliers:
        raise NoConsensus(
            f"best consensus has {best_count} inliers, need {min_inliers}"
        )
    return RansacResult(fit_line_least_squares(pts[best_mask]), best_mask)


def nearest_rotation(M) -> np.ndarray:
    """Project a 3x3 matrix to the nearest rotation in Frobenius norm.

    Polar factor via SVD with the determinant corrected to +1 on the
    smallest singular direction.

    Raises:
        IllConditioned: a sign flip is required but the two smallest
            singular values coincide, so the projection is not unique.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3) or not np.all(np.isfinite(M)):
        raise ValueError("expected a finite 3x3 matrix")
    u, s, vt = np.linalg.svd(M)
    d = float(np.linalg.det(u @ vt))
    if d < 0.0 and s[1] - s[2] <= ROTATION_TOL:
        raise IllConditioned(
            "sign correction is ambiguous: two smallest singular values "
            f"coincide ({s[1]:.3e}, {s[2]:.3e})"
        )
    return u @ np.diag([1.0, 1.0, np.sign(d) if d != 0.0 else 1.0]) @ vt


def closest_point_to_lines(lines: Sequence[Line3]) -> np.ndarray:
    """Point minimizing the sum of squared distances to three lines.

    Closed-form solution of the 3x3 normal equations
    sum_i (I - d_i d_i^T) p = sum_i (I - d_i d_i^T) p_i.

    Raises:
        Degenerate: normal-equation matrix singular (e.g. parallel lines).
    """
    if len(lines) != 3:
        raise ValueError(f"expected exactly 3 lines, got {len(lines)}")
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for line in lines:
        P = np.eye(3) - np.outer(line.direction, line.direction)
        A += P
        b += P @ line.point
    if np.linalg.svd(A, compute_uv=False)[-1] < 1e-10:
        raise Degenerate("lines do not determine a unique closest point")
    return np.linalg.solve(A, b)


@dataclass(frozen=True)
class ObliqueBasis:
    """Three (possibly non-orthogonal) unit axes expressed in the Cartesian
    operator frame, with the pairwise plane normals precomputed.

    A point's measure number along one axis is found by projecting the
    point onto that axis parallel to the plane of the other two axes.
    """

    ax: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    nyz: np.ndarray = field(repr=False)
    nxz: np.ndarray = field(repr=False)
    nxy: np.ndarray = field(repr=False)

    @classmethod
    def from_axes(cls, ax, ay, az, min_det: float = MIN_BASIS_DET) -> "ObliqueBasis":
        ax, ay, az = normalize(ax), normalize(ay), normalize(az)
        det = float(np.linalg.det(np.column_stack([ax, ay, az])))
        if abs(det) <= min_det:
            raise Degenerate(f"axes are near-coplanar (|det| = {abs(det):.4f})")
        return cls(
            ax=ax, ay=ay, az=az,
            nyz=np.cross(ay, az), nxz=np.cross(ax, az), nxy=np.cross(ax, ay),
        )

    @classmethod
    def identity(cls) -> "ObliqueBasis":
        return cls.from_axes([1, 0, 0], [0, 1, 0], [0, 0, 1])

    @property
    def matrix(self) -> np.ndarray:
        """Axes as columns; maps measure numbers to Cartesian coordinates."""
        return np.column_stack([self.ax, self.ay, self.az])

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def oblique_measures(p, basis: ObliqueBasis) -> np.ndarray:
    """Measure numbers (m_x, m_y, m_z) of point p in an oblique basis.

    Each measure projects p onto one axis parallel to the plane spanned by
    the other two: m_x = <p, n_yz> / <a_x, n_yz> and cyclic analogues. The
    reconstruction m_x a_x + m_y a_y + m_z a_z = p holds.

    Raises:
        Degenerate: an axis lies (numerically) in the other axes' plane.
    """
    p = as_vec3(p)
    measures = np.empty(3)
    for k, (axis, normal) in enumerate(
        [(basis.ax, basis.nyz), (basis.ay, basis.nxz), (basis.az, basis.nxy)]
    ):
        denom = float(np.dot(axis, normal))
        if abs(denom) < 1e-10:
            raise Degenerate("oblique axis is parallel to the opposing plane")
        measures[k] = float(np.dot(p, normal)) / denom
    return measures
