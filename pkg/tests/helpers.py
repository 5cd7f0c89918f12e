"""Shared test oracles and synthetic-data builders.

Oracles here are deliberately independent of the implementation paths
they check: eigendecomposition for line fits, dense grid search for the
closest point, random-sampling maximality for the rotation projection,
and scipy for reference rotations.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from handteleop.calibration import calibrate
from handteleop.synthetic import make_sweep


def principal_axis_oracle(points):
    """Line-fit oracle: eigendecomposition of the 3x3 scatter matrix.

    Returns (centroid, direction, residual_ss) where residual_ss is the
    minimal sum of squared point-to-line distances (second + third
    eigenvalues of the scatter).
    """
    pts = np.asarray(points, dtype=float)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    scatter = centered.T @ centered
    eigvals, eigvecs = np.linalg.eigh(scatter)
    return centroid, eigvecs[:, -1], float(eigvals[0] + eigvals[1])


def grid_search_closest_point(lines, span=2.0, cells=21, refinements=10):
    """Closest-point oracle: dense grid search refined to ~1e-6.

    Minimizes the summed squared point-to-line distance over a shrinking
    cube; independent of the closed-form normal-equation solve.
    """
    center = np.mean([line.point for line in lines], axis=0)
    half = span / 2
    for _ in range(refinements):
        axes = [np.linspace(c - half, c + half, cells) for c in center]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
        cost = np.zeros(len(pts))
        for line in lines:
            cost += line.distances(pts) ** 2
        center = pts[int(np.argmin(cost))]
        half = half * 2.5 / cells  # keep a few cells of slack around the min
    return center


def summed_sq_distance(lines, p):
    return float(sum(line.distances(p)[0] ** 2 for line in lines))


def random_rotations(n, seed):
    """Reference random rotations (scipy, independent of our code)."""
    return Rotation.random(n, random_state=np.random.default_rng(seed)).as_matrix()


def canonical_hand_3d(curl_toward_camera: float = 0.0, seed: int = 0):
    """A quasi-planar 3D hand for the weak-perspective oracle: 21 points in
    meters with a small zero-mean depth spread. `curl_toward_camera` pulls
    the finger landmarks toward the camera (negative z), breaking the
    single-depth assumption the way a pinch does."""
    from handteleop.synthetic import hand_keypoints

    rng = np.random.default_rng(seed)
    shape2d = (hand_keypoints(center=(0.0, 0.0)) - hand_keypoints(center=(0.0, 0.0)).mean(axis=0)) * 0.0015
    z = rng.normal(0.0, 0.004, 21)
    z -= z.mean()
    if curl_toward_camera != 0.0:
        weights = np.zeros(21)
        weights[1:] = 1.0  # everything but the wrist folds forward
        weights /= weights.mean()
        z = z - curl_toward_camera * weights
    return np.column_stack([shape2d, z])


def render_hand_pixels(points_3d, depth, intr):
    """True perspective projection of the hand placed at `depth`."""
    z = depth + points_3d[:, 2]
    u = intr.fx * points_3d[:, 0] / z + intr.cx
    v = intr.fy * points_3d[:, 1] / z + intr.cy
    return np.column_stack([u, v])


def fit_weak_perspective_scale(pixels, canonical_2d):
    """Least-squares isotropic scale between centered pixel observations and
    the centered canonical hand shape (what a scale regressor estimates)."""
    dp = pixels - pixels.mean(axis=0)
    ds = canonical_2d - canonical_2d.mean(axis=0)
    return float(np.sum(dp * ds) / np.sum(ds * ds))


def skew_directions(skew_deg: float):
    """Camera-frame sweep directions with the y sweep tilted toward x."""
    rad = np.radians(skew_deg)
    return (
        np.array([1.0, 0.0, 0.0]),
        np.array([np.sin(rad), np.cos(rad), 0.0]),
        np.array([0.0, 0.0, 1.0]),
    )


def skewed_calibration(skew_deg: float, origin=(0.0, 0.0, 0.5), seed=0):
    """Noiseless synthetic calibration with a known y-axis skew; returns
    (operator_frames, directions)."""
    dx, dy, dz = skew_directions(skew_deg)
    sweeps = [
        make_sweep("x", dx, origin=origin),
        make_sweep("y", dy, origin=origin),
        make_sweep("z", dz, origin=origin),
    ]
    return calibrate(sweeps), (dx, dy, dz)
