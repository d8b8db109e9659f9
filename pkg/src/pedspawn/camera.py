"""Pinhole camera model, stereo depth, and back-projection.

Conventions used across the package:

- Camera frame: X right, Y down, Z forward along the optical axis (meters).
- World frame: X right, Y up, Z forward; the ground plane is Y = 0 and the
  camera optical center sits at (0, cam_height, 0).  Ground-plane positions
  are therefore (Xw, Zw) pairs and "world height" means Yw.
- Image frame: u right, v down (pixels); a pixel samples at its integer
  coordinate.
- Invalid entries of disparity and depth arrays are NaN.

Extrinsic rotation is applied as yaw (about world Y, positive turns the view
toward +X), then pitch (about world X, positive tilts the view down), then
roll (about the forward axis).  With all angles zero the camera looks along
+Zw and world height of a camera point is cam_height - Y_cam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_RANGE = 200.0


@dataclass(frozen=True)
class CameraCalibration:
    """Intrinsics, stereo baseline and extrinsic pose of the frame camera."""

    fx: float
    fy: float
    cx: float
    cy: float
    baseline: float
    cam_height: float
    image_w: int
    image_h: int
    pitch: float = 0.0
    roll: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not self.baseline > 0:
            raise ValueError(f"baseline must be positive, got {self.baseline}")
        if not (self.image_w > 0 and self.image_h > 0):
            raise ValueError(f"image size must be positive, got {self.image_w}x{self.image_h}")
        if not (0 <= self.cx < self.image_w and 0 <= self.cy < self.image_h):
            raise ValueError(f"principal point ({self.cx}, {self.cy}) outside image")
        for name in ("pitch", "roll", "yaw", "cam_height"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class PointCloud:
    """3D points plus the pixel each one came from.

    ``points`` is (N, 3) float64; ``pixels`` is (N, 2) int holding (u, v).
    The frame of ``points`` is whatever produced the cloud (camera frame from
    :func:`backproject`, world frame after :func:`cloud_to_world`).
    """

    points: np.ndarray
    pixels: np.ndarray

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {self.points.shape}")
        if self.pixels.shape != (self.points.shape[0], 2):
            raise ValueError("pixels must be (N, 2) matching points")

    def __len__(self):
        return self.points.shape[0]


def disparity_to_depth(disparity: np.ndarray, cal: CameraCalibration,
                       max_range: float = DEFAULT_MAX_RANGE) -> np.ndarray:
    """Convert a disparity map (pixels) to metric depth Z = fx * baseline / d.

    NaN disparities stay NaN.  Non-positive disparities and depths beyond
    ``max_range`` meters are marked NaN as well; distant low-disparity pixels
    give unusably noisy depth.
    """
    disparity = np.asarray(disparity, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        depth = (cal.fx * cal.baseline) / disparity
    depth[~(disparity > 0)] = np.nan
    depth[depth > max_range] = np.nan
    return depth


def backproject(depth: np.ndarray, cal: CameraCalibration) -> PointCloud:
    """Lift every valid depth pixel to a camera-frame 3D point.

    X = (u - cx) * Z / fx, Y = (v - cy) * Z / fy.  Points are emitted in
    row-major pixel order; the count equals the number of valid pixels.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != (cal.image_h, cal.image_w):
        raise ValueError(
            f"depth shape {depth.shape} does not match calibration "
            f"({cal.image_h}, {cal.image_w})")
    v, u = np.nonzero(np.isfinite(depth))
    z = depth[v, u]
    x = (u - cal.cx) * z / cal.fx
    y = (v - cal.cy) * z / cal.fy
    points = np.column_stack([x, y, z])
    pixels = np.column_stack([u, v]).astype(np.int64)
    return PointCloud(points=points, pixels=pixels)


def project(point, cal: CameraCalibration):
    """Project a camera-frame point to (u, v, depth); None if behind camera."""
    x, y, z = float(point[0]), float(point[1]), float(point[2])
    if z <= 0:
        return None
    return (cal.fx * x / z + cal.cx, cal.fy * y / z + cal.cy, z)


def project_points(points: np.ndarray, cal: CameraCalibration):
    """Vectorized projection of (N, 3) camera-frame points.

    Returns (uv, depth) where rows with depth <= 0 hold NaN coordinates.
    """
    points = np.asarray(points, dtype=np.float64)
    z = points[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cal.fx * points[:, 0] / z + cal.cx
        v = cal.fy * points[:, 1] / z + cal.cy
    behind = z <= 0
    uv = np.column_stack([u, v])
    uv[behind] = np.nan
    return uv, np.where(behind, np.nan, z)


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# Camera axes expressed in world axes for the level pose: X right stays X,
# Y down maps to -Y up, Z forward stays Z.
_AXIS_FLIP = np.diag([1.0, -1.0, 1.0])


def camera_to_world_matrix(cal: CameraCalibration) -> np.ndarray:
    """Orthogonal matrix mapping camera-frame vectors to world-frame vectors."""
    return _rot_y(cal.yaw) @ _rot_x(cal.pitch) @ _rot_z(cal.roll) @ _AXIS_FLIP


def camera_to_world(point, cal: CameraCalibration) -> np.ndarray:
    """Rigid transform of one camera-frame point into the world frame."""
    r = camera_to_world_matrix(cal)
    p = r @ np.asarray(point, dtype=np.float64)
    p[1] += cal.cam_height
    return p


def world_to_camera(point, cal: CameraCalibration) -> np.ndarray:
    """Inverse of :func:`camera_to_world`."""
    r = camera_to_world_matrix(cal)
    p = np.asarray(point, dtype=np.float64).copy()
    p[1] -= cal.cam_height
    return r.T @ p


def transform_points_camera_to_world(points: np.ndarray, cal: CameraCalibration) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    out = points @ camera_to_world_matrix(cal).T
    out[:, 1] += cal.cam_height
    return out


def transform_points_world_to_camera(points: np.ndarray, cal: CameraCalibration) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64).copy()
    points[:, 1] -= cal.cam_height
    return points @ camera_to_world_matrix(cal)


def cloud_to_world(cloud: PointCloud, cal: CameraCalibration) -> PointCloud:
    """Transform a camera-frame cloud into the world frame, keeping pixels."""
    return PointCloud(points=transform_points_camera_to_world(cloud.points, cal),
                      pixels=cloud.pixels)
