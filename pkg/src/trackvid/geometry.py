"""Pinhole camera model, pose algebra, depth unprojection, and point colorization.

Conventions used everywhere in this package: camera x right, y down, z forward;
the world frame is the first camera frame; a Pose maps world to camera via
x_cam = R(q) @ x_world + t; quaternions are (qw, qx, qy, qz), unit, qw >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    GridTooLarge,
    NonPositiveDepth,
    NonPositiveZ,
    NonUnitQuaternion,
    SizeMismatch,
)

Z_NEAR = 1e-4

# spans narrower than this normalize to the midpoint 0.5 instead of blowing up
_DEGENERATE_SPAN = 1e-12

_UNIT_QUAT_TOL = 1e-6


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


# --- quaternion helpers -------------------------------------------------------


def _check_unit(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64).reshape(4)
    n = float(np.linalg.norm(q))
    if not np.isfinite(n) or abs(n - 1.0) > _UNIT_QUAT_TOL:
        raise NonUnitQuaternion(f"quaternion norm {n!r} not within {_UNIT_QUAT_TOL} of 1")
    return q / n


def canonical_quat(q: np.ndarray) -> np.ndarray:
    """Flip sign so qw >= 0 (ties broken on the first nonzero component)."""
    q = np.asarray(q, dtype=np.float64).reshape(4)
    for v in q:
        if v > 0.0:
            return q.copy()
        if v < 0.0:
            return -q
    return q.copy()


def quat_to_matrix(q: Sequence[float]) -> np.ndarray:
    """Rotation matrix of a unit quaternion (qw, qx, qy, qz)."""
    w, x, y, z = np.asarray(q, dtype=np.float64).reshape(4)
    return np.array(
        [
            [1 - 2 * y * y - 2 * z * z, 2 * x * y - 2 * w * z, 2 * x * z + 2 * w * y],
            [2 * x * y + 2 * w * z, 1 - 2 * x * x - 2 * z * z, 2 * y * z - 2 * w * x],
            [2 * x * z - 2 * w * y, 2 * y * z + 2 * w * x, 1 - 2 * x * x - 2 * y * y],
        ]
    )


def quat_from_matrix(R: np.ndarray) -> np.ndarray:
    """Unit quaternion (qw >= 0) of a rotation matrix.

    Largest-eigenvector method: numerically stable for all rotation angles,
    unlike the trace-based branch formulas near 180 degrees.
    """
    R = np.asarray(R, dtype=np.float64).reshape(3, 3)
    Rxx, Ryx, Rzx, Rxy, Ryy, Rzy, Rxz, Ryz, Rzz = R.flat
    K = (
        np.array(
            [
                [Rxx - Ryy - Rzz, 0, 0, 0],
                [Ryx + Rxy, Ryy - Rxx - Rzz, 0, 0],
                [Rzx + Rxz, Rzy + Ryz, Rzz - Rxx - Ryy, 0],
                [Ryz - Rzy, Rzx - Rxz, Rxy - Ryx, Rxx + Ryy + Rzz],
            ]
        )
        / 3.0
    )
    vals, vecs = np.linalg.eigh(K)
    q = vecs[[3, 0, 1, 2], np.argmax(vals)]
    return canonical_quat(q / np.linalg.norm(q))


def slerp(q0: Sequence[float], q1: Sequence[float], s: float) -> np.ndarray:
    """Spherical interpolation along the shorter arc, exact at the endpoints.

    Falls back to normalized lerp when the arc is tiny (dot > 0.9995), where
    sin-ratio weights lose precision.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"interpolation parameter {s} outside [0, 1]")
    a = _check_unit(q0)
    b = _check_unit(q1)
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    if s == 0.0:
        return a
    if s == 1.0:
        return b
    if dot > 0.9995:
        out = (1.0 - s) * a + s * b
        return out / np.linalg.norm(out)
    theta = np.arccos(min(dot, 1.0))
    return (np.sin((1.0 - s) * theta) * a + np.sin(s * theta) * b) / np.sin(theta)


# --- core types ---------------------------------------------------------------


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels; no skew, no distortion."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got {self.fx}, {self.fy}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image size {self.width}x{self.height} invalid")


@dataclass(frozen=True)
class Pose:
    """World-to-camera rigid transform: x_cam = R(q) @ x_world + t."""

    q: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        q = canonical_quat(_check_unit(self.q))
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(t)):
            raise ValueError("pose translation must be finite")
        object.__setattr__(self, "q", _as_readonly(q))
        object.__setattr__(self, "t", _as_readonly(t))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(q=np.array([1.0, 0.0, 0.0, 0.0]), t=np.zeros(3))

    @classmethod
    def from_matrix(cls, R: np.ndarray, t: Sequence[float]) -> "Pose":
        return cls(q=quat_from_matrix(R), t=np.asarray(t, dtype=np.float64))

    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.q)


@dataclass(frozen=True)
class CameraPath:
    """Per-frame world-to-camera poses sharing one set of intrinsics."""

    intrinsics: Intrinsics
    poses: tuple

    def __post_init__(self):
        poses = tuple(self.poses)
        if len(poses) < 1:
            raise ValueError("camera path needs at least one pose")
        if not all(isinstance(p, Pose) for p in poses):
            raise TypeError("camera path entries must be Pose")
        object.__setattr__(self, "poses", poses)

    def __len__(self) -> int:
        return len(self.poses)


@dataclass(frozen=True)
class PointCloud:
    """Static 3D points in the world frame, optionally tagged with the
    pixel (u, v) each one was unprojected from."""

    positions: np.ndarray
    source_pixel: Optional[np.ndarray] = None

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
            raise ValueError(f"positions must be (N>=1, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", _as_readonly(p))
        if self.source_pixel is not None:
            sp = np.asarray(self.source_pixel, dtype=np.float64)
            if sp.shape != (p.shape[0], 2):
                raise SizeMismatch(
                    f"source_pixel shape {sp.shape} does not match {p.shape[0]} points"
                )
            object.__setattr__(self, "source_pixel", _as_readonly(sp))

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class ColorMap:
    """Per-point RGB assigned from first-frame camera-space coordinates.

    colors are float in [0,1]^3; quantized is rint(255 * colors) as uint8.
    bbox records the normalization ranges (x, y, 1/z) actually used.
    """

    colors: np.ndarray
    quantized: np.ndarray
    bbox: tuple

    def __post_init__(self):
        c = np.asarray(self.colors, dtype=np.float64)
        qz = np.asarray(self.quantized, dtype=np.uint8)
        if c.ndim != 2 or c.shape[1] != 3:
            raise ValueError(f"colors must be (N, 3), got {c.shape}")
        if qz.shape != c.shape:
            raise SizeMismatch("quantized shape does not match colors")
        object.__setattr__(self, "colors", _as_readonly(c))
        object.__setattr__(self, "quantized", _as_readonly(qz))
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))

    def __len__(self) -> int:
        return self.colors.shape[0]


@dataclass(frozen=True)
class RelPose:
    """Relative rotation plus unit translation direction; t_dir is None when
    the baseline is (numerically) zero, i.e. a pure rotation."""

    q: np.ndarray
    t_dir: Optional[np.ndarray] = None

    def __post_init__(self):
        q = canonical_quat(_check_unit(self.q))
        object.__setattr__(self, "q", _as_readonly(q))
        if self.t_dir is not None:
            d = np.asarray(self.t_dir, dtype=np.float64).reshape(3)
            n = float(np.linalg.norm(d))
            if n == 0.0 or not np.isfinite(n):
                raise ValueError("t_dir must be a nonzero finite vector")
            object.__setattr__(self, "t_dir", _as_readonly(d / n))

    @property
    def pure_rotation(self) -> bool:
        return self.t_dir is None


# --- operations ---------------------------------------------------------------


def unproject_depth(depth: np.ndarray, intrinsics: Intrinsics, grid: int) -> PointCloud:
    """Lift a grid x grid lattice of depth samples to 3D camera-frame points.

    Samples pixel (u_j, v_i) with u_j = floor((j + 0.5) * W / grid), likewise
    for rows; points come back row-major, tagged with their source pixel.
    """
    d = np.asarray(depth, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError(f"depth must be 2-D, got shape {d.shape}")
    h, w = d.shape
    if (h, w) != (intrinsics.height, intrinsics.width):
        raise SizeMismatch(
            f"depth {w}x{h} does not match intrinsics {intrinsics.width}x{intrinsics.height}"
        )
    if grid < 1:
        raise ValueError(f"grid must be >= 1, got {grid}")
    if grid > min(h, w):
        raise GridTooLarge(f"grid {grid} exceeds min image dimension {min(h, w)}")
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise NonPositiveDepth("depth samples must be finite and > 0")

    j = np.arange(grid, dtype=np.float64)
    us = np.floor((j + 0.5) * w / grid).astype(np.int64)
    vs = np.floor((j + 0.5) * h / grid).astype(np.int64)
    uu, vv = np.meshgrid(us, vs)  # row-major: v varies over rows
    u = uu.reshape(-1).astype(np.float64)
    v = vv.reshape(-1).astype(np.float64)
    z = d[vv.reshape(-1), uu.reshape(-1)]
    x = (u - intrinsics.cx) * z / intrinsics.fx
    y = (v - intrinsics.cy) * z / intrinsics.fy
    return PointCloud(
        positions=np.stack([x, y, z], axis=1),
        source_pixel=np.stack([u, v], axis=1),
    )


def _normalize_span(v: np.ndarray) -> tuple:
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < _DEGENERATE_SPAN:
        return np.full(v.shape, 0.5), lo, hi
    return (v - lo) / (hi - lo), lo, hi


def colorize_positions(positions: np.ndarray) -> ColorMap:
    """ColorMap for raw (N, 3) camera-frame positions (z must be > 0)."""
    p = np.asarray(positions, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ValueError(f"positions must be (N, 3), got {p.shape}")
    if np.any(p[:, 2] <= 0):
        raise NonPositiveZ("colorization needs camera z > 0 for every point")
    r, x_lo, x_hi = _normalize_span(p[:, 0])
    g, y_lo, y_hi = _normalize_span(p[:, 1])
    b, iz_lo, iz_hi = _normalize_span(1.0 / p[:, 2])
    colors = np.stack([r, g, b], axis=1)
    quantized = np.rint(255.0 * colors).astype(np.uint8)
    return ColorMap(colors=colors, quantized=quantized, bbox=(x_lo, x_hi, y_lo, y_hi, iz_lo, iz_hi))


def colorize(points: PointCloud) -> ColorMap:
    """Map first-frame camera coordinates to RGB: x -> R, y -> G, 1/z -> B,
    each channel min-max normalized to [0, 1] (degenerate span -> 0.5)."""
    return colorize_positions(points.positions)


def project_points(
    positions: np.ndarray, intrinsics: Intrinsics, pose: Pose
) -> tuple:
    """Project (N, 3) world points; returns (uv (N,2), depth (N,), visible (N,)).

    visible means depth >= Z_NEAR and the rounded splat center floor(u + 0.5)
    lands inside the image. uv/depth are NaN for points behind the camera.
    """
    p = np.asarray(positions, dtype=np.float64)
    cam = p @ pose.rotation().T + pose.t
    z = cam[:, 2]
    safe = z >= Z_NEAR
    uv = np.full((p.shape[0], 2), np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        uv[safe, 0] = intrinsics.fx * cam[safe, 0] / z[safe] + intrinsics.cx
        uv[safe, 1] = intrinsics.fy * cam[safe, 1] / z[safe] + intrinsics.cy
    depth = np.where(safe, z, np.nan)
    px = np.floor(uv[:, 0] + 0.5)
    py = np.floor(uv[:, 1] + 0.5)
    visible = (
        safe
        & (px >= 0)
        & (px < intrinsics.width)
        & (py >= 0)
        & (py < intrinsics.height)
    )
    return uv, depth, visible


def project(point: Sequence[float], intrinsics: Intrinsics, pose: Pose) -> tuple:
    """Project one world point; returns (u, v, depth, visible)."""
    uv, depth, visible = project_points(
        np.asarray(point, dtype=np.float64).reshape(1, 3), intrinsics, pose
    )
    return float(uv[0, 0]), float(uv[0, 1]), float(depth[0]), bool(visible[0])


def relative_pose(a: Pose, b: Pose) -> RelPose:
    """Pose of camera b relative to camera a: x_b = R_rel @ x_a + t_rel.

    The translation is returned as a unit direction (scale is unobservable
    from image correspondences); baselines under 1e-9 become pure rotations.
    """
    Ra, Rb = a.rotation(), b.rotation()
    R_rel = Rb @ Ra.T
    t_rel = b.t - R_rel @ a.t
    q = quat_from_matrix(R_rel)
    if np.linalg.norm(t_rel) < 1e-9:
        return RelPose(q=q, t_dir=None)
    return RelPose(q=q, t_dir=t_rel)
