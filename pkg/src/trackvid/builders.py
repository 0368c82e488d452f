"""Builders that turn user intent (camera moves, object edits, animated meshes)
into colorized track sets ready for rendering.

All three builders share the same recipe: pick 3D points, colorize them from
their first-frame camera coordinates, then move either the camera or the
points. Colors never change after frame 0; that constancy is the signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    BadKeyframes,
    EmptyMesh,
    MissingSourcePixels,
    NoForegroundPoints,
    ZeroFrames,
)
from .geometry import (
    CameraPath,
    ColorMap,
    Intrinsics,
    PointCloud,
    Pose,
    _as_readonly,
    colorize,
    colorize_positions,
    quat_to_matrix,
    slerp,
)
from .render import TrackSet

PRESET_KINDS = ("left", "right", "up", "down", "spiral")
_IDENTITY_Q = np.array([1.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class TrajectorySpec:
    """Declarative camera move: a named preset or explicit pose keyframes.

    Presets translate the camera center linearly over the clip: left/right
    along -x/+x, up/down along -y/+y, by `magnitude` world units total.
    `spiral` sweeps the center around a circle of `radius` in the xy plane
    (`turns` full revolutions). `keyframed` interpolates the given poses with
    slerp on rotation and lerp on translation.
    """

    kind: str
    frames: int
    magnitude: float = 0.5
    radius: float = 0.5
    turns: float = 1.0
    keyframes: tuple = ()
    look_at: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in PRESET_KINDS + ("keyframed",):
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        if self.frames < 2:
            raise ZeroFrames(f"trajectory needs >= 2 frames, got {self.frames}")
        if self.kind == "keyframed":
            kfs = tuple((int(f), p) for f, p in self.keyframes)
            if len(kfs) < 2:
                raise BadKeyframes("keyframed trajectory needs >= 2 keyframes")
            frames = [f for f, _ in kfs]
            if frames != sorted(set(frames)):
                raise BadKeyframes(f"keyframe frames must be strictly increasing, got {frames}")
            if frames[0] != 0 or frames[-1] != self.frames - 1:
                raise BadKeyframes(
                    f"keyframes must span frame 0 to {self.frames - 1}, got {frames}"
                )
            if not all(isinstance(p, Pose) for _, p in kfs):
                raise BadKeyframes("keyframe values must be Pose")
            object.__setattr__(self, "keyframes", kfs)
        elif self.keyframes:
            raise BadKeyframes(f"preset {self.kind!r} does not take keyframes")
        if self.look_at is not None:
            la = np.asarray(self.look_at, dtype=np.float64).reshape(3)
            object.__setattr__(self, "look_at", _as_readonly(la))


def _look_at_rotation(center: np.ndarray, target: np.ndarray) -> np.ndarray:
    """World-to-camera rotation pointing camera z at target (y-down frame)."""
    fwd = target - center
    n = np.linalg.norm(fwd)
    if n < 1e-12:
        return np.eye(3)
    fwd = fwd / n
    up = np.array([0.0, 1.0, 0.0])
    right = np.cross(up, fwd)
    rn = np.linalg.norm(right)
    if rn < 1e-12:  # looking straight along y: keep x as right
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / rn
    down = np.cross(fwd, right)
    return np.stack([right, down, fwd], axis=0)


def _preset_centers(spec: TrajectorySpec) -> np.ndarray:
    s = np.linspace(0.0, 1.0, spec.frames)
    c = np.zeros((spec.frames, 3))
    if spec.kind == "left":
        c[:, 0] = -spec.magnitude * s
    elif spec.kind == "right":
        c[:, 0] = spec.magnitude * s
    elif spec.kind == "up":
        c[:, 1] = -spec.magnitude * s
    elif spec.kind == "down":
        c[:, 1] = spec.magnitude * s
    elif spec.kind == "spiral":
        phi = 2.0 * np.pi * spec.turns * s
        c[:, 0] = spec.radius * np.sin(phi)
        c[:, 1] = spec.radius * (1.0 - np.cos(phi))
    return c


def make_camera_path(spec: TrajectorySpec, intrinsics: Intrinsics) -> CameraPath:
    """Expand a TrajectorySpec into per-frame world-to-camera poses.

    Frame 0 is always the identity pose: the world frame is the first camera.
    """
    if spec.kind == "keyframed":
        poses = []
        kfs = spec.keyframes
        seg = 0
        for f in range(spec.frames):
            while seg + 1 < len(kfs) - 1 and f >= kfs[seg + 1][0]:
                seg += 1
            (fa, pa), (fb, pb) = kfs[seg], kfs[seg + 1]
            s = 0.0 if fb == fa else (f - fa) / (fb - fa)
            q = slerp(pa.q, pb.q, float(np.clip(s, 0.0, 1.0)))
            t = (1.0 - s) * pa.t + s * pb.t
            poses.append(Pose(q=q, t=t))
    else:
        centers = _preset_centers(spec)
        poses = []
        for c in centers:
            R = _look_at_rotation(c, spec.look_at) if spec.look_at is not None else np.eye(3)
            poses.append(Pose.from_matrix(R, -R @ c))
    poses[0] = Pose.identity()
    return CameraPath(intrinsics=intrinsics, poses=tuple(poses))


def build_camera_control(points: PointCloud, path: CameraPath) -> tuple:
    """Static scene, moving camera: tracks are the cloud repeated T times.

    Returns (TrackSet, ColorMap); colors come from the frame-0 positions,
    which are already in the first camera's frame.
    """
    t = len(path)
    pos = points.positions.astype(np.float32)
    tracks = TrackSet(positions=np.broadcast_to(pos, (t,) + pos.shape).copy())
    colors = colorize_positions(tracks.positions[0].astype(np.float64))
    return tracks, colors


@dataclass(frozen=True)
class TransformTimeline:
    """Rigid-transform keyframes applied to the foreground of a scene.

    keyframes is a tuple of (frame, q, t); rotation acts about `pivot`
    ("centroid" of the foreground points, or an explicit 3-vector). Frame 0
    must be the identity so the first frame matches the source image; an
    implicit identity keyframe is inserted when frame 0 is absent. The last
    keyframe holds to the end of the clip.
    """

    keyframes: tuple
    pivot: Union[str, np.ndarray] = "centroid"

    def __post_init__(self):
        kfs = []
        for frame, q, t in self.keyframes:
            frame = int(frame)
            q = np.asarray(q, dtype=np.float64).reshape(4)
            t = np.asarray(t, dtype=np.float64).reshape(3)
            if frame < 0:
                raise BadKeyframes(f"keyframe frame {frame} negative")
            kfs.append((frame, _as_readonly(q), _as_readonly(t)))
        if not kfs:
            raise BadKeyframes("timeline needs at least one keyframe")
        frames = [f for f, _, _ in kfs]
        if frames != sorted(set(frames)):
            raise BadKeyframes(f"keyframe frames must be strictly increasing, got {frames}")
        if frames[0] == 0:
            _, q0, t0 = kfs[0]
            if np.linalg.norm(q0 - _IDENTITY_Q) > 1e-9 or np.linalg.norm(t0) > 1e-9:
                raise BadKeyframes("frame-0 keyframe must be the identity transform")
        else:
            kfs.insert(0, (0, _as_readonly(_IDENTITY_Q.copy()), _as_readonly(np.zeros(3))))
        object.__setattr__(self, "keyframes", tuple(kfs))
        if not isinstance(self.pivot, str):
            pv = np.asarray(self.pivot, dtype=np.float64).reshape(3)
            object.__setattr__(self, "pivot", _as_readonly(pv))
        elif self.pivot != "centroid":
            raise ValueError(f"pivot must be 'centroid' or a 3-vector, got {self.pivot!r}")

    @property
    def last_frame(self) -> int:
        return self.keyframes[-1][0]

    def interpolate(self, frame: int) -> tuple:
        """(q, t) at an integer frame: slerp/lerp between keyframes, held
        constant after the last one."""
        kfs = self.keyframes
        if frame >= kfs[-1][0]:
            return kfs[-1][1], kfs[-1][2]
        seg = 0
        while kfs[seg + 1][0] <= frame:
            seg += 1
        fa, qa, ta = kfs[seg]
        fb, qb, tb = kfs[seg + 1]
        s = (frame - fa) / (fb - fa)
        return slerp(qa, qb, s), (1.0 - s) * ta + s * tb


def build_object_manipulation(
    points: PointCloud,
    mask: np.ndarray,
    timeline: TransformTimeline,
    frames: int,
) -> tuple:
    """Static camera, moving foreground: mask selects which points follow the
    timeline transform (about its pivot); the rest stay put.

    Returns (TrackSet, ColorMap) for rendering under an identity camera path.
    """
    if frames < 2:
        raise ZeroFrames(f"need >= 2 frames, got {frames}")
    if timeline.last_frame > frames - 1:
        raise BadKeyframes(
            f"last keyframe {timeline.last_frame} beyond final frame {frames - 1}"
        )
    if points.source_pixel is None:
        raise MissingSourcePixels("object manipulation needs pixel provenance on the cloud")
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {m.shape}")
    u = np.rint(points.source_pixel[:, 0]).astype(np.int64)
    v = np.rint(points.source_pixel[:, 1]).astype(np.int64)
    if np.any(u < 0) or np.any(u >= m.shape[1]) or np.any(v < 0) or np.any(v >= m.shape[0]):
        raise ValueError("source pixels fall outside the mask image")
    fg = m[v, u]
    if not fg.any():
        raise NoForegroundPoints("mask selects no points")

    base = points.positions
    if isinstance(timeline.pivot, str):
        pivot = base[fg].mean(axis=0)
    else:
        pivot = timeline.pivot

    positions = np.empty((frames,) + base.shape, dtype=np.float32)
    for f in range(frames):
        q, t = timeline.interpolate(f)
        moved = base.copy()
        moved[fg] = (base[fg] - pivot) @ quat_to_matrix(q).T + pivot + t
        positions[f] = moved.astype(np.float32)
    tracks = TrackSet(positions=positions)
    colors = colorize_positions(tracks.positions[0].astype(np.float64))
    return tracks, colors


@dataclass(frozen=True)
class MeshSequence:
    """Animated triangle mesh with constant topology: vertices (F, V, 3),
    faces (M, 3) int indices shared by every frame."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        f = np.asarray(self.faces, dtype=np.int64)
        if v.ndim != 3 or v.shape[2] != 3 or v.shape[0] < 1:
            raise ValueError(f"vertices must be (F>=1, V, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (M, 3), got {f.shape}")
        if v.shape[1] == 0 or f.shape[0] == 0:
            raise EmptyMesh("mesh has no vertices or no faces")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        if np.any(f < 0) or np.any(f >= v.shape[1]):
            raise ValueError("face indices out of range")
        object.__setattr__(self, "vertices", _as_readonly(v))
        object.__setattr__(self, "faces", _as_readonly(f))

    @property
    def n_frames(self) -> int:
        return self.vertices.shape[0]


def sample_mesh_surface(mesh: MeshSequence, n_samples: int, seed: int) -> tuple:
    """Area-weighted barycentric samples on the frame-0 surface.

    Returns (face_index (n,), bary (n, 3)). Seeded PCG64 makes the draw
    reproducible; areas come from frame 0 only so samples track coherently.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    v0 = mesh.vertices[0]
    tri = v0[mesh.faces]  # (M, 3, 3)
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    total = areas.sum()
    if total <= 0:
        raise EmptyMesh("frame-0 surface area is zero")
    rng = np.random.default_rng(seed)
    face_index = rng.choice(mesh.faces.shape[0], size=n_samples, p=areas / total)
    uv = rng.random((n_samples, 2))
    flip = uv.sum(axis=1) > 1.0
    uv[flip] = 1.0 - uv[flip]
    bary = np.stack([1.0 - uv[:, 0] - uv[:, 1], uv[:, 0], uv[:, 1]], axis=1)
    return face_index, bary


def mesh_track_positions(mesh: MeshSequence, face_index: np.ndarray, bary: np.ndarray) -> np.ndarray:
    """Carry barycentric surface samples through every frame: (F, n, 3)."""
    corners = mesh.vertices[:, mesh.faces[face_index]]  # (F, n, 3, 3)
    return np.einsum("fnkd,nk->fnd", corners, bary)


def build_mesh_tracks(mesh: MeshSequence, n_samples: int, seed: int = 0) -> tuple:
    """Sample the animated surface and colorize from frame-0 positions.

    The mesh must already live in the first camera's frame with z > 0.
    Returns (TrackSet, ColorMap).
    """
    face_index, bary = sample_mesh_surface(mesh, n_samples, seed)
    pos = mesh_track_positions(mesh, face_index, bary)
    tracks = TrackSet(positions=pos.astype(np.float32))
    colors = colorize_positions(tracks.positions[0].astype(np.float64))
    return tracks, colors


def import_tracks(path) -> tuple:
    """Load an externally produced track file and colorize it from frame 0.

    Accepts whatever read_trackset accepts. Returns (TrackSet, ColorMap).
    """
    from .formats import read_trackset

    tracks = read_trackset(path)
    colors = colorize_positions(tracks.positions[0].astype(np.float64))
    return tracks, colors
