"""Z-buffered point-splat renderer for colorized track videos.

Each frame is pure function of (tracks, colors, intrinsics, pose), so frames
can be rendered on any number of workers with bit-identical output.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import FrameOutOfRange, LengthMismatch, SizeMismatch
from .geometry import CameraPath, ColorMap, Intrinsics, Pose, _as_readonly, project_points


@dataclass(frozen=True)
class TrackSet:
    """Trajectories of N points over T frames: positions (T, N, 3) float32,
    plus an optional per-frame visibility mask."""

    positions: np.ndarray
    visibility: Optional[np.ndarray] = None

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.float32)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"positions must be (T>=1, N>=1, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("track positions must be finite")
        object.__setattr__(self, "positions", _as_readonly(p))
        if self.visibility is not None:
            v = np.asarray(self.visibility, dtype=bool)
            if v.shape != p.shape[:2]:
                raise SizeMismatch(
                    f"visibility shape {v.shape} does not match tracks {p.shape[:2]}"
                )
            object.__setattr__(self, "visibility", _as_readonly(v))

    @property
    def n_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def n_points(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class RenderOptions:
    """splat_radius r paints a (2r+1)^2 square per point; background is the
    RGB fill for uncovered pixels."""

    splat_radius: int = 1
    background: tuple = (0, 0, 0)

    def __post_init__(self):
        if self.splat_radius < 0:
            raise ValueError(f"splat_radius must be >= 0, got {self.splat_radius}")
        bg = tuple(int(c) for c in self.background)
        if len(bg) != 3 or any(c < 0 or c > 255 for c in bg):
            raise ValueError(f"background must be 3 ints in [0, 255], got {self.background}")
        object.__setattr__(self, "background", bg)


@dataclass(frozen=True)
class FrameSequence:
    """Rendered video: frames (T, H, W, 3) uint8."""

    frames: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.uint8)
        if f.ndim != 4 or f.shape[3] != 3:
            raise ValueError(f"frames must be (T, H, W, 3), got {f.shape}")
        object.__setattr__(self, "frames", _as_readonly(f))

    def __len__(self) -> int:
        return self.frames.shape[0]


def render_frame(
    tracks: TrackSet,
    colors: ColorMap,
    intrinsics: Intrinsics,
    pose: Pose,
    frame_index: int,
    options: RenderOptions = RenderOptions(),
) -> np.ndarray:
    """Rasterize one frame of a track set into an (H, W, 3) uint8 image.

    Points project to pixel centers floor(u + 0.5); each paints a square of
    side 2r+1 clipped to the image; per pixel the smallest camera depth wins,
    ties broken by the lower point index.
    """
    if len(colors) != tracks.n_points:
        raise SizeMismatch(
            f"{len(colors)} colors for {tracks.n_points} tracked points"
        )
    if not 0 <= frame_index < tracks.n_frames:
        raise FrameOutOfRange(f"frame {frame_index} outside [0, {tracks.n_frames})")

    h, w = intrinsics.height, intrinsics.width
    image = np.empty((h, w, 3), dtype=np.uint8)
    image[:, :] = options.background

    pos = tracks.positions[frame_index].astype(np.float64)
    uv, depth, visible = project_points(pos, intrinsics, pose)
    if tracks.visibility is not None:
        visible = visible & tracks.visibility[frame_index]
    idx = np.nonzero(visible)[0]
    if idx.size == 0:
        return image

    px = np.floor(uv[idx, 0] + 0.5).astype(np.int64)
    py = np.floor(uv[idx, 1] + 0.5).astype(np.int64)
    z = depth[idx]

    r = options.splat_radius
    span = np.arange(-r, r + 1, dtype=np.int64)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    xs = (px[:, None] + dx.reshape(-1)[None, :]).reshape(-1)
    ys = (py[:, None] + dy.reshape(-1)[None, :]).reshape(-1)
    k = span.size * span.size
    cand_point = np.repeat(idx, k)
    cand_depth = np.repeat(z, k)

    inside = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    xs, ys = xs[inside], ys[inside]
    cand_point = cand_point[inside]
    cand_depth = cand_depth[inside]
    if xs.size == 0:
        return image

    flat = ys * w + xs
    # winner per pixel: nearest depth, then lowest point index
    order = np.lexsort((cand_point, cand_depth, flat))
    flat = flat[order]
    cand_point = cand_point[order]
    first = np.ones(flat.size, dtype=bool)
    first[1:] = flat[1:] != flat[:-1]
    image.reshape(-1, 3)[flat[first]] = colors.quantized[cand_point[first]]
    return image


def render_video(
    tracks: TrackSet,
    colors: ColorMap,
    path: CameraPath,
    options: RenderOptions = RenderOptions(),
    workers: int = 1,
) -> FrameSequence:
    """Render every frame of a track set along a camera path.

    workers > 1 fans frames out to a thread pool; output is bit-identical to
    the single-worker render because frames do not share mutable state.
    """
    if len(path) != tracks.n_frames:
        raise LengthMismatch(
            f"camera path has {len(path)} poses for {tracks.n_frames} frames"
        )
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    def one(i: int) -> np.ndarray:
        return render_frame(tracks, colors, path.intrinsics, path.poses[i], i, options)

    if workers == 1:
        frames = [one(i) for i in range(tracks.n_frames)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(one, range(tracks.n_frames)))
    return FrameSequence(frames=np.stack(frames, axis=0))
