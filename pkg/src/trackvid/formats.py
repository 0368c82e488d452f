"""Readers and writers for every on-disk artifact the tools exchange.

Binary readers validate header-implied lengths against the actual byte count
before allocating anything, so a hostile header cannot trigger a huge
allocation; every malformed input raises a FormatError subclass, never an
unstructured exception.
"""

from __future__ import annotations

import io
import json
import os
import struct
import zipfile
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np
from PIL import Image

from .builders import MeshSequence, TrajectorySpec, TransformTimeline
from .errors import (
    BadMagic,
    DimensionMismatch,
    FormatError,
    NegativeDepth,
    NonFiniteValue,
    NonUnitQuaternion,
    TopologyMismatch,
    TruncatedFile,
    VersionUnsupported,
)
from .geometry import CameraPath, Intrinsics, Pose
from .render import FrameSequence, TrackSet

PathOrFile = Union[str, os.PathLike, IO[bytes]]

TRACK_MAGIC = b"DAS3DTRK"
TRACK_VERSION = 1
_TRACK_FLAG_VISIBILITY = 1


def _read_bytes(src: PathOrFile) -> bytes:
    if hasattr(src, "read"):
        return src.read()
    with open(src, "rb") as fh:
        return fh.read()


def _write_bytes(dst: PathOrFile, payload: bytes) -> None:
    if hasattr(dst, "write"):
        dst.write(payload)
        return
    with open(dst, "wb") as fh:
        fh.write(payload)


# --- track sets (.trk) ---------------------------------------------------------
#
# Layout, all little-endian:
#   8s  magic "DAS3DTRK"
#   u32 version (= 1)
#   u32 T frames
#   u32 N points
#   u32 flags (bit 0: visibility block present)
#   T*N*3 f32 positions, frame-major
#   T*N  u8 visibility (0/1), only when flag bit 0 is set


def write_trackset(tracks: TrackSet, dst: PathOrFile) -> None:
    """Serialize a TrackSet; emits the visibility block iff the set has one."""
    t, n = tracks.n_frames, tracks.n_points
    flags = _TRACK_FLAG_VISIBILITY if tracks.visibility is not None else 0
    out = io.BytesIO()
    out.write(TRACK_MAGIC)
    out.write(struct.pack("<III", TRACK_VERSION, t, n))
    out.write(struct.pack("<I", flags))
    out.write(np.ascontiguousarray(tracks.positions, dtype="<f4").tobytes())
    if tracks.visibility is not None:
        out.write(tracks.visibility.astype(np.uint8).tobytes())
    _write_bytes(dst, out.getvalue())


def read_trackset(src: PathOrFile) -> TrackSet:
    """Parse a .trk file back into a TrackSet."""
    data = _read_bytes(src)
    if len(data) < 24:
        if not data.startswith(TRACK_MAGIC[: len(data)]) and len(data) >= 8:
            raise BadMagic("not a track file")
        raise TruncatedFile(f"header needs 24 bytes, file has {len(data)}")
    if data[:8] != TRACK_MAGIC:
        raise BadMagic(f"expected magic {TRACK_MAGIC!r}")
    version, t, n, flags = struct.unpack("<IIII", data[8:24])
    if version != TRACK_VERSION:
        raise VersionUnsupported(f"version {version} not handled (expected {TRACK_VERSION})")
    if flags & ~_TRACK_FLAG_VISIBILITY:
        raise VersionUnsupported(f"unknown flag bits 0x{flags:x}")
    if t < 1 or n < 1:
        raise FormatError(f"track counts must be positive, got T={t} N={n}")
    pos_bytes = t * n * 3 * 4  # python ints: no overflow on huge headers
    vis_bytes = t * n if flags & _TRACK_FLAG_VISIBILITY else 0
    expected = 24 + pos_bytes + vis_bytes
    if len(data) < expected:
        raise TruncatedFile(f"expected {expected} bytes, file has {len(data)}")
    if len(data) > expected:
        raise FormatError(f"{len(data) - expected} trailing bytes after payload")
    positions = np.frombuffer(data, dtype="<f4", count=t * n * 3, offset=24)
    positions = positions.reshape(t, n, 3).astype(np.float32)
    if not np.all(np.isfinite(positions)):
        raise NonFiniteValue("track positions contain NaN or infinity")
    visibility = None
    if vis_bytes:
        raw = np.frombuffer(data, dtype=np.uint8, count=vis_bytes, offset=24 + pos_bytes)
        if np.any(raw > 1):
            raise FormatError("visibility bytes must be 0 or 1")
        visibility = raw.reshape(t, n).astype(bool)
    return TrackSet(positions=positions, visibility=visibility)


# --- PFM depth maps -------------------------------------------------------------

_WS = b" \t\r\n"


def _pnm_tokens(data: bytes, count: int) -> tuple:
    """First `count` whitespace-separated header tokens ('#' starts a comment);
    returns (tokens, offset of the raster, one byte past the final token)."""
    toks = []
    i = 0
    while len(toks) < count:
        if i >= len(data):
            raise TruncatedFile("header ends before raster data")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c in _WS:
            i += 1
        else:
            j = i
            while j < len(data) and data[j : j + 1] not in _WS + b"#":
                j += 1
            toks.append(data[i:j])
            i = j
    if i >= len(data) or data[i : i + 1] not in _WS:
        raise FormatError("expected single whitespace after header")
    return toks, i + 1


def read_depth_pfm(src: PathOrFile) -> np.ndarray:
    """Read a grayscale PFM depth map to (H, W) float64, top row first.

    PFM stores rows bottom-to-top; a negative scale marks little-endian data.
    Depth must be finite and strictly positive.
    """
    data = _read_bytes(src)
    if data[:2] == b"PF":
        raise VersionUnsupported("color PFM not supported, need grayscale 'Pf'")
    if data[:2] != b"Pf":
        raise BadMagic("not a PFM file")
    toks, offset = _pnm_tokens(data, 4)
    try:
        w, h = int(toks[1]), int(toks[2])
        scale = float(toks[3])
    except ValueError as e:
        raise FormatError(f"bad PFM header token: {e}") from None
    if w < 1 or h < 1:
        raise FormatError(f"bad PFM dimensions {w}x{h}")
    if scale == 0:
        raise FormatError("PFM scale must be nonzero")
    expected = offset + w * h * 4
    if len(data) < expected:
        raise TruncatedFile(f"expected {expected} bytes, file has {len(data)}")
    dtype = "<f4" if scale < 0 else ">f4"
    raster = np.frombuffer(data, dtype=dtype, count=w * h, offset=offset)
    depth = np.flipud(raster.reshape(h, w)).astype(np.float64)
    if not np.all(np.isfinite(depth)):
        raise NonFiniteValue("depth contains NaN or infinity")
    if np.any(depth <= 0):
        raise NegativeDepth("depth values must be > 0")
    return depth


def write_depth_pfm(depth: np.ndarray, dst: PathOrFile) -> None:
    """Write (H, W) depth as little-endian grayscale PFM."""
    d = np.asarray(depth, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError(f"depth must be 2-D, got {d.shape}")
    if not np.all(np.isfinite(d)):
        raise NonFiniteValue("refusing to write non-finite depth")
    if np.any(d <= 0):
        raise NegativeDepth("refusing to write non-positive depth")
    h, w = d.shape
    header = f"Pf\n{w} {h}\n-1.0\n".encode("ascii")
    _write_bytes(dst, header + np.flipud(d).astype("<f4").tobytes())


# --- PGM masks ------------------------------------------------------------------


def read_mask_pgm(src: PathOrFile) -> np.ndarray:
    """Read a binary PGM (P5, maxval 255) as a bool mask: value >= 128 is True."""
    data = _read_bytes(src)
    if data[:2] in (b"P2", b"P4"):
        raise VersionUnsupported("only binary P5 PGM is supported")
    if data[:2] != b"P5":
        raise BadMagic("not a P5 PGM file")
    toks, offset = _pnm_tokens(data, 4)
    try:
        w, h, maxval = int(toks[1]), int(toks[2]), int(toks[3])
    except ValueError as e:
        raise FormatError(f"bad PGM header token: {e}") from None
    if w < 1 or h < 1:
        raise FormatError(f"bad PGM dimensions {w}x{h}")
    if maxval != 255:
        raise VersionUnsupported(f"maxval {maxval} not handled, need 255")
    expected = offset + w * h
    if len(data) < expected:
        raise TruncatedFile(f"expected {expected} bytes, file has {len(data)}")
    raster = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=offset)
    return (raster.reshape(h, w) >= 128).copy()


def write_mask_pgm(mask: np.ndarray, dst: PathOrFile) -> None:
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise ValueError(f"mask must be 2-D, got {m.shape}")
    h, w = m.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    _write_bytes(dst, header + (m.astype(np.uint8) * 255).tobytes())


# --- OBJ mesh sequences ---------------------------------------------------------


def _parse_obj(text: str, name: str) -> tuple:
    verts = []
    faces = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if line.startswith("v "):
            parts = line.split()
            if len(parts) < 4:
                raise FormatError(f"{name}:{ln}: vertex needs 3 coordinates")
            try:
                verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise FormatError(f"{name}:{ln}: bad vertex number") from None
        elif line.startswith("f "):
            refs = line.split()[1:]
            if len(refs) != 3:
                raise TopologyMismatch(f"{name}:{ln}: face has {len(refs)} vertices, need 3")
            idx = []
            for r in refs:
                head = r.split("/")[0]
                try:
                    k = int(head)
                except ValueError:
                    raise FormatError(f"{name}:{ln}: bad face index {r!r}") from None
                if k < 1:
                    raise FormatError(f"{name}:{ln}: face indices must be positive")
                idx.append(k - 1)
            faces.append(idx)
    v = np.asarray(verts, dtype=np.float64).reshape(-1, 3)
    if v.size and not np.all(np.isfinite(v)):
        raise NonFiniteValue(f"{name}: vertex coordinates contain NaN or infinity")
    f = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if f.size and (f.min() < 0 or f.max() >= max(len(verts), 1)):
        raise FormatError(f"{name}: face index out of range")
    return v, f


def read_mesh_sequence(paths: Sequence) -> MeshSequence:
    """Load numbered OBJ files (already sorted by the caller) as one animated
    mesh; every frame must have the same vertex count and identical faces."""
    paths = list(paths)
    if not paths:
        raise FormatError("mesh sequence needs at least one file")
    all_v = []
    faces0 = None
    for p in paths:
        raw = _read_bytes(p)
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"{p}: not a text OBJ file") from None
        v, f = _parse_obj(text, str(p))
        if faces0 is None:
            faces0 = f
        else:
            if v.shape[0] != all_v[0].shape[0]:
                raise TopologyMismatch(
                    f"{p}: {v.shape[0]} vertices, first frame has {all_v[0].shape[0]}"
                )
            if f.shape != faces0.shape or not np.array_equal(f, faces0):
                raise TopologyMismatch(f"{p}: face list differs from first frame")
        all_v.append(v)
    return MeshSequence(vertices=np.stack(all_v, axis=0), faces=faces0)


# --- PNG frame directories ------------------------------------------------------


def write_frame_dir(frames: FrameSequence, outdir) -> dict:
    """Write frame_%04d.png files plus manifest.json; returns the manifest."""
    os.makedirs(outdir, exist_ok=True)
    names = []
    for i in range(len(frames)):
        name = f"frame_{i:04d}.png"
        Image.fromarray(frames.frames[i]).save(os.path.join(outdir, name), format="PNG")
        names.append(name)
    t, h, w, _ = frames.frames.shape
    manifest = {"T": t, "width": w, "height": h, "files": names}
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        fh.write(dumps_canonical(manifest))
    return manifest


def read_frame_dir(indir) -> FrameSequence:
    """Load a frame directory written by write_frame_dir."""
    try:
        with open(os.path.join(indir, "manifest.json")) as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"{indir}: missing manifest.json") from None
    except json.JSONDecodeError as e:
        raise FormatError(f"{indir}: bad manifest: {e}") from None
    try:
        t, w, h = int(manifest["T"]), int(manifest["width"]), int(manifest["height"])
        files = list(manifest["files"])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{indir}: bad manifest: {e}") from None
    if len(files) != t:
        raise FormatError(f"{indir}: manifest lists {len(files)} files for T={t}")
    frames = np.empty((t, h, w, 3), dtype=np.uint8)
    for i, name in enumerate(files):
        with Image.open(os.path.join(indir, name)) as im:
            arr = np.asarray(im.convert("RGB"))
        if arr.shape != (h, w, 3):
            raise DimensionMismatch(f"{name}: {arr.shape[1]}x{arr.shape[0]}, expected {w}x{h}")
        frames[i] = arr
    return FrameSequence(frames=frames)


def read_image_rgb(src: PathOrFile) -> np.ndarray:
    """Decode any PIL-supported image to (H, W, 3) uint8."""
    data = _read_bytes(src)
    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB")).copy()
    except Exception as e:
        raise FormatError(f"cannot decode image: {e}") from None


def encode_png(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(buf, format="PNG")
    return buf.getvalue()


# --- JSON schemas ----------------------------------------------------------------


def dumps_canonical(obj) -> str:
    """Key-sorted, whitespace-free JSON: byte-stable for identical content."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _require(d: dict, key: str, ctx: str):
    if not isinstance(d, dict) or key not in d:
        raise FormatError(f"{ctx}: missing key {key!r}")
    return d[key]


def _floats(v, n: int, ctx: str) -> np.ndarray:
    try:
        arr = np.asarray([float(x) for x in v], dtype=np.float64)
    except (TypeError, ValueError):
        raise FormatError(f"{ctx}: expected {n} numbers") from None
    if arr.shape != (n,):
        raise FormatError(f"{ctx}: expected {n} numbers, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{ctx}: non-finite value")
    return arr


def camera_path_to_json(path: CameraPath) -> dict:
    it = path.intrinsics
    return {
        "intrinsics": {
            "fx": it.fx, "fy": it.fy, "cx": it.cx, "cy": it.cy,
            "width": it.width, "height": it.height,
        },
        "frames": [{"q": [float(v) for v in p.q], "t": [float(v) for v in p.t]} for p in path.poses],
    }


def camera_path_from_json(obj: dict) -> CameraPath:
    intr = _require(obj, "intrinsics", "camera path")
    try:
        intrinsics = Intrinsics(
            fx=float(_require(intr, "fx", "intrinsics")),
            fy=float(_require(intr, "fy", "intrinsics")),
            cx=float(_require(intr, "cx", "intrinsics")),
            cy=float(_require(intr, "cy", "intrinsics")),
            width=int(_require(intr, "width", "intrinsics")),
            height=int(_require(intr, "height", "intrinsics")),
        )
    except (TypeError, ValueError) as e:
        raise FormatError(f"intrinsics: {e}") from None
    frames = _require(obj, "frames", "camera path")
    if not isinstance(frames, list) or not frames:
        raise FormatError("camera path: frames must be a non-empty list")
    poses = []
    for i, fr in enumerate(frames):
        q = _floats(_require(fr, "q", f"frame {i}"), 4, f"frame {i} q")
        t = _floats(_require(fr, "t", f"frame {i}"), 3, f"frame {i} t")
        try:
            poses.append(Pose(q=q, t=t))
        except NonUnitQuaternion:
            raise
    return CameraPath(intrinsics=intrinsics, poses=tuple(poses))


def write_camera_path(path: CameraPath, dst) -> None:
    with open(dst, "w") as fh:
        fh.write(dumps_canonical(camera_path_to_json(path)))


def read_camera_path(src) -> CameraPath:
    with open(src) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise FormatError(f"bad camera path JSON: {e}") from None
    return camera_path_from_json(obj)


def timeline_to_json(tl: TransformTimeline) -> dict:
    pivot = "centroid" if isinstance(tl.pivot, str) else [float(v) for v in tl.pivot]
    return {
        "pivot": pivot,
        "keyframes": [
            {"frame": f, "q": [float(v) for v in q], "t": [float(v) for v in t]}
            for f, q, t in tl.keyframes
        ],
    }


def timeline_from_json(obj: dict) -> TransformTimeline:
    pivot = _require(obj, "pivot", "timeline")
    if pivot != "centroid":
        pivot = _floats(pivot, 3, "timeline pivot")
    kfs_json = _require(obj, "keyframes", "timeline")
    if not isinstance(kfs_json, list):
        raise FormatError("timeline: keyframes must be a list")
    kfs = []
    for i, kf in enumerate(kfs_json):
        try:
            frame = int(_require(kf, "frame", f"keyframe {i}"))
        except (TypeError, ValueError):
            raise FormatError(f"keyframe {i}: bad frame number") from None
        q = _floats(_require(kf, "q", f"keyframe {i}"), 4, f"keyframe {i} q")
        t = _floats(_require(kf, "t", f"keyframe {i}"), 3, f"keyframe {i} t")
        kfs.append((frame, q, t))
    return TransformTimeline(keyframes=tuple(kfs), pivot=pivot)


def read_timeline(src) -> TransformTimeline:
    with open(src) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise FormatError(f"bad timeline JSON: {e}") from None
    return timeline_from_json(obj)


def trajectory_spec_to_json(spec: TrajectorySpec) -> dict:
    out = {
        "kind": spec.kind,
        "frames": spec.frames,
        "magnitude": spec.magnitude,
        "radius": spec.radius,
        "turns": spec.turns,
        "look_at": None if spec.look_at is None else [float(v) for v in spec.look_at],
        "keyframes": [
            {"frame": f, "q": [float(v) for v in p.q], "t": [float(v) for v in p.t]}
            for f, p in spec.keyframes
        ],
    }
    return out


def trajectory_spec_from_json(obj: dict) -> TrajectorySpec:
    kind = _require(obj, "kind", "trajectory")
    if not isinstance(kind, str):
        raise FormatError("trajectory: kind must be a string")
    try:
        frames = int(_require(obj, "frames", "trajectory"))
    except (TypeError, ValueError):
        raise FormatError("trajectory: bad frames") from None
    kfs = []
    for i, kf in enumerate(obj.get("keyframes") or []):
        try:
            frame = int(_require(kf, "frame", f"keyframe {i}"))
        except (TypeError, ValueError):
            raise FormatError(f"keyframe {i}: bad frame number") from None
        q = _floats(_require(kf, "q", f"keyframe {i}"), 4, f"keyframe {i} q")
        t = _floats(_require(kf, "t", f"keyframe {i}"), 3, f"keyframe {i} t")
        kfs.append((frame, Pose(q=q, t=t)))
    look_at = obj.get("look_at")
    if look_at is not None:
        look_at = _floats(look_at, 3, "trajectory look_at")

    def num(key, default):
        v = obj.get(key, default)
        try:
            return float(v)
        except (TypeError, ValueError):
            raise FormatError(f"trajectory: bad {key}") from None

    try:
        return TrajectorySpec(
            kind=kind,
            frames=frames,
            magnitude=num("magnitude", 0.5),
            radius=num("radius", 0.5),
            turns=num("turns", 1.0),
            keyframes=tuple(kfs),
            look_at=look_at,
        )
    except ValueError as e:
        raise FormatError(str(e)) from None


def read_trajectory_spec(src) -> TrajectorySpec:
    with open(src) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise FormatError(f"bad trajectory JSON: {e}") from None
    return trajectory_spec_from_json(obj)


# --- export archives --------------------------------------------------------------

_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def zip_deterministic(entries: Iterable) -> bytes:
    """Zip (name, bytes) entries stored uncompressed with a fixed timestamp:
    identical content always produces identical archive bytes."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, payload in entries:
            info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
            zf.writestr(info, payload)
    return buf.getvalue()


def export_entries(frames: FrameSequence, tracks: TrackSet, path: CameraPath) -> list:
    """(name, bytes) pairs for an export: per-frame PNGs, the track file, the
    camera path, and a manifest."""
    t, h, w, _ = frames.frames.shape
    entries = []
    names = []
    for i in range(t):
        name = f"frame_{i:04d}.png"
        entries.append((name, encode_png(frames.frames[i])))
        names.append(name)
    trk = io.BytesIO()
    write_trackset(tracks, trk)
    entries.append(("tracks.trk", trk.getvalue()))
    entries.append(("camera.json", dumps_canonical(camera_path_to_json(path)).encode()))
    manifest = {"T": t, "width": w, "height": h, "files": names}
    entries.append(("manifest.json", dumps_canonical(manifest).encode()))
    return entries


def make_export_zip(frames: FrameSequence, tracks: TrackSet, path: CameraPath) -> bytes:
    """Bundle rendered frames, the track file, and the camera path into one
    deterministic zip archive."""
    return zip_deterministic(export_entries(frames, tracks, path))
