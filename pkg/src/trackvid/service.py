"""HTTP service exposing the session -> preview -> export workflow.

Sessions hold an uploaded RGB-D pair and its point cloud; previews are
rendered control videos cached by a content hash of everything that went into
them, so re-posting the same request is a cache hit. Both stores are LRU
bounded. Error mapping: FormatError -> 400, unknown id -> 404, geometry and
other precondition failures -> 422, anything unexpected -> 500 with no
internals leaked.
"""

from __future__ import annotations

import hashlib
import io
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from .builders import (
    build_camera_control,
    build_object_manipulation,
    make_camera_path,
)
from .errors import DimensionMismatch, FormatError, TrackVidError
from .formats import (
    dumps_canonical,
    export_entries,
    read_depth_pfm,
    read_image_rgb,
    read_mask_pgm,
    timeline_from_json,
    trajectory_spec_from_json,
    zip_deterministic,
)
from .geometry import (
    CameraPath,
    ColorMap,
    Intrinsics,
    PointCloud,
    Pose,
    colorize,
    unproject_depth,
)
from .render import RenderOptions, render_video

MAX_SESSIONS = 32
MAX_PREVIEWS = 4
DEFAULT_GRID = 70
MAX_PREVIEW_FRAMES = 500


@dataclass
class Session:
    """One uploaded RGB-D pair plus its derived point cloud."""

    id: str
    image: np.ndarray
    depth: np.ndarray
    intrinsics: Intrinsics
    grid: int
    cloud: PointCloud
    colors: ColorMap


@dataclass
class Preview:
    """A rendered control video, stored as encoded PNGs so the frame
    endpoint, the export archive, and any CLI re-render agree bitwise."""

    id: str
    session_id: str
    frames_png: list
    tracks_trk: bytes
    camera_json: str
    width: int
    height: int


class _LruStore:
    """Thread-safe id -> value map evicting least-recently-used entries."""

    def __init__(self, cap: int):
        self.cap = cap
        self._d: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def put(self, key: str, value) -> None:
        with self._lock:
            self._d[key] = value
            self._d.move_to_end(key)
            while len(self._d) > self.cap:
                self._d.popitem(last=False)

    def get(self, key: str):
        with self._lock:
            if key not in self._d:
                return None
            self._d.move_to_end(key)
            return self._d[key]


def _digest(*parts: bytes) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(len(p).to_bytes(8, "little"))
        h.update(p)
    return h.hexdigest()[:32]


def _bbox_dict(colors: ColorMap) -> dict:
    x_lo, x_hi, y_lo, y_hi, iz_lo, iz_hi = colors.bbox
    return {
        "x_min": x_lo, "x_max": x_hi,
        "y_min": y_lo, "y_max": y_hi,
        "invz_min": iz_lo, "invz_max": iz_hi,
    }


def create_app() -> FastAPI:
    app = FastAPI(title="trackvid", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions = _LruStore(MAX_SESSIONS)
    previews = _LruStore(MAX_PREVIEWS)
    app.state.sessions = sessions
    app.state.previews = previews

    @app.exception_handler(TrackVidError)
    def _domain_error(request: Request, exc: TrackVidError):
        status = 400 if isinstance(exc, FormatError) else 422
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(StarletteHTTPException)
    def _http_error(request: Request, exc: StarletteHTTPException):
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": "NotFound" if exc.status_code == 404 else "HTTPError",
                     "detail": str(exc.detail)},
        )

    @app.exception_handler(Exception)
    def _internal_error(request: Request, exc: Exception):
        # deliberately no exception details in the body
        return JSONResponse(status_code=500, content={"error": "InternalError", "detail": "internal error"})

    def _get_session(sid: str) -> Session:
        s = sessions.get(sid)
        if s is None:
            raise StarletteHTTPException(status_code=404, detail=f"unknown session {sid}")
        return s

    @app.get("/api/healthz")
    def healthz():
        return PlainTextResponse("ok")

    @app.post("/api/sessions")
    def create_session(
        image: UploadFile = File(...),
        depth: UploadFile = File(...),
        grid: int = Form(DEFAULT_GRID),
        fx: Optional[float] = Form(None),
        fy: Optional[float] = Form(None),
        cx: Optional[float] = Form(None),
        cy: Optional[float] = Form(None),
    ):
        image_bytes = image.file.read()
        depth_bytes = depth.file.read()
        img = read_image_rgb(io.BytesIO(image_bytes))
        dep = read_depth_pfm(io.BytesIO(depth_bytes))
        if img.shape[:2] != dep.shape:
            raise DimensionMismatch(
                f"image {img.shape[1]}x{img.shape[0]} vs depth {dep.shape[1]}x{dep.shape[0]}"
            )
        h, w = dep.shape
        try:
            intr = Intrinsics(
                fx=fx if fx is not None else 0.9 * w,
                fy=fy if fy is not None else 0.9 * w,
                cx=cx if cx is not None else w / 2.0,
                cy=cy if cy is not None else h / 2.0,
                width=w,
                height=h,
            )
        except ValueError as e:
            raise StarletteHTTPException(status_code=422, detail=str(e))
        params = dumps_canonical({"grid": grid, "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy})
        cloud = unproject_depth(dep, intr, grid)
        colors = colorize(cloud)
        sid = _digest(image_bytes, depth_bytes, params.encode())
        sessions.put(sid, Session(
            id=sid, image=img, depth=dep, intrinsics=intr, grid=grid, cloud=cloud, colors=colors,
        ))
        return {"id": sid, "n_points": len(cloud), "bbox": _bbox_dict(colors)}

    @app.get("/api/sessions/{sid}/points")
    def session_points(sid: str, grid: Optional[int] = None):
        s = _get_session(sid)
        if grid is None or grid == s.grid:
            cloud, colors = s.cloud, s.colors
        else:
            cloud = unproject_depth(s.depth, s.intrinsics, grid)
            colors = colorize(cloud)
        pos = cloud.positions
        q = colors.quantized
        pts = [
            {
                "x": float(pos[i, 0]), "y": float(pos[i, 1]), "z": float(pos[i, 2]),
                "r": int(q[i, 0]), "g": int(q[i, 1]), "b": int(q[i, 2]),
            }
            for i in range(pos.shape[0])
        ]
        return {"points": pts, "n_points": len(pts), "bbox": _bbox_dict(colors)}

    def _store_preview(pid: str, session: Session, frames, tracks, path: CameraPath) -> Preview:
        entries = export_entries(frames, tracks, path)
        t = len(frames)
        pv = Preview(
            id=pid,
            session_id=session.id,
            frames_png=[payload for _, payload in entries[:t]],
            tracks_trk=entries[t][1],
            camera_json=entries[t + 1][1].decode(),
            width=frames.frames.shape[2],
            height=frames.frames.shape[1],
        )
        previews.put(pid, pv)
        return pv

    def _preview_response(pv: Preview) -> dict:
        return {
            "preview_id": pv.id,
            "frames": len(pv.frames_png),
            "width": pv.width,
            "height": pv.height,
        }

    def _camera_preview(s: Session, body: dict) -> Preview:
        spec_json = dumps_canonical(body)
        pid = _digest(s.id.encode(), b"camera", spec_json.encode())
        cached = previews.get(pid)
        if cached is not None:
            return cached
        spec = trajectory_spec_from_json(body)
        if spec.frames > MAX_PREVIEW_FRAMES:
            raise StarletteHTTPException(
                status_code=422, detail=f"frames > {MAX_PREVIEW_FRAMES} not allowed here"
            )
        path = make_camera_path(spec, s.intrinsics)
        tracks, colors = build_camera_control(s.cloud, path)
        frames = render_video(tracks, colors, path, RenderOptions())
        return _store_preview(pid, s, frames, tracks, path)

    @app.post("/api/sessions/{sid}/previews/camera")
    def preview_camera(sid: str, body: dict):
        return _preview_response(_camera_preview(_get_session(sid), body))

    @app.post("/api/sessions/{sid}/previews/object")
    def preview_object(
        sid: str,
        mask: UploadFile = File(...),
        timeline: str = Form(...),
        frames: int = Form(49),
    ):
        s = _get_session(sid)
        mask_bytes = mask.file.read()
        pid = _digest(s.id.encode(), b"object", mask_bytes, timeline.encode(),
                      str(frames).encode())
        cached = previews.get(pid)
        if cached is not None:
            return _preview_response(cached)
        if frames > MAX_PREVIEW_FRAMES:
            raise StarletteHTTPException(
                status_code=422, detail=f"frames > {MAX_PREVIEW_FRAMES} not allowed here"
            )
        m = read_mask_pgm(io.BytesIO(mask_bytes))
        if m.shape != s.depth.shape:
            raise DimensionMismatch(
                f"mask {m.shape[1]}x{m.shape[0]} vs depth {s.depth.shape[1]}x{s.depth.shape[0]}"
            )
        import json as _json

        try:
            tl_obj = _json.loads(timeline)
        except _json.JSONDecodeError as e:
            raise FormatError(f"bad timeline JSON: {e}") from None
        tl = timeline_from_json(tl_obj)
        tracks, colors = build_object_manipulation(s.cloud, m, tl, frames)
        path = CameraPath(
            intrinsics=s.intrinsics, poses=tuple(Pose.identity() for _ in range(frames))
        )
        video = render_video(tracks, colors, path, RenderOptions())
        return _preview_response(_store_preview(pid, s, video, tracks, path))

    @app.get("/api/previews/{pid}/frames/{k}")
    def preview_frame(pid: str, k: int):
        pv = previews.get(pid)
        if pv is None:
            raise StarletteHTTPException(status_code=404, detail=f"unknown preview {pid}")
        if not 0 <= k < len(pv.frames_png):
            raise StarletteHTTPException(
                status_code=404, detail=f"frame {k} outside [0, {len(pv.frames_png)})"
            )
        return Response(content=pv.frames_png[k], media_type="image/png")

    @app.post("/api/sessions/{sid}/export")
    def export(sid: str, body: dict):
        s = _get_session(sid)
        if "preview_id" in body:
            pv = previews.get(body["preview_id"])
            if pv is None or pv.session_id != sid:
                raise StarletteHTTPException(
                    status_code=404, detail=f"unknown preview {body['preview_id']}"
                )
        elif "trajectory" in body:
            if not isinstance(body["trajectory"], dict):
                raise FormatError("trajectory must be an object")
            pv = _camera_preview(s, body["trajectory"])
        else:
            raise FormatError("export body needs preview_id or trajectory")
        entries = [(f"frame_{i:04d}.png", b) for i, b in enumerate(pv.frames_png)]
        entries.append(("tracks.trk", pv.tracks_trk))
        entries.append(("camera.json", pv.camera_json.encode()))
        manifest = {
            "T": len(pv.frames_png),
            "width": pv.width,
            "height": pv.height,
            "files": [name for name, _ in entries[: len(pv.frames_png)]],
        }
        entries.append(("manifest.json", dumps_canonical(manifest).encode()))
        payload = zip_deterministic(entries)
        return Response(
            content=payload,
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="export_{pv.id}.zip"'},
        )

    return app


app = create_app()
