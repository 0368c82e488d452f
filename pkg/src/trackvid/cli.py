"""Command-line interface.

Exit codes: 0 success, 1 data/input errors (one machine-parsable line on
stderr: "error: <ExceptionName>: <message>"), 2 usage errors (click).
"""

from __future__ import annotations

import functools
import os
import sys

import click
import numpy as np

from .builders import (
    TrajectorySpec,
    build_camera_control,
    build_mesh_tracks,
    build_object_manipulation,
    import_tracks,
    make_camera_path,
    PRESET_KINDS,
)
from .errors import DimensionMismatch, LengthMismatch, TrackVidError
from .formats import (
    read_camera_path,
    read_depth_pfm,
    read_frame_dir,
    read_image_rgb,
    read_mask_pgm,
    read_mesh_sequence,
    read_timeline,
    read_trajectory_spec,
    write_camera_path,
    write_frame_dir,
    write_trackset,
)
from .geometry import CameraPath, Intrinsics, Pose, relative_pose, unproject_depth
from .metrics import psnr, rot_err, ssim, trans_err
from .render import RenderOptions, render_video

DEFAULT_GRID = 70
DEFAULT_PORT = 8350
PORT_ENV_VAR = "TRACKVID_PORT"


def data_errors(f):
    """Map TrackVidError to exit 1 with one parseable line on stderr."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except TrackVidError as e:
            click.echo(f"error: {type(e).__name__}: {e}", err=True)
            sys.exit(1)

    return wrapper


def intrinsics_options(f):
    for opt in reversed(
        [
            click.option("--fx", type=float, default=None, help="Focal length x [px]; default 0.9*width."),
            click.option("--fy", type=float, default=None, help="Focal length y [px]; default 0.9*width."),
            click.option("--cx", type=float, default=None, help="Principal point x [px]; default width/2."),
            click.option("--cy", type=float, default=None, help="Principal point y [px]; default height/2."),
        ]
    ):
        f = opt(f)
    return f


def build_intrinsics(width: int, height: int, fx, fy, cx, cy) -> Intrinsics:
    return Intrinsics(
        fx=fx if fx is not None else 0.9 * width,
        fy=fy if fy is not None else 0.9 * width,
        cx=cx if cx is not None else width / 2.0,
        cy=cy if cy is not None else height / 2.0,
        width=width,
        height=height,
    )


def render_options(f):
    for opt in reversed(
        [
            click.option("--splat-radius", type=int, default=1, show_default=True, help="Half-width of each point splat."),
            click.option("--workers", type=int, default=1, show_default=True, help="Render worker threads."),
        ]
    ):
        f = opt(f)
    return f


def identity_path(intrinsics: Intrinsics, frames: int) -> CameraPath:
    return CameraPath(intrinsics=intrinsics, poses=tuple(Pose.identity() for _ in range(frames)))


def _write_outputs(outdir, frames, tracks, path):
    os.makedirs(outdir, exist_ok=True)
    write_frame_dir(frames, outdir)
    write_trackset(tracks, os.path.join(outdir, "tracks.trk"))
    write_camera_path(path, os.path.join(outdir, "camera.json"))


def _resolve_trajectory(traj: str, frames: int, magnitude: float, radius: float, turns: float) -> TrajectorySpec:
    if traj in PRESET_KINDS:
        return TrajectorySpec(
            kind=traj, frames=frames, magnitude=magnitude, radius=radius, turns=turns
        )
    return read_trajectory_spec(traj)


@click.group()
def main():
    """Build, render, and evaluate colorized 3D point-tracking videos."""


@main.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Reference RGB frame (defines the video size).")
@click.option("--depth", "depth_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Depth map (.pfm) aligned with the image.")
@click.option("--traj", required=True, help=f"Preset ({', '.join(PRESET_KINDS)}) or trajectory JSON file.")
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--frames", type=int, default=49, show_default=True, help="Clip length for preset trajectories.")
@click.option("--magnitude", type=float, default=0.5, show_default=True, help="Total camera travel for linear presets [world units].")
@click.option("--radius", type=float, default=0.5, show_default=True, help="Spiral radius [world units].")
@click.option("--turns", type=float, default=1.0, show_default=True, help="Spiral revolutions over the clip.")
@click.option("--grid", type=int, default=DEFAULT_GRID, show_default=True, help="Point lattice size (grid^2 points).")
@intrinsics_options
@render_options
@data_errors
def camera(image_path, depth_path, traj, outdir, frames, magnitude, radius, turns, grid, fx, fy, cx, cy, splat_radius, workers):
    """Render a camera-move control video from one RGB-D frame."""
    image = read_image_rgb(image_path)
    depth = read_depth_pfm(depth_path)
    if image.shape[:2] != depth.shape:
        raise DimensionMismatch(
            f"image {image.shape[1]}x{image.shape[0]} vs depth {depth.shape[1]}x{depth.shape[0]}"
        )
    h, w = depth.shape
    intr = build_intrinsics(w, h, fx, fy, cx, cy)
    cloud = unproject_depth(depth, intr, grid)
    spec = _resolve_trajectory(traj, frames, magnitude, radius, turns)
    path = make_camera_path(spec, intr)
    tracks, colors = build_camera_control(cloud, path)
    video = render_video(tracks, colors, path, RenderOptions(splat_radius=splat_radius), workers=workers)
    _write_outputs(outdir, video, tracks, path)
    click.echo(f"wrote {len(video)} frames, {tracks.n_points} tracks to {outdir}")


@main.command(name="object")
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Reference RGB frame.")
@click.option("--depth", "depth_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Depth map (.pfm).")
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Foreground mask (.pgm, >=128 selects).")
@click.option("--timeline", "timeline_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Rigid-transform timeline JSON.")
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--frames", type=int, default=49, show_default=True, help="Clip length.")
@click.option("--grid", type=int, default=DEFAULT_GRID, show_default=True, help="Point lattice size (grid^2 points).")
@intrinsics_options
@render_options
@data_errors
def object_cmd(image_path, depth_path, mask_path, timeline_path, outdir, frames, grid, fx, fy, cx, cy, splat_radius, workers):
    """Render an object-manipulation control video (static camera)."""
    image = read_image_rgb(image_path)
    depth = read_depth_pfm(depth_path)
    if image.shape[:2] != depth.shape:
        raise DimensionMismatch(
            f"image {image.shape[1]}x{image.shape[0]} vs depth {depth.shape[1]}x{depth.shape[0]}"
        )
    mask = read_mask_pgm(mask_path)
    if mask.shape != depth.shape:
        raise DimensionMismatch(
            f"mask {mask.shape[1]}x{mask.shape[0]} vs depth {depth.shape[1]}x{depth.shape[0]}"
        )
    h, w = depth.shape
    intr = build_intrinsics(w, h, fx, fy, cx, cy)
    cloud = unproject_depth(depth, intr, grid)
    timeline = read_timeline(timeline_path)
    tracks, colors = build_object_manipulation(cloud, mask, timeline, frames)
    path = identity_path(intr, frames)
    video = render_video(tracks, colors, path, RenderOptions(splat_radius=splat_radius), workers=workers)
    _write_outputs(outdir, video, tracks, path)
    click.echo(f"wrote {len(video)} frames, {tracks.n_points} tracks to {outdir}")


@main.command()
@click.option("--obj", "obj_paths", multiple=True, required=True, type=click.Path(exists=True, dir_okay=False), help="OBJ files, one per frame, in order (repeatable).")
@click.option("--samples", type=int, default=4900, show_default=True, help="Surface samples to track.")
@click.option("--seed", type=int, default=0, show_default=True, help="Sampling seed.")
@click.option("--camera", "camera_path_file", type=click.Path(exists=True, dir_okay=False), default=None, help="Camera path JSON; identity path if omitted.")
@click.option("--width", type=int, default=720, show_default=True, help="Image width when no camera file is given.")
@click.option("--height", type=int, default=480, show_default=True, help="Image height when no camera file is given.")
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@intrinsics_options
@render_options
@data_errors
def mesh(obj_paths, samples, seed, camera_path_file, width, height, outdir, fx, fy, cx, cy, splat_radius, workers):
    """Render a control video that tracks an animated mesh surface."""
    seq = read_mesh_sequence(obj_paths)
    tracks, colors = build_mesh_tracks(seq, samples, seed=seed)
    if camera_path_file is not None:
        path = read_camera_path(camera_path_file)
        if len(path) != tracks.n_frames:
            raise LengthMismatch(f"camera path has {len(path)} poses for {tracks.n_frames} mesh frames")
    else:
        path = identity_path(build_intrinsics(width, height, fx, fy, cx, cy), tracks.n_frames)
    video = render_video(tracks, colors, path, RenderOptions(splat_radius=splat_radius), workers=workers)
    _write_outputs(outdir, video, tracks, path)
    click.echo(f"wrote {len(video)} frames, {tracks.n_points} tracks to {outdir}")


@main.command()
@click.option("--input", "track_file", required=True, type=click.Path(exists=True, dir_okay=False), help="Track file (.trk) to re-render.")
@click.option("--camera", "camera_path_file", type=click.Path(exists=True, dir_okay=False), default=None, help="Camera path JSON; identity path if omitted.")
@click.option("--width", type=int, default=720, show_default=True, help="Image width when no camera file is given.")
@click.option("--height", type=int, default=480, show_default=True, help="Image height when no camera file is given.")
@click.option("--out", "outdir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@intrinsics_options
@render_options
@data_errors
def tracks(track_file, camera_path_file, width, height, outdir, fx, fy, cx, cy, splat_radius, workers):
    """Re-render an imported track file (colors recomputed from frame 0)."""
    trk, colors = import_tracks(track_file)
    if camera_path_file is not None:
        path = read_camera_path(camera_path_file)
        if len(path) != trk.n_frames:
            raise LengthMismatch(f"camera path has {len(path)} poses for {trk.n_frames} track frames")
    else:
        path = identity_path(build_intrinsics(width, height, fx, fy, cx, cy), trk.n_frames)
    video = render_video(trk, colors, path, RenderOptions(splat_radius=splat_radius), workers=workers)
    _write_outputs(outdir, video, trk, path)
    click.echo(f"wrote {len(video)} frames, {trk.n_points} tracks to {outdir}")


@main.group(name="eval")
def eval_group():
    """Compare generated outputs against references."""


@eval_group.command(name="pose")
@click.option("--gt", "gt_file", required=True, type=click.Path(exists=True, dir_okay=False), help="Ground-truth camera path JSON.")
@click.option("--est", "est_file", required=True, type=click.Path(exists=True, dir_okay=False), help="Estimated camera path JSON.")
@data_errors
def eval_pose(gt_file, est_file):
    """Print rotation/translation errors (degrees) between two camera paths."""
    gt = read_camera_path(gt_file)
    est = read_camera_path(est_file)
    if len(gt) != len(est):
        raise LengthMismatch(f"{len(gt)} vs {len(est)} poses")
    if len(gt) < 2:
        raise LengthMismatch("need at least 2 poses to compare relative motion")
    gt_q, est_q, gt_t, est_t = [], [], [], []
    for i in range(1, len(gt)):
        for path, qs, ts in ((gt, gt_q, gt_t), (est, est_q, est_t)):
            a, b = path.poses[0], path.poses[i]
            r_rel = b.rotation() @ a.rotation().T
            qs.append(relative_pose(a, b).q)
            ts.append(b.t - r_rel @ a.t)
    r = rot_err(np.array(est_q), np.array(gt_q))
    t = trans_err(np.array(est_t), np.array(gt_t))
    click.echo(f"RotErr {r:.2f} TransErr {t:.2f}")


@eval_group.command(name="quality")
@click.option("--ref", "ref_dir", required=True, type=click.Path(exists=True, file_okay=False), help="Reference frame directory.")
@click.option("--test", "test_dir", required=True, type=click.Path(exists=True, file_okay=False), help="Frame directory under test.")
@data_errors
def eval_quality(ref_dir, test_dir):
    """Print PSNR (dB) and SSIM between two rendered frame directories."""
    ref = read_frame_dir(ref_dir)
    test = read_frame_dir(test_dir)
    click.echo(f"PSNR {psnr(test, ref):.2f} SSIM {ssim(test, ref):.4f}")


@main.group()
def sim():
    """Toy conditioning-branch simulator."""


@sim.command()
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for inputs and injector jitter.")
@click.option("--max-coords", type=int, default=200, show_default=True, help="Coordinates checked per parameter group.")
@data_errors
def check(seed, max_coords):
    """Verify zero-init equivalence and the analytic gradients."""
    from .toydit import ToyDiTConfig, attach_condition_branch, forward_base, forward_conditioned, grad_check, init

    cfg = ToyDiTConfig()
    model = attach_condition_branch(init(cfg))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((cfg.tokens, cfg.width))
    cond = rng.standard_normal((cfg.tokens, cfg.width))
    diff = float(
        np.max(np.abs(forward_conditioned(model, x, cond, 0) - forward_base(model, x, 0)))
    )
    ok_zero = diff == 0.0
    click.echo(f"zero-init max |conditioned - base| = {diff:.1e} [{'pass' if ok_zero else 'FAIL'}]")
    # jitter the injectors so branch gradients are generically nonzero
    for j in range(cfg.k_copied):
        model.params[f"inj.{j}.w"] += rng.normal(0.0, 0.02, model.params[f"inj.{j}.w"].shape)
    err = grad_check(model, max_coords_per_group=max_coords, seed=seed)
    ok_grad = err < 1e-4
    click.echo(f"grad check max rel err = {err:.2e} [{'pass' if ok_grad else 'FAIL'}]")
    if not (ok_zero and ok_grad):
        sys.exit(1)


@sim.command()
@click.option("--steps", type=int, default=500, show_default=True, help="Training steps.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for init, batches, and timesteps.")
@click.option("--lr", type=float, default=1e-4, show_default=True, help="AdamW learning rate.")
@click.option("--out", "out_file", type=click.Path(dir_okay=False), default=None, help="Write one loss per line here.")
@data_errors
def train(steps, seed, lr, out_file):
    """Train the condition branch on the synthetic revealed-noise task."""
    from .toydit import run_synthetic_training

    losses = run_synthetic_training(steps=steps, seed=seed, lr=lr)
    if out_file:
        with open(out_file, "w") as fh:
            fh.write("\n".join(repr(v) for v in losses) + "\n")
    head = float(np.mean(losses[: min(50, len(losses))]))
    tail = float(np.mean(losses[-min(50, len(losses)):]))
    click.echo(f"steps {len(losses)} first50 {head:.6f} last50 {tail:.6f} ratio {tail / head:.4f}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True, help="Bind address.")
@click.option("--port", type=int, default=None, help=f"Port (default ${PORT_ENV_VAR} or {DEFAULT_PORT}).")
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    if port is None:
        port = int(os.environ.get(PORT_ENV_VAR, DEFAULT_PORT))
    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
