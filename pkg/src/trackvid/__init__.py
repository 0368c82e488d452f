"""Colorized 3D point-tracking videos as control signals.

Pipeline: lift a depth map (or mesh) to 3D points, colorize each point from
its first-frame camera coordinates, move the camera or the points, and render
z-buffered splats whose per-point color never changes. The toydit subpackage
simulates how such a control video couples into a frozen denoiser through a
zero-initialized branch.
"""

from .builders import (
    MeshSequence,
    TrajectorySpec,
    TransformTimeline,
    build_camera_control,
    build_mesh_tracks,
    build_object_manipulation,
    import_tracks,
    make_camera_path,
)
from .errors import TrackVidError
from .geometry import (
    CameraPath,
    ColorMap,
    Intrinsics,
    PointCloud,
    Pose,
    RelPose,
    colorize,
    project,
    relative_pose,
    slerp,
    unproject_depth,
)
from .metrics import (
    CorrespondenceSet,
    PoseErrors,
    estimate_relative_pose_8pt,
    psnr,
    rot_err,
    ssim,
    trans_err,
)
from .render import FrameSequence, RenderOptions, TrackSet, render_frame, render_video

__version__ = "0.1.0"

__all__ = [
    "CameraPath",
    "ColorMap",
    "CorrespondenceSet",
    "FrameSequence",
    "Intrinsics",
    "MeshSequence",
    "PointCloud",
    "Pose",
    "PoseErrors",
    "RelPose",
    "RenderOptions",
    "TrackSet",
    "TrackVidError",
    "TrajectorySpec",
    "TransformTimeline",
    "build_camera_control",
    "build_mesh_tracks",
    "build_object_manipulation",
    "colorize",
    "estimate_relative_pose_8pt",
    "import_tracks",
    "make_camera_path",
    "project",
    "psnr",
    "relative_pose",
    "render_frame",
    "render_video",
    "rot_err",
    "slerp",
    "ssim",
    "trans_err",
    "unproject_depth",
]
