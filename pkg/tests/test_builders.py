import numpy as np
import pytest
from hypothesis import given, strategies as st

from trackvid.builders import (
    MeshSequence,
    TrajectorySpec,
    TransformTimeline,
    build_camera_control,
    build_mesh_tracks,
    build_object_manipulation,
    import_tracks,
    make_camera_path,
    mesh_track_positions,
    sample_mesh_surface,
)
from trackvid.errors import (
    BadKeyframes,
    EmptyMesh,
    MissingSourcePixels,
    NoForegroundPoints,
    ZeroFrames,
)
from trackvid.formats import write_trackset
from trackvid.geometry import (
    CameraPath,
    Intrinsics,
    PointCloud,
    Pose,
    project_points,
    unproject_depth,
)
from trackvid.render import RenderOptions, render_video

INTR = Intrinsics(fx=60.0, fy=60.0, cx=16.0, cy=12.0, width=32, height=24)


def grid_cloud(w=32, h=24, grid=8, depth=2.0):
    return unproject_depth(np.full((h, w), depth), INTR, grid)


# --- camera paths ----------------------------------------------------------------


def test_preset_right_final_translation():
    # camera center ends at +0.5 x; world-to-camera t = -R @ C = (-0.5, 0, 0)
    path = make_camera_path(TrajectorySpec(kind="right", frames=49, magnitude=0.5), INTR)
    assert len(path) == 49
    np.testing.assert_array_equal(path.poses[0].q, [1, 0, 0, 0])
    np.testing.assert_array_equal(path.poses[0].t, [0, 0, 0])
    np.testing.assert_allclose(path.poses[48].t, [-0.5, 0, 0], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(path.poses[48].q, [1, 0, 0, 0])


@pytest.mark.parametrize(
    "kind,axis,sign",
    [("left", 0, 1), ("right", 0, -1), ("up", 1, 1), ("down", 1, -1)],
)
def test_preset_directions(kind, axis, sign):
    # t = -C, so a camera moving along +axis has t along -axis
    path = make_camera_path(TrajectorySpec(kind=kind, frames=5, magnitude=1.0), INTR)
    last = path.poses[-1].t
    assert last[axis] == sign * 1.0
    assert np.count_nonzero(last) == 1
    mids = np.array([p.t[axis] for p in path.poses])
    np.testing.assert_allclose(mids, sign * np.linspace(0, 1, 5), rtol=0, atol=1e-15)


def test_preset_zero_magnitude_all_identity():
    path = make_camera_path(TrajectorySpec(kind="left", frames=7, magnitude=0.0), INTR)
    for p in path.poses:
        np.testing.assert_array_equal(p.q, [1, 0, 0, 0])
        np.testing.assert_array_equal(p.t, [0, 0, 0])


def test_spiral_traces_circle():
    spec = TrajectorySpec(kind="spiral", frames=9, radius=0.3, turns=1.0)
    path = make_camera_path(spec, INTR)
    centers = np.array([-p.t for p in path.poses])  # R = I so C = -t
    # circle about (0, r, 0) in the xy plane
    d = np.linalg.norm(centers - np.array([0.0, 0.3, 0.0]), axis=1)
    np.testing.assert_allclose(d, 0.3, rtol=0, atol=1e-12)
    assert np.all(centers[:, 2] == 0)
    np.testing.assert_allclose(centers[-1], centers[0], rtol=0, atol=1e-12)  # full turn


def test_look_at_points_camera_at_target():
    target = np.array([0.1, -0.2, 2.0])
    spec = TrajectorySpec(kind="right", frames=5, magnitude=0.4, look_at=target)
    path = make_camera_path(spec, INTR)
    for pose in path.poses[1:]:
        R, t = pose.rotation(), pose.t
        cam = R @ target + t
        # target sits on the optical axis, in front
        assert cam[2] > 0
        np.testing.assert_allclose(cam[:2], 0, rtol=0, atol=1e-12)


def test_keyframed_path_interpolates():
    q90 = [np.cos(np.pi / 4), 0, 0, np.sin(np.pi / 4)]
    spec = TrajectorySpec(
        kind="keyframed",
        frames=5,
        keyframes=((0, Pose.identity()), (4, Pose(q=q90, t=[0.4, 0, 0]))),
    )
    path = make_camera_path(spec, INTR)
    np.testing.assert_allclose(path.poses[4].q, q90, rtol=0, atol=1e-15)
    np.testing.assert_allclose(path.poses[2].t, [0.2, 0, 0], rtol=0, atol=1e-15)
    q45 = [np.cos(np.pi / 8), 0, 0, np.sin(np.pi / 8)]
    np.testing.assert_allclose(path.poses[2].q, q45, rtol=0, atol=1e-15)


def test_trajectory_spec_validation():
    with pytest.raises(ZeroFrames):
        TrajectorySpec(kind="left", frames=1)
    with pytest.raises(ValueError):
        TrajectorySpec(kind="zoom", frames=5)
    with pytest.raises(BadKeyframes):
        TrajectorySpec(kind="keyframed", frames=5, keyframes=((0, Pose.identity()),))
    with pytest.raises(BadKeyframes):
        TrajectorySpec(
            kind="keyframed",
            frames=5,
            keyframes=((1, Pose.identity()), (4, Pose.identity())),
        )
    with pytest.raises(BadKeyframes):
        TrajectorySpec(
            kind="keyframed",
            frames=5,
            keyframes=((0, Pose.identity()), (0, Pose.identity()), (4, Pose.identity())),
        )
    with pytest.raises(BadKeyframes):
        TrajectorySpec(kind="left", frames=5, keyframes=((0, Pose.identity()),))


# --- camera control --------------------------------------------------------------


def test_camera_control_static_scene():
    cloud = grid_cloud()
    path = make_camera_path(TrajectorySpec(kind="right", frames=6, magnitude=0.2), INTR)
    tracks, colors = build_camera_control(cloud, path)
    assert tracks.n_frames == 6 and tracks.n_points == 64
    for t in range(1, 6):
        np.testing.assert_array_equal(tracks.positions[t], tracks.positions[0])
    assert len(colors) == 64


def test_camera_right_pixels_drift_left():
    # camera moving right shifts every projection monotonically left
    cloud = grid_cloud()
    path = make_camera_path(TrajectorySpec(kind="right", frames=8, magnitude=0.3), INTR)
    tracks, _ = build_camera_control(cloud, path)
    prev_u = None
    for t in range(8):
        uv, _, vis = project_points(
            tracks.positions[t].astype(np.float64), INTR, path.poses[t]
        )
        if prev_u is not None:
            both = vis & prev_vis
            assert np.all(uv[both, 0] <= prev_u[both] + 1e-12)
        prev_u, prev_vis = uv[:, 0], vis


def test_identity_path_constant_render():
    cloud = grid_cloud()
    poses = tuple(Pose.identity() for _ in range(4))
    tracks, colors = build_camera_control(cloud, CameraPath(intrinsics=INTR, poses=poses))
    seq = render_video(tracks, colors, CameraPath(intrinsics=INTR, poses=poses))
    for t in range(1, 4):
        np.testing.assert_array_equal(seq.frames[t], seq.frames[0])


# --- object manipulation ---------------------------------------------------------


def half_mask():
    m = np.zeros((24, 32), dtype=bool)
    m[:, 16:] = True
    return m


def test_identity_timeline_is_static():
    cloud = grid_cloud()
    tl = TransformTimeline(keyframes=((0, [1, 0, 0, 0], [0, 0, 0]),))
    tracks, _ = build_object_manipulation(cloud, half_mask(), tl, frames=5)
    for t in range(5):
        np.testing.assert_allclose(
            tracks.positions[t], cloud.positions.astype(np.float32), rtol=0, atol=0
        )


def test_translation_linear_closed_form():
    # one keyframe at T-1 moving (0.1, 0, 0): frame t adds 0.1 * t / (T-1)
    cloud = grid_cloud()
    mask = half_mask()
    T = 11
    tl = TransformTimeline(keyframes=((T - 1, [1, 0, 0, 0], [0.1, 0, 0]),))
    tracks, _ = build_object_manipulation(cloud, mask, tl, frames=T)
    u = np.rint(cloud.source_pixel[:, 0]).astype(int)
    v = np.rint(cloud.source_pixel[:, 1]).astype(int)
    fg = mask[v, u]
    for t in range(T):
        shift = np.array([0.1 * t / (T - 1), 0, 0], dtype=np.float64)
        want = cloud.positions.copy()
        want[fg] += shift
        np.testing.assert_allclose(
            tracks.positions[t], want.astype(np.float32), rtol=0, atol=1e-7
        )
        np.testing.assert_array_equal(tracks.positions[t][~fg], cloud.positions[~fg].astype(np.float32))


def test_rotation_preserves_centroid():
    cloud = grid_cloud()
    mask = half_mask()
    q90 = [np.cos(np.pi / 4), 0, np.sin(np.pi / 4), 0]
    tl = TransformTimeline(keyframes=((6, q90, [0, 0, 0]),))
    tracks, _ = build_object_manipulation(cloud, mask, tl, frames=7)
    u = np.rint(cloud.source_pixel[:, 0]).astype(int)
    v = np.rint(cloud.source_pixel[:, 1]).astype(int)
    fg = mask[v, u]
    c0 = tracks.positions[0][fg].mean(axis=0)
    for t in range(7):
        ct = tracks.positions[t][fg].mean(axis=0)
        np.testing.assert_allclose(ct, c0, rtol=0, atol=1e-6)


def test_explicit_pivot_fixed_point():
    cloud = grid_cloud()
    pivot = cloud.positions[10]
    q = [np.cos(0.5), np.sin(0.5), 0, 0]
    tl = TransformTimeline(keyframes=((4, q, [0, 0, 0]),), pivot=pivot)
    tracks, _ = build_object_manipulation(cloud, np.ones((24, 32), bool), tl, frames=5)
    for t in range(5):
        np.testing.assert_allclose(tracks.positions[t][10], pivot, rtol=0, atol=1e-6)


def test_timeline_holds_after_last_keyframe():
    tl = TransformTimeline(keyframes=((2, [1, 0, 0, 0], [0.2, 0, 0]),))
    q, t = tl.interpolate(5)
    np.testing.assert_array_equal(t, [0.2, 0, 0])
    q, t = tl.interpolate(1)
    np.testing.assert_allclose(t, [0.1, 0, 0], rtol=0, atol=1e-15)


def test_timeline_validation():
    with pytest.raises(BadKeyframes):
        TransformTimeline(keyframes=())
    with pytest.raises(BadKeyframes):
        TransformTimeline(keyframes=((0, [1, 0, 0, 0], [0.1, 0, 0]),))  # frame 0 not identity
    with pytest.raises(BadKeyframes):
        TransformTimeline(
            keyframes=((3, [1, 0, 0, 0], [0, 0, 0]), (1, [1, 0, 0, 0], [0, 0, 0]))
        )
    with pytest.raises(ValueError):
        TransformTimeline(keyframes=((1, [1, 0, 0, 0], [0, 0, 0]),), pivot="corner")
    # implicit identity keyframe is prepended when frame 0 is absent
    tl = TransformTimeline(keyframes=((3, [1, 0, 0, 0], [0.3, 0, 0]),))
    assert tl.keyframes[0][0] == 0
    np.testing.assert_array_equal(tl.keyframes[0][2], [0, 0, 0])


def test_object_manipulation_errors():
    cloud = grid_cloud()
    tl = TransformTimeline(keyframes=((3, [1, 0, 0, 0], [0.1, 0, 0]),))
    bare = PointCloud(positions=cloud.positions)
    with pytest.raises(MissingSourcePixels):
        build_object_manipulation(bare, half_mask(), tl, frames=5)
    with pytest.raises(NoForegroundPoints):
        build_object_manipulation(cloud, np.zeros((24, 32), bool), tl, frames=5)
    with pytest.raises(ZeroFrames):
        build_object_manipulation(cloud, half_mask(), tl, frames=1)
    with pytest.raises(BadKeyframes):
        build_object_manipulation(cloud, half_mask(), tl, frames=3)  # keyframe at 3 > 2


# --- mesh tracks -----------------------------------------------------------------


def two_triangle_mesh(frames=1):
    # areas 9 : 1 (right triangles with legs 6,3 and 2,1)
    verts = np.array(
        [
            [0, 0, 2], [6, 0, 2], [0, 3, 2],
            [10, 0, 2], [12, 0, 2], [10, 1, 2],
        ],
        dtype=np.float64,
    )
    faces = np.array([[0, 1, 2], [3, 4, 5]])
    return MeshSequence(vertices=np.broadcast_to(verts, (frames, 6, 3)).copy(), faces=faces)


def test_area_weighted_sampling_ratio():
    # binomial oracle: n=10000, p=0.9 -> sigma = sqrt(n p (1-p)) = 30
    fi, _ = sample_mesh_surface(two_triangle_mesh(), 10_000, seed=7)
    big = int(np.sum(fi == 0))
    assert abs(big - 9000) <= 3 * 30


def test_barycentric_vertex_sample_tracks_vertex():
    verts = np.zeros((3, 3, 3))
    verts[:, :, 2] = 1.0
    verts[:, 0, 0] = [0.0, 0.5, 1.0]  # vertex 0 slides in x
    verts[:, 1] += [1, 0, 0]
    verts[:, 2] += [0, 1, 0]
    mesh = MeshSequence(vertices=verts, faces=[[0, 1, 2]])
    pos = mesh_track_positions(mesh, np.array([0]), np.array([[1.0, 0.0, 0.0]]))
    np.testing.assert_array_equal(pos[:, 0], verts[:, 0])


def test_barycentric_weights_valid(rng):
    _, bary = sample_mesh_surface(two_triangle_mesh(), 500, seed=3)
    assert np.all(bary >= 0)
    np.testing.assert_allclose(bary.sum(axis=1), 1.0, rtol=0, atol=1e-12)


def test_static_mesh_static_tracks():
    tracks, colors = build_mesh_tracks(two_triangle_mesh(frames=4), 50, seed=1)
    assert tracks.n_frames == 4 and tracks.n_points == 50
    for t in range(1, 4):
        np.testing.assert_array_equal(tracks.positions[t], tracks.positions[0])
    assert len(colors) == 50


def test_mesh_sampling_deterministic():
    a = sample_mesh_surface(two_triangle_mesh(), 100, seed=9)
    b = sample_mesh_surface(two_triangle_mesh(), 100, seed=9)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    c = sample_mesh_surface(two_triangle_mesh(), 100, seed=10)
    assert not np.array_equal(a[1], c[1])


def test_samples_lie_on_surface():
    mesh = two_triangle_mesh()
    fi, bary = sample_mesh_surface(mesh, 200, seed=2)
    pos = mesh_track_positions(mesh, fi, bary)[0]
    assert np.all(pos[:, 2] == 2.0)  # both triangles live in the z=2 plane


def test_mesh_validation():
    with pytest.raises(EmptyMesh):
        MeshSequence(vertices=np.zeros((1, 0, 3)), faces=np.zeros((0, 3), int))
    with pytest.raises(ValueError):
        MeshSequence(vertices=np.zeros((1, 3, 3)), faces=[[0, 1, 5]])
    degenerate = MeshSequence(
        vertices=np.zeros((1, 3, 3)), faces=[[0, 1, 2]]
    )  # zero area
    with pytest.raises(EmptyMesh):
        sample_mesh_surface(degenerate, 10, seed=0)
    with pytest.raises(ValueError):
        sample_mesh_surface(two_triangle_mesh(), 0, seed=0)


# --- import ----------------------------------------------------------------------


def test_imported_static_tracks_match_camera_control(tmp_path):
    cloud = grid_cloud()
    poses = tuple(Pose.identity() for _ in range(5))
    path = CameraPath(intrinsics=INTR, poses=poses)
    tracks, colors = build_camera_control(cloud, path)

    f = tmp_path / "static.trk"
    write_trackset(tracks, f)
    tracks2, colors2 = import_tracks(f)

    np.testing.assert_array_equal(tracks2.positions, tracks.positions)
    np.testing.assert_array_equal(colors2.quantized, colors.quantized)
    a = render_video(tracks, colors, path, RenderOptions())
    b = render_video(tracks2, colors2, path, RenderOptions())
    np.testing.assert_array_equal(a.frames, b.frames)
