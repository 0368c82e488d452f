import numpy as np
import pytest
from hypothesis import given, strategies as st

from trackvid.errors import (
    DegenerateConfiguration,
    DimensionMismatch,
    LengthMismatch,
    NonUnitQuaternion,
    TooFewCorrespondences,
)
from trackvid.geometry import Intrinsics, Pose, project_points, quat_to_matrix
from trackvid.metrics import (
    CorrespondenceSet,
    estimate_relative_pose_8pt,
    pose_errors,
    psnr,
    rot_err,
    ssim,
    trans_err,
)

INTR = Intrinsics(fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480)


def synthetic_correspondences(pose_b, n=60, seed=0):
    """Noiseless matched projections of a random non-coplanar cloud."""
    rng = np.random.default_rng(seed)
    pts = np.empty((n, 3))
    pts[:, 0] = rng.uniform(-1, 1, n)
    pts[:, 1] = rng.uniform(-1, 1, n)
    pts[:, 2] = rng.uniform(2, 4, n)
    uv1, _, vis1 = project_points(pts, INTR, Pose.identity())
    uv2, _, vis2 = project_points(pts, INTR, pose_b)
    keep = vis1 & vis2
    return CorrespondenceSet(uv1=uv1[keep], uv2=uv2[keep], intrinsics=INTR)


def quat_angle_deg(qa, qb):
    return np.degrees(2.0 * np.arccos(np.clip(abs(float(np.dot(qa, qb))), -1, 1)))


def vec_angle_deg(a, b):
    a = np.asarray(a) / np.linalg.norm(a)
    b = np.asarray(b) / np.linalg.norm(b)
    return np.degrees(np.arccos(np.clip(float(np.dot(a, b)), -1, 1)))


# --- eight-point pose recovery ----------------------------------------------------


def test_recovers_known_pose_noiseless():
    th = np.radians(5.0)
    true = Pose(q=[np.cos(th / 2), 0, np.sin(th / 2), 0], t=[0.3, 0.1, 0.05])
    corr = synthetic_correspondences(true)
    assert len(corr) >= 20
    rel = estimate_relative_pose_8pt(corr)
    assert quat_angle_deg(rel.q, true.q) < 0.1
    assert vec_angle_deg(rel.t_dir, true.t) < 0.1


def test_translation_scale_free():
    true = Pose(q=[1, 0, 0, 0], t=[0.2, 0.0, 0.0])
    big = Pose(q=[1, 0, 0, 0], t=[2.0, 0.0, 0.0])
    # scaling the baseline by 10 moves the projections, but t_dir is unchanged
    a = estimate_relative_pose_8pt(synthetic_correspondences(true))
    b = estimate_relative_pose_8pt(synthetic_correspondences(big))
    assert vec_angle_deg(a.t_dir, [1, 0, 0]) < 1e-6 * 57.3 + 0.1
    assert vec_angle_deg(b.t_dir, [1, 0, 0]) < 0.1
    np.testing.assert_allclose(a.t_dir, b.t_dir, rtol=0, atol=1e-6)


def test_zero_motion_degenerate():
    corr = synthetic_correspondences(Pose.identity())
    with pytest.raises(DegenerateConfiguration):
        estimate_relative_pose_8pt(corr)


def test_near_pure_rotation_degenerate():
    th = np.radians(4.0)
    pure = Pose(q=[np.cos(th / 2), 0, np.sin(th / 2), 0], t=[0, 0, 0])
    with pytest.raises(DegenerateConfiguration):
        estimate_relative_pose_8pt(synthetic_correspondences(pure))


def test_too_few_correspondences():
    uv = np.zeros((7, 2))
    with pytest.raises(TooFewCorrespondences):
        estimate_relative_pose_8pt(CorrespondenceSet(uv1=uv, uv2=uv, intrinsics=INTR))


def test_cheirality_picks_forward_solution():
    # translation along +x and -x give mirrored essentials; the sign must
    # come back right, not merely up-to-sign
    for tx in (0.3, -0.3):
        true = Pose(q=[1, 0, 0, 0], t=[tx, 0, 0])
        rel = estimate_relative_pose_8pt(synthetic_correspondences(true))
        assert vec_angle_deg(rel.t_dir, [tx, 0, 0]) < 0.1


@given(seed=st.integers(0, 30))
def test_recovery_accuracy_random_poses(seed):
    rng = np.random.default_rng(seed + 1000)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    th = rng.uniform(0.02, 0.15)
    q = np.concatenate([[np.cos(th / 2)], np.sin(th / 2) * axis])
    t = rng.uniform(-0.3, 0.3, 3)
    t[2] = abs(t[2]) * 0.3
    if np.linalg.norm(t) < 0.15:
        t = t * (0.15 / max(np.linalg.norm(t), 1e-9) + 1)
    true = Pose(q=q, t=t)
    corr = synthetic_correspondences(true, n=80, seed=seed)
    rel = estimate_relative_pose_8pt(corr)
    assert quat_angle_deg(rel.q, true.q) < 0.1
    assert vec_angle_deg(rel.t_dir, true.t) < 0.1


# --- rotation / translation error formulas ----------------------------------------


def test_rot_err_zero_for_equal():
    q = np.array([[1.0, 0, 0, 0], [np.cos(0.3), np.sin(0.3), 0, 0]])
    assert rot_err(q, q) == 0.0


def test_rot_err_double_cover():
    q = np.array([[np.cos(0.4), 0, np.sin(0.4), 0]])
    assert rot_err(q, -q) == 0.0


def test_rot_err_sixty_degree_half_angle():
    # rotations 60 deg apart: quaternion dot = cos(30 deg), arccos -> 30 deg
    th = np.radians(60.0)
    qa = np.array([[1.0, 0, 0, 0]])
    qb = np.array([[np.cos(th / 2), np.sin(th / 2), 0, 0]])
    assert abs(rot_err(qa, qb) - 30.0) < 1e-9


def test_rot_err_mean_then_arccos():
    # two frames: dots cos(30) and cos(90) -> arccos of the mean, not mean of arccos
    qa = np.array([[1.0, 0, 0, 0], [1.0, 0, 0, 0]])
    qb = np.array(
        [
            [np.cos(np.radians(30)), np.sin(np.radians(30)), 0, 0],
            [np.cos(np.radians(90)), np.sin(np.radians(90)), 0, 0],
        ]
    )
    want = np.degrees(np.arccos((np.cos(np.radians(30)) + np.cos(np.radians(90))) / 2))
    assert abs(rot_err(qa, qb) - want) < 1e-9


def test_trans_err_hand_values():
    assert trans_err([[0.2, 0, 0]], [[5.0, 0, 0]]) == 0.0
    assert abs(trans_err([[1, 0, 0]], [[0, 1, 0]]) - 90.0) < 1e-12
    # dots 1.0 and 0.5 -> arccos(0.75)
    gen = [[1, 0, 0], [1, 0, 0]]
    gt = [[2, 0, 0], [np.cos(np.radians(60)), np.sin(np.radians(60)), 0]]
    want = np.degrees(np.arccos(0.75))
    assert abs(trans_err(gen, gt) - want) < 1e-9
    assert abs(want - 41.40962210927086) < 1e-9


def test_trans_err_excludes_tiny_baselines():
    gen = [[0, 0, 0], [1, 0, 0]]
    gt = [[1, 0, 0], [1, 0, 0]]
    assert trans_err(gen, gt) == 0.0  # zero-baseline frame dropped, survivor agrees
    assert trans_err([[0, 0, 0]], [[1, 0, 0]]) == 0.0  # nothing survives -> 0
    assert trans_err([[1e-7, 0, 0]], [[1, 0, 0]]) == 0.0  # below the 1e-6 norm floor


@given(seed=st.integers(0, 100))
def test_error_symmetry_and_invariances(seed):
    rng = np.random.default_rng(seed)
    qa = rng.normal(size=(4, 4))
    qa /= np.linalg.norm(qa, axis=1, keepdims=True)
    qb = rng.normal(size=(4, 4))
    qb /= np.linalg.norm(qb, axis=1, keepdims=True)
    assert rot_err(qa, qb) == rot_err(qb, qa)
    flip = qa * np.array([[-1], [1], [-1], [1]])
    assert abs(rot_err(flip, qb) - rot_err(qa, qb)) < 1e-12
    ta = rng.normal(size=(4, 3))
    tb = rng.normal(size=(4, 3))
    assert trans_err(ta, tb) == trans_err(tb, ta)
    assert abs(trans_err(ta * 7.5, tb) - trans_err(ta, tb)) < 1e-9
    assert 0.0 <= rot_err(qa, qb) <= 180.0
    assert 0.0 <= trans_err(ta, tb) <= 180.0


def test_error_input_validation():
    q = np.array([[1.0, 0, 0, 0]])
    with pytest.raises(LengthMismatch):
        rot_err(q, np.repeat(q, 2, axis=0))
    with pytest.raises(NonUnitQuaternion):
        rot_err(np.array([[2.0, 0, 0, 0]]), q)
    with pytest.raises(LengthMismatch):
        trans_err([[1, 0, 0]], [[1, 0, 0], [0, 1, 0]])


def test_pose_errors_bundle():
    q = np.array([[1.0, 0, 0, 0], [1.0, 0, 0, 0]])
    t = np.array([[0, 0, 0], [1, 0, 0]], dtype=float)
    pe = pose_errors(q, q, t, t)
    assert pe.rot_err_deg == 0.0 and pe.trans_err_deg == 0.0
    assert pe.frames_used == 1


# --- PSNR / SSIM -------------------------------------------------------------------


def video(value, t=1, h=16, w=16):
    return np.full((t, h, w, 3), value, dtype=np.uint8)


def test_psnr_identical_is_cap():
    assert psnr(video(123), video(123)) == 99.0


def test_psnr_black_vs_white_zero():
    # MSE = 255^2 -> 10 log10(255^2 / 255^2) = 0
    assert psnr(video(0), video(255)) == 0.0


def test_psnr_uniform_offset_one():
    # MSE = 1 -> 10 log10(255^2) = 48.1308...
    got = psnr(video(100), video(101))
    assert abs(got - 10 * np.log10(255.0**2)) < 1e-12
    assert abs(got - 48.13) < 0.01


def test_psnr_is_mean_over_frames():
    a = np.concatenate([video(100), video(100)], axis=0)
    b = np.concatenate([video(100), video(101)], axis=0)
    assert abs(psnr(a, b) - (99.0 + 10 * np.log10(255.0**2)) / 2) < 1e-12


def test_psnr_monotone_in_mse():
    base = video(100)
    assert psnr(base, video(101)) > psnr(base, video(102)) > psnr(base, video(110))


def test_ssim_identical_is_one():
    rng = np.random.default_rng(0)
    v = rng.integers(0, 256, (2, 24, 24, 3), dtype=np.uint8)
    assert ssim(v, v) == 1.0


def test_ssim_constant_offset_closed_form():
    # constant luma v vs v+1: all variances vanish, SSIM reduces to
    # (2 v (v+1) + C1) / (v^2 + (v+1)^2 + C1)
    v = 100.0
    c1 = (0.01 * 255.0) ** 2
    want = (2 * v * (v + 1) + c1) / (v * v + (v + 1) ** 2 + c1)
    got = ssim(video(100, h=24, w=24), video(101, h=24, w=24))
    assert abs(got - want) < 1e-12


def test_ssim_sensitive_to_noise():
    rng = np.random.default_rng(1)
    a = rng.integers(0, 256, (1, 32, 32, 3), dtype=np.uint8)
    noise = a.astype(np.int64) + rng.integers(-20, 21, a.shape)
    b = np.clip(noise, 0, 255).astype(np.uint8)
    s = ssim(a, b)
    assert s < 1.0
    assert s > ssim(a, 255 - a)  # inverted video is far worse


def test_metric_shape_validation():
    with pytest.raises(DimensionMismatch):
        psnr(video(0), video(0, h=8))
    with pytest.raises(DimensionMismatch):
        ssim(video(0), video(0, h=8))
    with pytest.raises(DimensionMismatch):
        ssim(video(0, h=8, w=8), video(0, h=8, w=8))  # smaller than the window
    with pytest.raises(ValueError):
        psnr(np.zeros((4, 4, 3)), np.zeros((4, 4, 3)))
