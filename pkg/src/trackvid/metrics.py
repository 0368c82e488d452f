"""Camera-pose recovery from correspondences and video quality metrics.

Pose errors follow the mean-quaternion-dot / mean-direction-dot convention:
arccos of the average per-frame agreement, reported in degrees.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import correlate1d

from .errors import (
    DegenerateConfiguration,
    DimensionMismatch,
    LengthMismatch,
    NonUnitQuaternion,
    TooFewCorrespondences,
)
from .geometry import Intrinsics, RelPose, _as_readonly, quat_from_matrix

_CHEIRALITY_SAMPLE = 200
_CHEIRALITY_MIN_FRACTION = 0.75
PSNR_CAP_DB = 99.0


@dataclass(frozen=True)
class CorrespondenceSet:
    """Matched pixel coordinates of the same 3D points seen by two cameras
    sharing one set of intrinsics."""

    uv1: np.ndarray
    uv2: np.ndarray
    intrinsics: Intrinsics

    def __post_init__(self):
        a = np.asarray(self.uv1, dtype=np.float64)
        b = np.asarray(self.uv2, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != 2 or a.shape != b.shape:
            raise ValueError(f"uv arrays must both be (M, 2), got {a.shape} and {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("correspondences must be finite")
        object.__setattr__(self, "uv1", _as_readonly(a))
        object.__setattr__(self, "uv2", _as_readonly(b))

    def __len__(self) -> int:
        return self.uv1.shape[0]


@dataclass(frozen=True)
class PoseErrors:
    rot_err_deg: float
    trans_err_deg: float
    frames_used: int


def _hartley_normalize(x: np.ndarray) -> tuple:
    """Translate to the centroid and scale mean distance to sqrt(2);
    returns (normalized points, 3x3 transform)."""
    c = x.mean(axis=0)
    d = np.linalg.norm(x - c, axis=1).mean()
    s = np.sqrt(2.0) / d if d > 1e-12 else 1.0
    T = np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1.0]])
    return (x - c) * s, T


def _triangulate_in_front(R: np.ndarray, t: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> float:
    """Fraction of correspondences whose midpoint triangulation lands in front
    of both cameras. Near-parallel ray pairs count as not-in-front."""
    d1 = np.concatenate([x1, np.ones((len(x1), 1))], axis=1)
    d1 /= np.linalg.norm(d1, axis=1, keepdims=True)
    d2 = np.concatenate([x2, np.ones((len(x2), 1))], axis=1) @ R  # rows: R.T @ ray
    d2 /= np.linalg.norm(d2, axis=1, keepdims=True)
    C = -R.T @ t  # second camera center in first-camera coordinates
    w0 = -C[None, :]
    b = np.sum(d1 * d2, axis=1)
    dd = np.sum(d1 * w0, axis=1)
    e = np.sum(d2 * w0, axis=1)
    denom = 1.0 - b * b
    ok = denom > 1e-12
    s = np.zeros(len(b))
    u = np.zeros(len(b))
    s[ok] = (b[ok] * e[ok] - dd[ok]) / denom[ok]
    u[ok] = (e[ok] - b[ok] * dd[ok]) / denom[ok]
    X = 0.5 * (s[:, None] * d1 + C[None, :] + u[:, None] * d2)
    z1 = X[:, 2]
    z2 = (X @ R.T + t)[:, 2]
    in_front = ok & (z1 > 0) & (z2 > 0)
    return float(in_front.mean())


def estimate_relative_pose_8pt(corr: CorrespondenceSet) -> RelPose:
    """Eight-point essential-matrix estimate of the relative pose.

    Pixel coordinates are mapped through the intrinsics, Hartley-normalized,
    the least-squares epipolar constraint solved by SVD, the result projected
    onto the essential manifold, and the four (R, +-t) decompositions ranked
    by how many midpoint-triangulated points land in front of both cameras.
    A best in-front fraction under 0.75 raises DegenerateConfiguration.
    """
    if len(corr) < 8:
        raise TooFewCorrespondences(f"need >= 8 correspondences, got {len(corr)}")
    it = corr.intrinsics
    f = np.array([it.fx, it.fy])
    c = np.array([it.cx, it.cy])
    x1 = (corr.uv1 - c) / f
    x2 = (corr.uv2 - c) / f
    n1, T1 = _hartley_normalize(x1)
    n2, T2 = _hartley_normalize(x2)

    A = np.column_stack(
        [
            n2[:, 0] * n1[:, 0], n2[:, 0] * n1[:, 1], n2[:, 0],
            n2[:, 1] * n1[:, 0], n2[:, 1] * n1[:, 1], n2[:, 1],
            n1[:, 0], n1[:, 1], np.ones(len(n1)),
        ]
    )
    _, _, Vt = np.linalg.svd(A, full_matrices=False)
    E = T2.T @ Vt[-1].reshape(3, 3) @ T1

    U, S, Vt = np.linalg.svd(E)
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    Ra = U @ W @ Vt
    Rb = U @ W.T @ Vt
    t = U[:, 2]

    step = max(1, len(corr) // _CHEIRALITY_SAMPLE)
    s1, s2 = x1[::step], x2[::step]
    best = None
    best_frac = -1.0
    for R, tt in ((Ra, t), (Ra, -t), (Rb, t), (Rb, -t)):
        frac = _triangulate_in_front(R, tt, s1, s2)
        if frac > best_frac:
            best_frac = frac
            best = (R, tt)
    if best_frac < _CHEIRALITY_MIN_FRACTION:
        raise DegenerateConfiguration(
            f"best cheirality fraction {best_frac:.3f} < {_CHEIRALITY_MIN_FRACTION}"
        )
    R, tt = best
    return RelPose(q=quat_from_matrix(R), t_dir=tt)


def _check_quats(q: np.ndarray, name: str) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != 4:
        raise ValueError(f"{name} must be (T, 4), got {q.shape}")
    norms = np.linalg.norm(q, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise NonUnitQuaternion(f"{name} contains non-unit quaternions")
    return q / norms[:, None]


def rot_err(gen_q: np.ndarray, gt_q: np.ndarray) -> float:
    """Rotation error in degrees: arccos of the mean per-frame |<q_gen, q_gt>|.

    The absolute value folds the quaternion double cover (q and -q are the
    same rotation)."""
    a = _check_quats(gen_q, "gen_q")
    b = _check_quats(gt_q, "gt_q")
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"{a.shape[0]} vs {b.shape[0]} frames")
    if a.shape[0] < 1:
        raise ValueError("need at least one frame")
    dots = np.abs(np.sum(a * b, axis=1))
    return float(np.degrees(np.arccos(np.clip(dots.mean(), -1.0, 1.0))))


def trans_err(gen_t: np.ndarray, gt_t: np.ndarray) -> float:
    """Translation direction error in degrees: arccos of the mean per-frame
    dot of unit translation vectors. Frames where either side has norm under
    1e-6 (no measurable baseline) are excluded; if none survive, 0.0."""
    a = np.asarray(gen_t, dtype=np.float64)
    b = np.asarray(gt_t, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3 or b.ndim != 2 or b.shape[1] != 3:
        raise ValueError(f"translations must be (T, 3), got {a.shape} and {b.shape}")
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"{a.shape[0]} vs {b.shape[0]} frames")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    keep = (na >= 1e-6) & (nb >= 1e-6)
    if not keep.any():
        return 0.0
    dots = np.sum((a[keep] / na[keep, None]) * (b[keep] / nb[keep, None]), axis=1)
    return float(np.degrees(np.arccos(np.clip(dots.mean(), -1.0, 1.0))))


def _frames_array(video) -> np.ndarray:
    frames = getattr(video, "frames", video)
    f = np.asarray(frames)
    if f.ndim != 4 or f.shape[3] != 3:
        raise ValueError(f"video must be (T, H, W, 3), got {f.shape}")
    return f


def psnr(a, b) -> float:
    """Mean per-frame PSNR in dB for 8-bit video, capped at 99 dB.

    Identical frames (MSE 0) contribute exactly the cap."""
    fa, fb = _frames_array(a), _frames_array(b)
    if fa.shape != fb.shape:
        raise DimensionMismatch(f"video shapes differ: {fa.shape} vs {fb.shape}")
    vals = []
    for i in range(fa.shape[0]):
        mse = np.mean((fa[i].astype(np.float64) - fb[i].astype(np.float64)) ** 2)
        if mse == 0.0:
            vals.append(PSNR_CAP_DB)
        else:
            vals.append(min(10.0 * np.log10(255.0**2 / mse), PSNR_CAP_DB))
    return float(np.mean(vals))


def _luma(frame: np.ndarray) -> np.ndarray:
    f = frame.astype(np.float64)
    return 0.299 * f[:, :, 0] + 0.587 * f[:, :, 1] + 0.114 * f[:, :, 2]


def _gaussian_kernel(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _windowed_mean(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    r = (len(k) - 1) // 2
    out = correlate1d(img, k, axis=0, mode="constant")
    out = correlate1d(out, k, axis=1, mode="constant")
    return out[r:-r, r:-r]  # valid region only


def ssim(a, b) -> float:
    """Mean SSIM over frames on the Rec.601 luma plane.

    11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, L=255; the map is
    averaged over the valid (fully windowed) region of each frame."""
    fa, fb = _frames_array(a), _frames_array(b)
    if fa.shape != fb.shape:
        raise DimensionMismatch(f"video shapes differ: {fa.shape} vs {fb.shape}")
    if fa.shape[1] < 11 or fa.shape[2] < 11:
        raise DimensionMismatch(f"frames must be at least 11x11, got {fa.shape[1]}x{fa.shape[2]}")
    k = _gaussian_kernel()
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    vals = []
    for i in range(fa.shape[0]):
        x = _luma(fa[i])
        y = _luma(fb[i])
        mx = _windowed_mean(x, k)
        my = _windowed_mean(y, k)
        mxx = _windowed_mean(x * x, k)
        myy = _windowed_mean(y * y, k)
        mxy = _windowed_mean(x * y, k)
        vx = mxx - mx * mx
        vy = myy - my * my
        cxy = mxy - mx * my
        num = (2 * mx * my + c1) * (2 * cxy + c2)
        den = (mx * mx + my * my + c1) * (vx + vy + c2)
        vals.append(np.mean(num / den))
    return float(np.mean(vals))


def pose_errors(gen_q, gt_q, gen_t, gt_t) -> PoseErrors:
    """Bundle rot_err and trans_err over aligned per-frame arrays."""
    a = np.asarray(gen_t, dtype=np.float64)
    b = np.asarray(gt_t, dtype=np.float64)
    keep = (np.linalg.norm(a, axis=1) >= 1e-6) & (np.linalg.norm(b, axis=1) >= 1e-6)
    return PoseErrors(
        rot_err_deg=rot_err(gen_q, gt_q),
        trans_err_deg=trans_err(gen_t, gt_t),
        frames_used=int(keep.sum()),
    )
