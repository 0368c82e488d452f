import io
import struct

import hypothesis
import numpy as np
import pytest
from PIL import Image

hypothesis.settings.register_profile(
    "ci",
    deadline=None,
    max_examples=40,
    suppress_health_check=[hypothesis.HealthCheck.too_slow],
)
hypothesis.settings.load_profile("ci")


def make_depth(h, w, seed=0, lo=2.0, hi=4.0):
    """Non-planar synthetic depth: smooth waves plus a little noise."""
    rng = np.random.default_rng(seed)
    v, u = np.mgrid[0:h, 0:w].astype(np.float64)
    d = lo + (hi - lo) * 0.5 * (1 + np.sin(u / 7.0) * np.cos(v / 5.0))
    d += rng.uniform(0.0, 0.1 * (hi - lo), size=(h, w))
    return np.clip(d, lo, hi)


def pfm_bytes(depth, little_endian=True):
    """Assemble PFM bytes by hand (independent of the package writer)."""
    h, w = depth.shape
    scale = "-1.0" if little_endian else "1.0"
    dt = "<f4" if little_endian else ">f4"
    # PFM stores the bottom row first
    return f"Pf\n{w} {h}\n{scale}\n".encode() + depth[::-1].astype(dt).tobytes()


def pgm_bytes(mask):
    h, w = mask.shape
    return f"P5\n{w} {h}\n255\n".encode() + (mask.astype(np.uint8) * 255).tobytes()


def png_bytes(arr):
    buf = io.BytesIO()
    Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(buf, format="PNG")
    return buf.getvalue()


def trk_bytes(positions, visibility=None):
    """Assemble track-file bytes by hand from the documented layout."""
    t, n, _ = positions.shape
    flags = 1 if visibility is not None else 0
    out = b"DAS3DTRK" + struct.pack("<IIII", 1, t, n, flags)
    out += np.asarray(positions, dtype="<f4").tobytes()
    if visibility is not None:
        out += np.asarray(visibility, dtype=np.uint8).tobytes()
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
