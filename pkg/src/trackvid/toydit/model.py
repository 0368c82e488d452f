"""Miniature pre-norm transformer with a zero-initialized side branch.

The base network is a stack of attention + MLP blocks; attaching a condition
branch copies the first k blocks, runs them on the condition tokens, and adds
each copied block's output into the base stream through a zero-initialized
linear injector. With injectors at zero the conditioned pass reproduces the
unconditioned one bit for bit; training then only ever touches the branch.

Everything is float64 numpy with hand-written backward passes so gradients
can be verified against central differences to near machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy.special import erf

from ..errors import BadConfig, NotAttached

INIT_STD = 0.02
_LN_EPS = 1e-5
_SQRT1_2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class ToyDiTConfig:
    """Structural hyperparameters; defaults keep a training step in the
    low-millisecond range while preserving the full block anatomy."""

    n_blocks: int = 7
    k_copied: int = 3
    width: int = 32
    heads: int = 4
    tokens: int = 16
    mlp_ratio: int = 4
    timesteps: int = 1000
    grad_accum: int = 1
    final_norm: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_blocks < 1:
            raise BadConfig(f"n_blocks must be >= 1, got {self.n_blocks}")
        if not 1 <= self.k_copied <= self.n_blocks:
            raise BadConfig(
                f"k_copied must be in [1, {self.n_blocks}], got {self.k_copied}"
            )
        if self.heads < 1 or self.width % self.heads:
            raise BadConfig(f"width {self.width} not divisible by heads {self.heads}")
        if self.width % 2:
            raise BadConfig("width must be even for the sinusoidal time embedding")
        if self.tokens < 1:
            raise BadConfig(f"tokens must be >= 1, got {self.tokens}")
        if self.mlp_ratio < 1:
            raise BadConfig(f"mlp_ratio must be >= 1, got {self.mlp_ratio}")
        if self.timesteps < 1:
            raise BadConfig(f"timesteps must be >= 1, got {self.timesteps}")
        if self.grad_accum < 1:
            raise BadConfig(f"grad_accum must be >= 1, got {self.grad_accum}")


class ToyDiT:
    """Mutable parameter container: params is a flat name -> float64 array
    dict; base.* / embed.* / head.* / final_ln.* are frozen, cond.* / inj.*
    are the trainable branch (present only after attach_condition_branch)."""

    def __init__(self, config: ToyDiTConfig, params: Dict[str, np.ndarray], alpha_bar: np.ndarray):
        self.config = config
        self.params = params
        self.alpha_bar = alpha_bar
        self.attached = False

    def trainable_keys(self):
        return sorted(k for k in self.params if k.startswith(("cond.", "inj.")))

    def frozen_keys(self):
        return sorted(k for k in self.params if not k.startswith(("cond.", "inj.")))


def _block_params(rng: np.random.Generator, d: int, mlp_ratio: int) -> Dict[str, np.ndarray]:
    hidden = d * mlp_ratio
    p = {"ln1.g": np.ones(d), "ln1.b": np.zeros(d)}
    for name in ("wq", "wk", "wv", "wo"):
        p[name] = rng.normal(0.0, INIT_STD, (d, d))
        p["b" + name[1]] = np.zeros(d)
    p["ln2.g"] = np.ones(d)
    p["ln2.b"] = np.zeros(d)
    p["w1"] = rng.normal(0.0, INIT_STD, (d, hidden))
    p["b1"] = np.zeros(hidden)
    p["w2"] = rng.normal(0.0, INIT_STD, (hidden, d))
    p["b2"] = np.zeros(d)
    return p


def init(config: ToyDiTConfig) -> ToyDiT:
    """Fresh base model: matrices ~ N(0, 0.02), biases zero, LN gains one.

    The noise schedule is linear in alpha_bar: 1 - (t+1)/(S+1), strictly
    decreasing and inside (0, 1) for t = 0..S-1.
    """
    rng = np.random.default_rng(config.seed)
    d = config.width
    params: Dict[str, np.ndarray] = {
        "embed.w": rng.normal(0.0, INIT_STD, (d, d)),
        "embed.b": np.zeros(d),
    }
    for j in range(config.n_blocks):
        for name, val in _block_params(rng, d, config.mlp_ratio).items():
            params[f"base.{j}.{name}"] = val
    params["final_ln.g"] = np.ones(d)
    params["final_ln.b"] = np.zeros(d)
    params["head.w"] = rng.normal(0.0, INIT_STD, (d, d))
    params["head.b"] = np.zeros(d)
    s = config.timesteps
    alpha_bar = 1.0 - (np.arange(s, dtype=np.float64) + 1.0) / (s + 1.0)
    alpha_bar.setflags(write=False)
    return ToyDiT(config, params, alpha_bar)


def attach_condition_branch(model: ToyDiT) -> ToyDiT:
    """Copy base blocks 0..k-1 into the condition branch (bit-exact copies)
    and create the k zero injectors. Idempotent re-attach resets the branch."""
    cfg = model.config
    d = cfg.width
    for j in range(cfg.k_copied):
        prefix = f"base.{j}."
        for key in [k for k in model.params if k.startswith(prefix)]:
            model.params["cond." + key[len("base."):]] = model.params[key].copy()
        model.params[f"inj.{j}.w"] = np.zeros((d, d))
        model.params[f"inj.{j}.b"] = np.zeros(d)
    model.attached = True
    return model


# --- primitive forward/backward ops -------------------------------------------


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x * _SQRT1_2))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(x * _SQRT1_2)) + x * np.exp(-0.5 * x * x) * _INV_SQRT_2PI


def _linear_bwd(dy: np.ndarray, x: np.ndarray, w: np.ndarray) -> tuple:
    dx = dy @ w.T
    dw = x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])
    db = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    return dx, dw, db


def _ln_fwd(x: np.ndarray, g: np.ndarray, b: np.ndarray) -> tuple:
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv)


def _ln_bwd(dy: np.ndarray, g: np.ndarray, cache: tuple) -> tuple:
    xhat, inv = cache
    dg = (dy * xhat).reshape(-1, dy.shape[-1]).sum(axis=0)
    db = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    dxhat = dy * g
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = inv * (dxhat - m1 - xhat * m2)
    return dx, dg, db


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    b, l, d = x.shape
    return x.reshape(b, l, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    b, h, l, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, l, h * dh)


def _attn_fwd(x: np.ndarray, p: dict, pre: str, heads: int) -> tuple:
    q = x @ p[pre + "wq"] + p[pre + "bq"]
    k = x @ p[pre + "wk"] + p[pre + "bk"]
    v = x @ p[pre + "wv"] + p[pre + "bv"]
    qh, kh, vh = (_split_heads(a, heads) for a in (q, k, v))
    scale = 1.0 / np.sqrt(qh.shape[-1])
    scores = qh @ kh.transpose(0, 1, 3, 2) * scale
    scores -= scores.max(axis=-1, keepdims=True)
    e = np.exp(scores)
    attn = e / e.sum(axis=-1, keepdims=True)
    ctx = _merge_heads(attn @ vh)
    y = ctx @ p[pre + "wo"] + p[pre + "bo"]
    return y, (x, q, k, v, attn, ctx, scale)


def _attn_bwd(dy: np.ndarray, p: dict, pre: str, heads: int, cache: tuple, grads: dict) -> np.ndarray:
    x, q, k, v, attn, ctx, scale = cache
    dctx, dwo, dbo = _linear_bwd(dy, ctx, p[pre + "wo"])
    _acc(grads, pre + "wo", dwo)
    _acc(grads, pre + "bo", dbo)
    dctx_h = _split_heads(dctx, heads)
    kh, vh, qh = _split_heads(k, heads), _split_heads(v, heads), _split_heads(q, heads)
    dattn = dctx_h @ vh.transpose(0, 1, 3, 2)
    dvh = attn.transpose(0, 1, 3, 2) @ dctx_h
    ds = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
    ds *= scale
    dqh = ds @ kh
    dkh = ds.transpose(0, 1, 3, 2) @ qh
    dq, dk, dv = _merge_heads(dqh), _merge_heads(dkh), _merge_heads(dvh)
    dx = np.zeros_like(x)
    for dout, wname, bname, inp in (
        (dq, "wq", "bq", x),
        (dk, "wk", "bk", x),
        (dv, "wv", "bv", x),
    ):
        dxi, dw, db = _linear_bwd(dout, inp, p[pre + wname])
        dx += dxi
        _acc(grads, pre + wname, dw)
        _acc(grads, pre + bname, db)
    return dx


def _block_fwd(x: np.ndarray, p: dict, pre: str, heads: int) -> tuple:
    n1, c1 = _ln_fwd(x, p[pre + ".ln1.g"], p[pre + ".ln1.b"])
    a, ca = _attn_fwd(n1, p, pre + ".", heads)
    x1 = x + a
    n2, c2 = _ln_fwd(x1, p[pre + ".ln2.g"], p[pre + ".ln2.b"])
    z = n2 @ p[pre + ".w1"] + p[pre + ".b1"]
    gz = _gelu(z)
    out = x1 + gz @ p[pre + ".w2"] + p[pre + ".b2"]
    return out, (c1, ca, c2, n2, z, gz)


def _block_bwd(dout: np.ndarray, p: dict, pre: str, heads: int, cache: tuple, grads: dict) -> np.ndarray:
    c1, ca, c2, n2, z, gz = cache
    dgz, dw2, db2 = _linear_bwd(dout, gz, p[pre + ".w2"])
    _acc(grads, pre + ".w2", dw2)
    _acc(grads, pre + ".b2", db2)
    dz = dgz * _gelu_grad(z)
    dn2, dw1, db1 = _linear_bwd(dz, n2, p[pre + ".w1"])
    _acc(grads, pre + ".w1", dw1)
    _acc(grads, pre + ".b1", db1)
    dx1_ln, dg2, dbg2 = _ln_bwd(dn2, p[pre + ".ln2.g"], c2)
    _acc(grads, pre + ".ln2.g", dg2)
    _acc(grads, pre + ".ln2.b", dbg2)
    dx1 = dout + dx1_ln
    dn1 = _attn_bwd(dx1, p, pre + ".", heads, ca, grads)
    dx_ln, dg1, dbg1 = _ln_bwd(dn1, p[pre + ".ln1.g"], c1)
    _acc(grads, pre + ".ln1.g", dg1)
    _acc(grads, pre + ".ln1.b", dbg1)
    return dx1 + dx_ln


def _acc(grads: dict, key: str, val: np.ndarray) -> None:
    if key in grads:
        grads[key] = grads[key] + val
    else:
        grads[key] = val


def timestep_embedding(t: int, d: int) -> np.ndarray:
    half = d // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half, dtype=np.float64) / half)
    ang = float(t) * freqs
    return np.concatenate([np.cos(ang), np.sin(ang)])


def _to3d(x: np.ndarray) -> tuple:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 2:
        return a[None], True
    if a.ndim == 3:
        return a, False
    raise ValueError(f"tokens must be (L, d) or (B, L, d), got {a.shape}")


def _apply(model: ToyDiT, tokens, cond, timestep: int) -> tuple:
    """Shared forward; returns (output, cache) with cache holding everything
    backward() needs. cond=None runs the plain base stack."""
    cfg = model.config
    p = model.params
    x3, squeezed = _to3d(tokens)
    if x3.shape[1:] != (cfg.tokens, cfg.width):
        raise ValueError(
            f"tokens must be (..., {cfg.tokens}, {cfg.width}), got {x3.shape}"
        )
    if not 0 <= int(timestep) < cfg.timesteps:
        raise ValueError(f"timestep {timestep} outside [0, {cfg.timesteps})")
    temb = timestep_embedding(int(timestep), cfg.width)

    h = x3 @ p["embed.w"] + p["embed.b"] + temb
    cache = {"x": x3, "blocks": [], "cond_blocks": [], "inj_in": [], "squeezed": squeezed}
    c = None
    if cond is not None:
        if not model.attached:
            raise NotAttached("attach_condition_branch before a conditioned pass")
        c3, _ = _to3d(cond)
        if c3.shape != x3.shape:
            raise ValueError(f"cond shape {c3.shape} must match tokens {x3.shape}")
        c = c3 + temb
    for j in range(cfg.n_blocks):
        h, bc = _block_fwd(h, p, f"base.{j}", cfg.heads)
        cache["blocks"].append(bc)
        if c is not None and j < cfg.k_copied:
            c, cc = _block_fwd(c, p, f"cond.{j}", cfg.heads)
            cache["cond_blocks"].append(cc)
            cache["inj_in"].append(c)
            h = h + (c @ p[f"inj.{j}.w"] + p[f"inj.{j}.b"])
    if cfg.final_norm:
        hn, cf = _ln_fwd(h, p["final_ln.g"], p["final_ln.b"])
    else:
        hn, cf = h, None
    cache["final"] = cf
    cache["hn"] = hn
    y = hn @ p["head.w"] + p["head.b"]
    return (y[0] if squeezed else y), cache


def forward_base(model: ToyDiT, tokens, timestep: int) -> np.ndarray:
    """Unconditioned denoising pass."""
    y, _ = _apply(model, tokens, None, timestep)
    return y


def forward_conditioned(model: ToyDiT, tokens, cond_tokens, timestep: int) -> np.ndarray:
    """Conditioned pass: condition blocks transform cond_tokens and inject
    into the base stream after each of the first k base blocks."""
    y, _ = _apply(model, tokens, cond_tokens, timestep)
    return y


def backward(model: ToyDiT, cache: dict, dy) -> Dict[str, np.ndarray]:
    """Gradients of a scalar loss wrt every parameter touched by the cached
    forward, given dL/d(output)."""
    cfg = model.config
    p = model.params
    dy3 = dy[None] if cache["squeezed"] else dy
    dhn, dwh, dbh = _linear_bwd(dy3, cache["hn"], p["head.w"])
    grads: Dict[str, np.ndarray] = {"head.w": dwh, "head.b": dbh}
    if cfg.final_norm:
        dh, dgf, dbf = _ln_bwd(dhn, p["final_ln.g"], cache["final"])
        grads["final_ln.g"] = dgf
        grads["final_ln.b"] = dbf
    else:
        dh = dhn
    conditioned = bool(cache["cond_blocks"])
    dc_from_inj = [None] * cfg.k_copied
    for j in reversed(range(cfg.n_blocks)):
        if conditioned and j < cfg.k_copied:
            cj = cache["inj_in"][j]
            dcj, dwi, dbi = _linear_bwd(dh, cj, p[f"inj.{j}.w"])
            grads[f"inj.{j}.w"] = dwi
            grads[f"inj.{j}.b"] = dbi
            dc_from_inj[j] = dcj
        dh = _block_bwd(dh, p, f"base.{j}", cfg.heads, cache["blocks"][j], grads)
    if conditioned:
        dc = None
        for j in reversed(range(cfg.k_copied)):
            dc = dc_from_inj[j] if dc is None else dc + dc_from_inj[j]
            dc = _block_bwd(dc, p, f"cond.{j}", cfg.heads, cache["cond_blocks"][j], grads)
    _, dwe, dbe = _linear_bwd(dh, cache["x"], p["embed.w"])
    grads["embed.w"] = dwe
    grads["embed.b"] = dbe
    return grads
