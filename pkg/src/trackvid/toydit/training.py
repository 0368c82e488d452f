"""Training loop pieces for the conditioned toy model.

Only the condition branch (cond.* and inj.*) ever receives optimizer updates;
the base network stays frozen, which the tests verify bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..errors import NotAttached
from .model import ToyDiT, ToyDiTConfig, _apply, attach_condition_branch, backward, init


@dataclass
class TrainState:
    """AdamW moments + gradient-accumulation buffer for the trainable keys."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    accum: Dict[str, np.ndarray] = field(default_factory=dict)
    accum_count: int = 0
    losses: List[float] = field(default_factory=list)


def init_train_state(model: ToyDiT, lr: float = 1e-4, weight_decay: float = 0.01) -> TrainState:
    """Optimizer state covering exactly the trainable (branch) parameters."""
    if not model.attached:
        raise NotAttached("attach_condition_branch before creating train state")
    state = TrainState(lr=lr, weight_decay=weight_decay)
    for k in model.trainable_keys():
        state.m[k] = np.zeros_like(model.params[k])
        state.v[k] = np.zeros_like(model.params[k])
    return state


def _adamw_update(model: ToyDiT, state: TrainState, grads: Dict[str, np.ndarray]) -> None:
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for k in model.trainable_keys():
        g = grads[k]
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        mhat = state.m[k] / bc1
        vhat = state.v[k] / bc2
        p = model.params[k]
        model.params[k] = p - state.lr * (mhat / (np.sqrt(vhat) + state.eps) + state.weight_decay * p)


def train_step(
    model: ToyDiT,
    state: TrainState,
    batch: tuple,
    rng: np.random.Generator,
    noise: Optional[np.ndarray] = None,
) -> float:
    """One noise-prediction step: draw a timestep, corrupt x0, predict the
    noise from (x_t, cond, t), and push the MSE gradient through AdamW.

    Updates apply once per grad_accum calls (averaged); base parameters are
    never written. Pass `noise` to pin the corruption instead of sampling it.
    """
    if not model.attached:
        raise NotAttached("attach_condition_branch before training")
    x0, cond = batch
    x0 = np.asarray(x0, dtype=np.float64)
    cond = np.asarray(cond, dtype=np.float64)
    if cond.shape != x0.shape:
        raise ValueError(f"cond shape {cond.shape} must match x0 {x0.shape}")
    t = int(rng.integers(model.config.timesteps))
    if noise is None:
        eps = rng.standard_normal(x0.shape)
    else:
        eps = np.asarray(noise, dtype=np.float64)
        if eps.shape != x0.shape:
            raise ValueError(f"noise shape {eps.shape} must match x0 {x0.shape}")
    ab = model.alpha_bar[t]
    xt = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps

    pred, cache = _apply(model, xt, cond, t)
    diff = pred - eps
    loss = float(np.mean(diff * diff))
    grads = backward(model, cache, 2.0 * diff / diff.size)

    for k in model.trainable_keys():
        if k in state.accum:
            state.accum[k] = state.accum[k] + grads[k]
        else:
            state.accum[k] = grads[k]
    state.accum_count += 1
    if state.accum_count >= model.config.grad_accum:
        scale = 1.0 / state.accum_count
        _adamw_update(model, state, {k: v * scale for k, v in state.accum.items()})
        state.accum = {}
        state.accum_count = 0
    state.losses.append(loss)
    return loss


def grad_check(
    model: ToyDiT,
    eps: float = 1e-4,
    max_coords_per_group: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Checks every trainable parameter group on a fixed (seeded) batch and
    timestep, sampling at most max_coords_per_group coordinates per group.
    Relative error is |ga - gn| / max(|ga|, |gn|, 1e-8).
    """
    if not model.attached:
        raise NotAttached("attach_condition_branch before grad check")
    cfg = model.config
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal((cfg.tokens, cfg.width))
    cond = rng.standard_normal((cfg.tokens, cfg.width))
    # small target keeps the loss ~1e-2 so the 1e-16-per-ulp cancellation in
    # (lp - lm) stays orders of magnitude below even near-zero gradients
    noise = 0.1 * rng.standard_normal((cfg.tokens, cfg.width))
    t = cfg.timesteps // 2
    ab = model.alpha_bar[t]
    xt = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise

    def loss_fn() -> float:
        y, _ = _apply(model, xt, cond, t)
        return float(np.mean((y - noise) ** 2))

    pred, cache = _apply(model, xt, cond, t)
    grads = backward(model, cache, 2.0 * (pred - noise) / pred.size)

    worst = 0.0
    for key in model.trainable_keys():
        flat = model.params[key].reshape(-1)
        ga_flat = grads[key].reshape(-1)
        n = min(flat.size, max_coords_per_group)
        idx = rng.choice(flat.size, size=n, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            lp = loss_fn()
            flat[i] = orig - eps
            lm = loss_fn()
            flat[i] = orig
            gn = (lp - lm) / (2.0 * eps)
            ga = float(ga_flat[i])
            rel = abs(ga - gn) / max(abs(ga), abs(gn), 1e-8)
            worst = max(worst, rel)
    return worst


# --- synthetic conditioning task ------------------------------------------------

NOISE_SCALE = 0.1
_TASK_BATCH = 8


def run_synthetic_training(
    config: Optional[ToyDiTConfig] = None,
    steps: int = 500,
    seed: int = 0,
    lr: float = 1e-4,
) -> List[float]:
    """Train a fresh branch on noise the condition tokens fully reveal.

    Per step: cond is a standard-normal pattern, the injected noise is
    NOISE_SCALE * cond, x0 is independent noise. The branch can cut the loss
    both by predicting the revealed noise and by suppressing the base
    network's output; with zero injectors neither happens, so the loss curve
    directly measures whether conditioning signal flows. Returns the
    per-step losses.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    model = attach_condition_branch(init(config or ToyDiTConfig()))
    state = init_train_state(model, lr=lr)
    cfg = model.config
    rng = np.random.default_rng(seed)
    losses = []
    for _ in range(steps):
        pattern = rng.standard_normal((_TASK_BATCH, cfg.tokens, cfg.width))
        x0 = rng.standard_normal((_TASK_BATCH, cfg.tokens, cfg.width))
        losses.append(
            train_step(model, state, (x0, pattern), rng, noise=NOISE_SCALE * pattern)
        )
    return losses
