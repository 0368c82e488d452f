"""Toy zero-init conditioning simulator: model plus training utilities."""

from .model import (
    ToyDiT,
    ToyDiTConfig,
    attach_condition_branch,
    backward,
    forward_base,
    forward_conditioned,
    init,
    timestep_embedding,
)
from .training import (
    NOISE_SCALE,
    TrainState,
    grad_check,
    init_train_state,
    run_synthetic_training,
    train_step,
)

__all__ = [
    "ToyDiT",
    "ToyDiTConfig",
    "attach_condition_branch",
    "backward",
    "forward_base",
    "forward_conditioned",
    "init",
    "timestep_embedding",
    "NOISE_SCALE",
    "TrainState",
    "grad_check",
    "init_train_state",
    "run_synthetic_training",
    "train_step",
]
