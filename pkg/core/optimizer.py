"""SGD with (Nesterov) momentum and a step-decay learning-rate schedule."""

from dataclasses import dataclass, field
from typing import Dict, Iterable

import numpy as np

from core.errors import ContractError
from core.tensor import Parameter
from models.config import TrainConfig


@dataclass
class OptimizerState:
    """Velocities by Parameter id, created as zeros on first use."""
    momentum: float = 0.9
    weight_decay: float = 0.0
    nesterov: bool = True
    velocities: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_config(cls, config: TrainConfig) -> 'OptimizerState':
        return cls(config.momentum, config.weight_decay, config.nesterov)

    def velocity(self, param: Parameter) -> np.ndarray:
        if param.id not in self.velocities:
            self.velocities[param.id] = np.zeros_like(param.data)
        v = self.velocities[param.id]
        if v.shape != param.grad.shape:
            raise ContractError(f"parameter {param.id}: velocity {v.shape} vs grad {param.grad.shape}")
        return v


def sgd_nesterov_step(params: Iterable[Parameter], state: OptimizerState, lr: float):
    """
    g <- g + wd*w;  v <- mu*v + g;
    w <- w - lr*(g + mu*v)  (nesterov)   or   w <- w - lr*v.
    """
    mu = state.momentum
    for p in params:
        if p.grad is None or p.grad.shape != p.data.shape:
            raise ContractError(f"parameter {p.id}: gradient missing or misshaped")
        g = p.grad + state.weight_decay * p.data if state.weight_decay else p.grad
        v = state.velocity(p)
        v = mu * v + g
        state.velocities[p.id] = v
        step = g + mu * v if state.nesterov else v
        p.data = (p.data - lr * step).astype(p.data.dtype, copy=False)


def lr_at(epoch: int, config: TrainConfig) -> float:
    if epoch < 0:
        raise ContractError(f"epoch must be >= 0, got {epoch}")
    decays = sum(1 for e in config.lr_decay_epochs if e <= epoch)
    return config.base_lr * config.lr_decay_factor ** decays
