"""Adagrad with decoupled-into-gradient weight decay.

Update per parameter matrix: g <- grad + wd * p, acc <- acc + g*g,
p <- p - lr * g / (sqrt(acc) + eps). Accumulators never decrease, so the
effective step size shrinks over time coordinate-wise.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError, DimensionError


class Adagrad:
    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float,
        weight_decay: float = 0.0,
        eps: float = 1e-10,
    ):
        if lr < 0:
            raise ConfigError(f"learning rate must be >= 0, got {lr}")
        self.params = params
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)
        self.eps = float(eps)
        self.acc = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        """Apply one update in place. Missing names are treated as zero grads."""
        for name, p in self.params.items():
            g = grads.get(name)
            if g is None:
                g = np.zeros_like(p)
            if g.shape != p.shape:
                raise DimensionError(
                    f"adagrad: grad {g.shape} vs param {p.shape} for '{name}'"
                )
            if self.weight_decay:
                g = g + self.weight_decay * p
            self.acc[name] += g * g
            p -= self.lr * g / (np.sqrt(self.acc[name]) + self.eps)
