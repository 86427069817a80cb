"""Adam optimizer over a dict of parameter arrays."""

from __future__ import annotations

import numpy as np

from freqplan.errors import NumericError


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale ``grads`` in place so their global norm is at most ``max_norm``."""
    norm = global_norm(grads)
    if norm > max_norm > 0:
        scale = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= scale
    return norm


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Bias-corrected update, in place. Raises NumericError before touching
        anything if a gradient is not finite."""
        for k, g in grads.items():
            if g.shape != params[k].shape:
                raise ValueError(f"gradient {k} has shape {g.shape}, parameter has {params[k].shape}")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient for {k}")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * np.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            params[k] -= (lr_t * m / (np.sqrt(v) + self.eps)).astype(params[k].dtype)


def adam_update(params, grads, state: Adam):
    state.step(params, grads)
    return params
