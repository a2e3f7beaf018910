"""Adadelta optimizer over named parameter dicts."""
from __future__ import annotations

import numpy as np


class Adadelta:
    """Adaptive learning-rate updates from running averages of squared
    gradients and squared parameter deltas."""

    def __init__(self, rho: float = 0.95, eps: float = 1e-6):
        if not 0.0 <= rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.rho = rho
        self.eps = eps
        self.sq_grad: dict[str, np.ndarray] = {}
        self.sq_delta: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, p in params.items():
            g = grads[name]
            eg = self.sq_grad.setdefault(name, np.zeros_like(p))
            ed = self.sq_delta.setdefault(name, np.zeros_like(p))
            eg *= self.rho
            eg += (1.0 - self.rho) * g * g
            delta = -np.sqrt(ed + self.eps) / np.sqrt(eg + self.eps) * g
            p += delta
            ed *= self.rho
            ed += (1.0 - self.rho) * delta * delta

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name, v in self.sq_grad.items():
            out[f"sq_grad.{name}"] = v
        for name, v in self.sq_delta.items():
            out[f"sq_delta.{name}"] = v
        return out

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        for key, v in arrays.items():
            kind, name = key.split(".", 1)
            if kind == "sq_grad":
                self.sq_grad[name] = v
            elif kind == "sq_delta":
                self.sq_delta[name] = v
            else:
                raise ValueError(f"unknown optimizer state key {key!r}")
