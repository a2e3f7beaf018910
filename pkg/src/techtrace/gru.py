"""Gated recurrent unit, hand-rolled with exact backprop through time.

Update rule (no bias terms by default, switchable):

    z = sigmoid(x W_xz^T + h W_uz^T)
    r = sigmoid(x W_xr^T + h W_ur^T)
    g = tanh(x W_xu^T + r * (h W_uu^T))
    h' = (1 - z) * g + z * h

All step functions are batched: x and h are (B, d) row matrices.
"""
from __future__ import annotations

import numpy as np

GRU_WEIGHTS = ("W_xz", "W_uz", "W_xr", "W_ur", "W_xu", "W_uu")
GRU_BIASES = ("b_z", "b_r", "b_u")


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def init_gru_params(d: int, rng: np.random.Generator, biases: bool = False) -> dict[str, np.ndarray]:
    p = {name: rng.uniform(-0.3, 0.3, size=(d, d)) for name in GRU_WEIGHTS}
    if biases:
        p.update({name: rng.uniform(-0.3, 0.3, size=d) for name in GRU_BIASES})
    return p


def gru_step(params: dict[str, np.ndarray], h_prev: np.ndarray, x: np.ndarray):
    """One step; returns (h_next, step_cache)."""
    if x.shape != h_prev.shape or x.shape[-1] != params["W_xz"].shape[0]:
        raise ValueError(
            f"dimension mismatch: x {x.shape}, h {h_prev.shape}, W {params['W_xz'].shape}"
        )
    b_z = params.get("b_z", 0.0)
    b_r = params.get("b_r", 0.0)
    b_u = params.get("b_u", 0.0)
    z = sigmoid(x @ params["W_xz"].T + h_prev @ params["W_uz"].T + b_z)
    r = sigmoid(x @ params["W_xr"].T + h_prev @ params["W_ur"].T + b_r)
    c = h_prev @ params["W_uu"].T
    g = np.tanh(x @ params["W_xu"].T + r * c + b_u)
    h_next = (1.0 - z) * g + z * h_prev
    return h_next, (x, h_prev, z, r, c, g)


def gru_forward(params: dict[str, np.ndarray], xs: np.ndarray):
    """Unroll over a sequence; xs is (T_in, B, d), h^1 = 0.

    Returns (h_final (B, d), caches) where caches drive `gru_backward`.
    """
    t_in, b, d = xs.shape
    h = np.zeros((b, d), dtype=xs.dtype)
    caches = []
    for t in range(t_in):
        h, cache = gru_step(params, h, xs[t])
        caches.append(cache)
    return h, caches


def gru_backward(params: dict[str, np.ndarray], caches, dh_final: np.ndarray):
    """BPTT from a gradient on the final hidden state.

    Returns (param grads, dxs (T_in, B, d)).
    """
    grads = {name: np.zeros_like(p) for name, p in params.items()}
    has_bias = "b_z" in params
    dxs = np.empty((len(caches),) + dh_final.shape, dtype=dh_final.dtype)
    dh = dh_final
    for t in range(len(caches) - 1, -1, -1):
        x, h_prev, z, r, c, g = caches[t]
        dz = dh * (h_prev - g)
        dg = dh * (1.0 - z)
        dh_prev = dh * z
        da_u = dg * (1.0 - g * g)
        dr = da_u * c
        dc = da_u * r
        da_z = dz * z * (1.0 - z)
        da_r = dr * r * (1.0 - r)
        grads["W_xz"] += da_z.T @ x
        grads["W_uz"] += da_z.T @ h_prev
        grads["W_xr"] += da_r.T @ x
        grads["W_ur"] += da_r.T @ h_prev
        grads["W_xu"] += da_u.T @ x
        grads["W_uu"] += dc.T @ h_prev
        if has_bias:
            grads["b_z"] += da_z.sum(axis=0)
            grads["b_r"] += da_r.sum(axis=0)
            grads["b_u"] += da_u.sum(axis=0)
        dxs[t] = da_z @ params["W_xz"] + da_r @ params["W_xr"] + da_u @ params["W_xu"]
        dh = dh_prev + da_z @ params["W_uz"] + da_r @ params["W_ur"] + dc @ params["W_uu"]
    return grads, dxs
