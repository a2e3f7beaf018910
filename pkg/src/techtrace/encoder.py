"""Convolutional patent-text encoder.

Tokens are hashed into embedding buckets (no external vocabulary),
padded/truncated to a fixed length, pushed through three stages of
1-D convolution + ReLU + max-pool (stride 2), mean-pooled over the
remaining positions, and linearly projected to the output dimension.

Forward and backward passes are hand-written in numpy; `backward`
returns exact analytic gradients for every parameter, which the test
suite checks against central finite differences.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

PAD_ID = -1


class EncoderConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    d0: int = 32  # word embedding dimension
    d1: int = 64  # token sequence length (pad/truncate)
    d2: int = 8  # patents sampled per entity-year
    d: int = 32  # output vector dimension
    window: int = 3
    channels: tuple[int, int, int] = (32, 32, 32)
    buckets: int = 2048
    seed: int = 0

    def validate(self) -> None:
        if min(self.d0, self.d1, self.d2, self.d, self.buckets) < 1:
            raise EncoderConfigError("all encoder dimensions must be >= 1")
        if len(self.channels) != 3:
            raise EncoderConfigError("exactly three convolution stages are required")
        if self.window < 1 or self.window % 2 == 0:
            raise EncoderConfigError("window must be odd")
        if self.d1 % 8 != 0:
            raise EncoderConfigError("d1 must be a multiple of 8 (three stride-2 pools)")


def token_bucket(token: str, buckets: int) -> int:
    """Stable hash bucket, identical across processes and platforms."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % buckets


class TextEncoder:
    def __init__(self, cfg: EncoderConfig):
        cfg.validate()
        self.cfg = cfg
        self._prefix_cache: dict[int, tuple[int | None]] = {}

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        cfg = self.cfg
        p: dict[str, np.ndarray] = {}
        p["emb"] = rng.uniform(-0.3, 0.3, size=(cfg.buckets, cfg.d0))
        c_in = cfg.d0
        for k, c_out in enumerate(cfg.channels, start=1):
            p[f"conv{k}_w"] = rng.uniform(-0.3, 0.3, size=(cfg.window, c_in, c_out))
            p[f"conv{k}_b"] = rng.uniform(-0.3, 0.3, size=c_out)
            c_in = c_out
        p["proj_w"] = rng.uniform(-0.3, 0.3, size=(cfg.channels[-1], cfg.d))
        p["proj_b"] = rng.uniform(-0.3, 0.3, size=cfg.d)
        return p

    def token_ids(self, tokens) -> np.ndarray:
        """Pad/truncate to d1; PAD_ID marks padding positions."""
        cfg = self.cfg
        ids = np.full(cfg.d1, PAD_ID, dtype=np.int64)
        for pos, tok in enumerate(tokens[: cfg.d1]):
            ids[pos] = token_bucket(tok, cfg.buckets)
        return ids

    @staticmethod
    def _windows(x_pad: np.ndarray, window: int, length: int) -> np.ndarray:
        # strided view (B, L, window, Cin) over x_pad (B, L + window - 1, Cin)
        b_sz, _, c_in = x_pad.shape
        s0, s1, s2 = x_pad.strides
        return np.lib.stride_tricks.as_strided(
            x_pad, shape=(b_sz, length, window, c_in), strides=(s0, s1, s1, s2)
        )

    @classmethod
    def _im2col(
        cls, x: np.ndarray, window: int, pad: int, bound: np.ndarray | None = None
    ) -> np.ndarray:
        """x: (B, L, Cin) -> (B * L, window * Cin) with zero 'same' padding.

        `bound` (pad, Cin), when given, replaces the zero padding to the
        right of the sequence (used by the shared-suffix fast path).
        """
        b_sz, length, c_in = x.shape
        x_pad = np.zeros((b_sz, length + 2 * pad, c_in), dtype=x.dtype)
        x_pad[:, pad : pad + length] = x
        if bound is not None:
            x_pad[:, pad + length :] = bound
        return cls._windows(x_pad, window, length).reshape(-1, window * c_in)

    def _prefix_length(self, n0: int) -> int | None:
        """Shortest valid prefix for the shared-suffix fast path.

        Every token sequence in a batch agrees beyond its real tokens:
        the remaining positions are padding, so each convolution stage's
        activations right of a frontier are identical across the batch
        and only need computing once.  Returns the prefix length (a
        multiple of 8, in layer-1 positions) such that splicing a shared
        suffix is exact in both the forward and backward pass, or None
        when no prefix shorter than d1 qualifies.
        """
        cfg = self.cfg
        pad = (cfg.window - 1) // 2
        cached = self._prefix_cache.get(n0)
        if cached is not None:
            return cached[0]
        result = None
        for c1 in range(8, cfg.d1, 8):
            # forward frontiers: positions >= f are batch-independent
            f = n0
            f_in, f_out, f_pool = [], [], []
            ok = True
            for k in range(3):
                p_k = c1 >> k
                if p_k < f or p_k + pad > cfg.d1 >> k:
                    ok = False
                    break
                f_in.append(f)
                f = min(f + pad, cfg.d1 >> k)
                f_out.append(f)
                f = -(-f // 2)
                f_pool.append(f)
            if not ok or (c1 >> 3) < f_pool[2]:
                continue
            # backward: shared-track gradients spread left by `pad` per
            # stage and must never cross a frontier
            g = c1 >> 3
            for k in (2, 1, 0):
                g_out = 2 * g
                if g_out < f_out[k]:
                    ok = False
                    break
                g = g_out - pad
                if g < f_in[k] or (k > 0 and g < f_pool[k - 1]):
                    ok = False
                    break
            if ok:
                result = c1
                break
        self._prefix_cache[n0] = (result,)
        return result

    def forward(
        self, params: dict[str, np.ndarray], ids: np.ndarray, want_cache: bool = False
    ):
        """Encode a batch of id matrices (B, d1) -> (B, d)."""
        if ids.ndim == 1:
            ids = ids[None, :]
        if ids.shape[0] >= 16:
            n0 = int((ids >= 0).sum(axis=1).max())
            c1 = self._prefix_length(n0)
            if c1 is not None:
                return self._forward_split(params, ids, c1, want_cache)
        return self._forward_plain(params, ids, want_cache)

    def backward(
        self, params: dict[str, np.ndarray], cache: dict, dout: np.ndarray
    ) -> dict[str, np.ndarray]:
        if cache.get("c1") is not None:
            return self._backward_split(params, cache, dout)
        return self._backward_plain(params, cache, dout)

    def _forward_plain(
        self,
        params: dict[str, np.ndarray],
        ids: np.ndarray,
        want_cache: bool = False,
        store_inputs: bool = False,
    ):
        cfg = self.cfg
        pad = (cfg.window - 1) // 2
        b_sz = ids.shape[0]
        x = params["emb"][np.clip(ids, 0, None)]
        x *= ids[:, :, None] >= 0
        cache: dict = {"ids": ids, "c1": None}
        length = cfg.d1
        for k in range(1, 4):
            w, b = params[f"conv{k}_w"], params[f"conv{k}_b"]
            window, c_in, c_out = w.shape
            if store_inputs:
                cache[f"in{k}"] = x
            cols = self._im2col(x, window, pad)
            z = cols @ w.reshape(window * c_in, c_out)
            z += b
            z = z.reshape(b_sz, length, c_out)
            mask = z > 0
            np.maximum(z, 0.0, out=z)
            half = length // 2
            a2 = z.reshape(b_sz, half, 2, c_out)
            # argmax ties break toward the first window position
            first = a2[:, :, 0, :] >= a2[:, :, 1, :]
            pooled = np.where(first, a2[:, :, 0, :], a2[:, :, 1, :])
            if want_cache:
                cache[f"cols{k}"] = cols
                cache[f"mask{k}"] = mask
                cache[f"first{k}"] = first
            x = pooled
            length = half
        if store_inputs:
            cache["in4"] = x
        mean = x.mean(axis=1)
        out = mean @ params["proj_w"] + params["proj_b"]
        if want_cache:
            cache["mean"] = mean
            cache["length4"] = length
            return out, cache
        return out

    def _backward_plain(
        self, params: dict[str, np.ndarray], cache: dict, dout: np.ndarray
    ) -> dict[str, np.ndarray]:
        cfg = self.cfg
        pad = (cfg.window - 1) // 2
        grads = {name: np.zeros_like(p) for name, p in params.items()}

        grads["proj_b"] += dout.sum(axis=0)
        grads["proj_w"] += cache["mean"].T @ dout
        dmean = dout @ params["proj_w"].T
        length = cache["length4"]
        b_sz = dout.shape[0]
        dx = np.repeat(dmean[:, None, :] / length, length, axis=1)
        for k in range(3, 0, -1):
            dx = self._conv_pool_backward(params, grads, cache, k, dx, pad)[
                :, pad : pad + dx.shape[1] * 2, :
            ]
        ids = cache["ids"]
        real = ids >= 0
        np.add.at(grads["emb"], ids[real], dx[real])
        return grads

    def _conv_pool_backward(
        self,
        params: dict[str, np.ndarray],
        grads: dict[str, np.ndarray],
        cache: dict,
        k: int,
        dpool: np.ndarray,
        pad: int,
        prefix: str = "",
    ) -> np.ndarray:
        """Backward through one conv+relu+pool stage.

        dpool is the gradient on the pooled output (B, L/2, Cout);
        returns the padded input gradient (B, L + 2*pad, Cin), whose
        tail columns beyond the sequence carry boundary gradients.
        """
        first = cache[f"{prefix}first{k}"]
        b_sz, half, c_out = dpool.shape
        length = half * 2
        # unpool: route gradient to the argmax position of each window
        dz = np.empty((b_sz, length, c_out), dtype=dpool.dtype)
        dz[:, 0::2, :] = dpool * first
        dz[:, 1::2, :] = dpool * ~first
        dz *= cache[f"{prefix}mask{k}"]
        w = params[f"conv{k}_w"]
        window, c_in, _ = w.shape
        dz_flat = dz.reshape(-1, c_out)
        grads[f"conv{k}_b"] += dz_flat.sum(axis=0)
        grads[f"conv{k}_w"] += (cache[f"{prefix}cols{k}"].T @ dz_flat).reshape(
            window, c_in, c_out
        )
        dcols = (dz_flat @ w.reshape(window * c_in, c_out).T).reshape(
            b_sz, length, window, c_in
        )
        dx_pad = np.zeros((b_sz, length + 2 * pad, c_in), dtype=dpool.dtype)
        for off in range(window):
            dx_pad[:, off : off + length, :] += dcols[:, :, off, :]
        return dx_pad

    def _forward_split(
        self, params: dict[str, np.ndarray], ids: np.ndarray, c1: int, want_cache: bool
    ):
        """Shared-suffix fast path: run the batch on a short prefix and
        compute the common padding tail once on a single all-pad row.
        Output is exactly the plain forward up to summation order."""
        cfg = self.cfg
        pad = (cfg.window - 1) // 2
        b_sz = ids.shape[0]
        pad_row = np.full((1, cfg.d1), PAD_ID, dtype=np.int64)
        _, shared = self._forward_plain(params, pad_row, want_cache=True, store_inputs=True)

        ids_p = ids[:, :c1]
        x = params["emb"][np.clip(ids_p, 0, None)]
        x *= ids_p[:, :, None] >= 0
        cache: dict = {"ids_prefix": ids_p, "c1": c1, "shared": shared}
        length = c1
        for k in range(1, 4):
            w, b = params[f"conv{k}_w"], params[f"conv{k}_b"]
            window, c_in, c_out = w.shape
            bound = shared[f"in{k}"][0, length : length + pad, :]
            cols = self._im2col(x, window, pad, bound)
            z = cols @ w.reshape(window * c_in, c_out)
            z += b
            z = z.reshape(b_sz, length, c_out)
            mask = z > 0
            np.maximum(z, 0.0, out=z)
            half = length // 2
            a2 = z.reshape(b_sz, half, 2, c_out)
            first = a2[:, :, 0, :] >= a2[:, :, 1, :]
            pooled = np.where(first, a2[:, :, 0, :], a2[:, :, 1, :])
            if want_cache:
                cache[f"cols{k}"] = cols
                cache[f"mask{k}"] = mask
                cache[f"first{k}"] = first
            x = pooled
            length = half
        l4 = cfg.d1 // 8
        suffix = shared["in4"][0, length:, :].sum(axis=0)
        mean = (x.sum(axis=1) + suffix) / l4
        out = mean @ params["proj_w"] + params["proj_b"]
        if want_cache:
            cache["mean"] = mean
            return out, cache
        return out

    def _backward_split(
        self, params: dict[str, np.ndarray], cache: dict, dout: np.ndarray
    ) -> dict[str, np.ndarray]:
        cfg = self.cfg
        pad = (cfg.window - 1) // 2
        grads = {name: np.zeros_like(p) for name, p in params.items()}

        grads["proj_b"] += dout.sum(axis=0)
        grads["proj_w"] += cache["mean"].T @ dout
        dmean = dout @ params["proj_w"].T
        l4 = cfg.d1 // 8
        c1 = cache["c1"]
        p4 = c1 // 8

        # prefix track: per-patent gradients on the first c1 positions
        dx = np.repeat(dmean[:, None, :] / l4, p4, axis=1)
        inject: dict[int, np.ndarray] = {}
        for k in range(3, 0, -1):
            p_k = c1 >> (k - 1)
            dx_pad = self._conv_pool_backward(params, grads, cache, k, dx, pad)
            # columns right of the prefix belong to the shared tail
            inject[k] = dx_pad[:, pad + p_k :, :].sum(axis=0)
            dx = dx_pad[:, pad : pad + p_k, :]
        ids_p = cache["ids_prefix"]
        real = ids_p >= 0
        np.add.at(grads["emb"], ids_p[real], dx[real])

        # shared track: one full-length row carries the batch-summed
        # suffix gradients; its input is all padding (no embedding grads)
        shared = cache["shared"]
        dpool = np.zeros((1, l4, dmean.shape[1]), dtype=dmean.dtype)
        dpool[0, p4:, :] = dmean.sum(axis=0) / l4
        for k in range(3, 0, -1):
            length = cfg.d1 >> (k - 1)
            dx_pad = self._conv_pool_backward(params, grads, shared, k, dpool, pad)
            din = dx_pad[:, pad : pad + length, :]
            p_k = c1 >> (k - 1)
            din[0, p_k : p_k + pad, :] += inject[k]
            dpool = din
        return grads


def encode_patent(encoder: TextEncoder, params: dict[str, np.ndarray], tokens) -> np.ndarray:
    """Single-patent convenience wrapper; empty token lists are valid."""
    ids = encoder.token_ids(tokens)
    return encoder.forward(params, ids)[0]


def relation_enhanced(a_self: np.ndarray, weighted: list[tuple[float, np.ndarray]]) -> np.ndarray:
    """a_self plus the weight-scaled sum of related entities' vectors."""
    out = a_self.copy()
    for w, v in weighted:
        if v.shape != a_self.shape:
            raise ValueError(f"vector shape {v.shape} does not match {a_self.shape}")
        out += w * v
    return out


def internal_factor(a_self: np.ndarray, competitors: list[tuple[float, np.ndarray]]) -> np.ndarray:
    """Company factor enhanced with weighted competitor vectors."""
    return relation_enhanced(a_self, competitors)


def external_factor(a_self: np.ndarray, collaborators: list[tuple[float, np.ndarray]]) -> np.ndarray:
    """Technology factor enhanced with Jaccard-weighted collaborator vectors."""
    return relation_enhanced(a_self, collaborators)
