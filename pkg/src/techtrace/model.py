"""Recurrent technology-forecasting model.

Company and technology factor sequences feed two separate GRUs; the
final hidden states score every (company, technology) pair through
sigmoid(u . v).  Training minimizes a pairwise ranking loss (mean over
sampled triples of -ln sigmoid(score(j+) - score(j-)) plus an L2 term)
with Adadelta, backpropagating through the GRUs and the text encoder.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .competitors import DEFAULT_ALPHA
from .corpus import CorpusIndex
from .distribution import distribution_matrix
from .encoder import EncoderConfig, TextEncoder
from .features import FactorExtractor
from .gru import gru_backward, gru_forward, init_gru_params, sigmoid
from .optim import Adadelta


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    encoder: EncoderConfig = EncoderConfig()
    pcr_m: int = 5
    pcr_alpha: tuple[float, float, float] = DEFAULT_ALPHA
    ctr_n: int = 5
    use_competitors: bool = True
    use_collaborators: bool = True
    epochs: int = 50
    triples_per_company: int = 20
    lam: float = 1e-6
    rho: float = 0.95
    eps: float = 1e-6
    seed: int = 0
    freeze_samples: bool = False
    gru_biases: bool = False
    dtype: str = "float32"


@dataclass
class DttModel:
    cfg: TrainConfig
    input_years: list[int]
    target_year: int
    params: dict[str, np.ndarray]
    loss_history: list[float] = field(default_factory=list)
    trained: bool = False

    def encoder(self) -> TextEncoder:
        return TextEncoder(self.cfg.encoder)


def predict(u: np.ndarray, v: np.ndarray) -> float:
    """sigmoid(u . v), the pairwise emphasis score in (0, 1)."""
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(sigmoid(np.array([u @ v]))[0])


def predict_matrix(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(M, N) score matrix from stacked final states."""
    return sigmoid(u @ v.T)


def init_params(cfg: TrainConfig) -> dict[str, np.ndarray]:
    dt = np.dtype(cfg.dtype)
    if dt not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"dtype must be float32 or float64, got {cfg.dtype!r}")
    rng = np.random.default_rng(cfg.seed)
    encoder = TextEncoder(cfg.encoder)
    params: dict[str, np.ndarray] = {}
    for name, p in encoder.init_params(rng).items():
        params[f"enc.{name}"] = p.astype(dt)
    for name, p in init_gru_params(cfg.encoder.d, rng, cfg.gru_biases).items():
        params[f"gru_u.{name}"] = p.astype(dt)
    for name, p in init_gru_params(cfg.encoder.d, rng, cfg.gru_biases).items():
        params[f"gru_v.{name}"] = p.astype(dt)
    return params


def split_params(params: dict[str, np.ndarray]):
    """Prefix-stripped views sharing the underlying arrays."""
    enc = {k[4:]: v for k, v in params.items() if k.startswith("enc.")}
    gu = {k[6:]: v for k, v in params.items() if k.startswith("gru_u.")}
    gv = {k[6:]: v for k, v in params.items() if k.startswith("gru_v.")}
    return enc, gu, gv


def sample_triples(
    target: np.ndarray, k_per_company: int, rng: np.random.Generator
) -> np.ndarray:
    """(B, 3) rows (company, j+, j-) with target[i, j+] > target[i, j-].

    j+ is drawn proportionally to the target row (restricted to entries
    strictly above the row minimum so a j- always exists); j- uniformly
    over strictly smaller entries.  Constant rows yield no triples.
    """
    rows = []
    for i in range(target.shape[0]):
        r = target[i]
        mn = r.min()
        pos = np.flatnonzero(r > mn)
        if pos.size == 0:
            continue
        probs = r[pos] / r[pos].sum()
        jps = rng.choice(pos, size=k_per_company, p=probs)
        for jp in jps:
            lower = np.flatnonzero(r < r[jp])
            jn = lower[rng.integers(lower.size)]
            rows.append((i, int(jp), int(jn)))
    if not rows:
        return np.empty((0, 3), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def bpr_loss_and_grads(
    u: np.ndarray, v: np.ndarray, triples: np.ndarray, want_grads: bool = True
):
    """Mean over triples of -ln sigmoid(margin); margins use final
    states u (M, d) and v (N, d)."""
    du = np.zeros_like(u)
    dv = np.zeros_like(v)
    if triples.shape[0] == 0:
        return 0.0, du, dv
    ci, jp, jn = triples[:, 0], triples[:, 1], triples[:, 2]
    diff = v[jp] - v[jn]
    margins = np.einsum("bd,bd->b", u[ci], diff)
    loss = float(_softplus(-margins).mean(dtype=np.float64))
    if want_grads:
        dm = -sigmoid(-margins) / triples.shape[0]
        np.add.at(du, ci, dm[:, None] * diff)
        np.add.at(dv, jp, dm[:, None] * u[ci])
        np.add.at(dv, jn, -dm[:, None] * u[ci])
    return loss, du, dv


def training_loss(
    params: dict[str, np.ndarray],
    extractor: FactorExtractor,
    triples: np.ndarray,
    sample_seed: int,
    lam: float,
    want_grads: bool = True,
):
    """Full objective (ranking term + L2) and, optionally, exact
    gradients for every parameter."""
    enc_p, gu_p, gv_p = split_params(params)
    factors = extractor.compute(enc_p, sample_seed, want_cache=want_grads)
    u, caches_u = gru_forward(gu_p, factors.x)
    v, caches_v = gru_forward(gv_p, factors.y)
    data_loss, du, dv = bpr_loss_and_grads(u, v, triples, want_grads)
    reg = lam * sum(float((p * p).sum()) for p in params.values())
    loss = data_loss + reg
    if not want_grads:
        return loss, None
    gu_grads, dx = gru_backward(gu_p, caches_u, du)
    gv_grads, dy = gru_backward(gv_p, caches_v, dv)
    enc_grads = extractor.backward(enc_p, factors, dx, dy)
    grads = {}
    for name, g in enc_grads.items():
        grads[f"enc.{name}"] = g
    for name, g in gu_grads.items():
        grads[f"gru_u.{name}"] = g
    for name, g in gv_grads.items():
        grads[f"gru_v.{name}"] = g
    for name, p in params.items():
        grads[name] += 2.0 * lam * p
    return loss, grads


def _epoch_sample_seed(cfg: TrainConfig, epoch: int) -> int:
    if cfg.freeze_samples:
        return cfg.seed
    return int(np.random.default_rng([cfg.seed, 555, epoch]).integers(2**62))


def build_extractor(
    index: CorpusIndex, input_years: list[int], cfg: TrainConfig
) -> FactorExtractor:
    return FactorExtractor(
        index,
        input_years,
        TextEncoder(cfg.encoder),
        pcr_m=cfg.pcr_m,
        pcr_alpha=cfg.pcr_alpha,
        ctr_n=cfg.ctr_n,
        use_competitors=cfg.use_competitors,
        use_collaborators=cfg.use_collaborators,
    )


def train(
    index: CorpusIndex, input_years: list[int], target_year: int, cfg: TrainConfig
) -> tuple[DttModel, list[float]]:
    """Fit the model on one training window; deterministic in cfg.seed."""
    if not input_years:
        raise ValueError("need at least one input year")
    if target_year not in index.years:
        raise ValueError(f"target year {target_year} outside corpus range")
    extractor = build_extractor(index, input_years, cfg)
    target = distribution_matrix(index, target_year).values
    params = init_params(cfg)
    optimizer = Adadelta(rho=cfg.rho, eps=cfg.eps)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        triples = sample_triples(
            target, cfg.triples_per_company, np.random.default_rng([cfg.seed, 777, epoch])
        )
        loss, grads = training_loss(
            params, extractor, triples, _epoch_sample_seed(cfg, epoch), cfg.lam
        )
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        optimizer.step(params, grads)
        for name, p in params.items():
            if not np.all(np.isfinite(p)):
                raise TrainingDivergedError(f"non-finite values in {name} at epoch {epoch}")
        history.append(loss)
    model = DttModel(
        cfg=cfg,
        input_years=list(input_years),
        target_year=target_year,
        params=params,
        loss_history=history,
        trained=True,
    )
    return model, history


def forecast(
    model: DttModel, index: CorpusIndex, input_years: list[int] | None = None, seed: int | None = None
) -> dict[str, list[tuple[str, float]]]:
    """Full descending ranking of technologies per company; ties break
    lexicographically by code."""
    if not model.trained:
        raise ValueError("model has not been trained")
    if input_years is None:
        input_years = model.input_years
    if seed is None:
        seed = model.cfg.seed
    extractor = build_extractor(index, list(input_years), model.cfg)
    enc_p, gu_p, gv_p = split_params(model.params)
    factors = extractor.compute(enc_p, seed)
    u, _ = gru_forward(gu_p, factors.x)
    v, _ = gru_forward(gv_p, factors.y)
    scores = predict_matrix(u, v)
    out: dict[str, list[tuple[str, float]]] = {}
    n = index.N
    for i, company in enumerate(index.companies):
        order = np.lexsort((np.arange(n), -scores[i]))
        out[company] = [(index.technologies[j], float(scores[i, j])) for j in order]
    return out


def _config_dict(cfg: TrainConfig) -> dict:
    d = {
        k: (list(v) if isinstance(v, tuple) else v)
        for k, v in vars(cfg).items()
        if k != "encoder"
    }
    d["encoder"] = {
        k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(cfg.encoder).items()
    }
    return d


def save_model(model: DttModel, model_dir: str | Path) -> None:
    model_dir = Path(model_dir)
    model_dir.mkdir(parents=True, exist_ok=True)
    np.savez(model_dir / "params.npz", **model.params)
    cfg_dict = _config_dict(model.cfg)
    manifest = {
        "config": cfg_dict,
        "config_hash": hashlib.sha256(
            json.dumps(cfg_dict, sort_keys=True).encode()
        ).hexdigest(),
        "input_years": model.input_years,
        "target_year": model.target_year,
        "loss_history": model.loss_history,
        "trained": model.trained,
        "d": model.cfg.encoder.d,
    }
    (model_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_model(model_dir: str | Path) -> DttModel:
    model_dir = Path(model_dir)
    manifest = json.loads((model_dir / "manifest.json").read_text())
    cfg_d = dict(manifest["config"])
    enc_d = cfg_d.pop("encoder")
    enc_cfg = EncoderConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in enc_d.items()})
    cfg = TrainConfig(
        encoder=enc_cfg,
        **{k: tuple(v) if isinstance(v, list) else v for k, v in cfg_d.items()},
    )
    with np.load(model_dir / "params.npz") as npz:
        params = {name: npz[name].copy() for name in npz.files}
    return DttModel(
        cfg=cfg,
        input_years=list(manifest["input_years"]),
        target_year=manifest["target_year"],
        params=params,
        loss_history=list(manifest["loss_history"]),
        trained=manifest["trained"],
    )
