"""Flat key=value run configuration.

Precedence: CLI flag > config file > built-in default.  Unknown keys
are rejected.  Example file:

    # desk-scale run
    d0 = 16
    epochs = 30
    drift = 0.05
    collab_pairs = 0:1,4:5
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .encoder import EncoderConfig
from .model import TrainConfig
from .synth import SynthConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # corpus
    level: str = "subclass"
    min_patents: int = 1
    # relations
    pcr_m: int = 5
    pcr_alpha: tuple[float, float, float] = (0.0, 0.5, 0.5)
    ctr_n: int = 5
    use_competitors: bool = True
    use_collaborators: bool = True
    # encoder
    d0: int = 32
    d1: int = 64
    d2: int = 8
    d: int = 32
    window: int = 3
    channels: tuple[int, int, int] = (32, 32, 32)
    buckets: int = 2048
    # training
    epochs: int = 50
    triples_per_company: int = 20
    lam: float = 1e-6
    rho: float = 0.95
    eps: float = 1e-6
    seed: int = 0
    freeze_samples: bool = False
    gru_biases: bool = False
    dtype: str = "float32"
    # evaluation
    ks: tuple[int, ...] = (10, 20, 50, 100)
    # synthetic corpus
    m_companies: int = 50
    n_technologies: int = 40
    t_years: int = 10
    year_start: int = 2001
    patents_per_company_year: float = 40.0
    tokens_per_patent: int = 8
    noise_vocab_size: int = 50
    group_count: int = 5
    concentration: float = 0.3
    drift: float = 0.0
    collab_pairs: tuple[tuple[int, int], ...] = ()
    collab_prob: float = 0.9
    extra_code_prob: float = 0.02
    # execution
    threads: int = 0  # 0 = all available cores

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            d0=self.d0,
            d1=self.d1,
            d2=self.d2,
            d=self.d,
            window=self.window,
            channels=self.channels,
            buckets=self.buckets,
            seed=self.seed,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            encoder=self.encoder_config(),
            pcr_m=self.pcr_m,
            pcr_alpha=self.pcr_alpha,
            ctr_n=self.ctr_n,
            use_competitors=self.use_competitors,
            use_collaborators=self.use_collaborators,
            epochs=self.epochs,
            triples_per_company=self.triples_per_company,
            lam=self.lam,
            rho=self.rho,
            eps=self.eps,
            seed=self.seed,
            freeze_samples=self.freeze_samples,
            gru_biases=self.gru_biases,
            dtype=self.dtype,
        )

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            m_companies=self.m_companies,
            n_technologies=self.n_technologies,
            t_years=self.t_years,
            year_start=self.year_start,
            patents_per_company_year=self.patents_per_company_year,
            tokens_per_patent=self.tokens_per_patent,
            noise_vocab_size=self.noise_vocab_size,
            group_count=self.group_count,
            concentration=self.concentration,
            drift=self.drift,
            collab_pairs=self.collab_pairs,
            collab_prob=self.collab_prob,
            extra_code_prob=self.extra_code_prob,
        )

    def to_dict(self) -> dict:
        return {
            k: (list(map(list, v)) if k == "collab_pairs" else list(v) if isinstance(v, tuple) else v)
            for k, v in dataclasses.asdict(self).items()
        }

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw: str):
    f = _FIELDS[key]
    raw = raw.strip()
    if key == "collab_pairs":
        if not raw:
            return ()
        pairs = []
        for part in raw.split(","):
            try:
                a, b = part.split(":")
                pairs.append((int(a), int(b)))
            except ValueError as e:
                raise ConfigError(f"{key}: expected pairs like '0:1,4:5', got {raw!r}") from e
        return tuple(pairs)
    if f.type.startswith("tuple"):
        items = [p for p in raw.split(",") if p.strip()]
        cast = float if "float" in f.type else int
        try:
            return tuple(cast(p) for p in items)
        except ValueError as e:
            raise ConfigError(f"{key}: cannot parse {raw!r} as {f.type}") from e
    if f.type == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if f.type == "int":
        try:
            return int(raw)
        except ValueError as e:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from e
    if f.type == "float":
        try:
            return float(raw)
        except ValueError as e:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from e
    return raw


def load_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Build a RunConfig from an optional file plus string overrides."""
    values: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in _FIELDS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _parse_value(key, raw)
    for key, raw in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = raw if not isinstance(raw, str) else _parse_value(key, raw)
    return RunConfig(**values)
