"""Synthetic patent corpora with planted structure.

Plants two kinds of recoverable structure:

* competitor groups — companies in the same group draw patents from the
  same technology-preference vector (optionally drifting year over year);
* collaborator pairs — a partner code is co-assigned to a patent whose
  primary code is the pair's other member, with fixed probability.

Patent text carries the technology signal: each patent's tokens contain
its (lowercased) CPC codes plus filler noise words.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .corpus import CorpusIndex, CorpusError, PatentRecord, build_index
from .cpc import parse_cpc

_SECTIONS = "ABCDEFGHY"


class SynthConfigError(ValueError):
    """Inconsistent synthetic-corpus configuration."""


@dataclass(frozen=True)
class SynthConfig:
    m_companies: int = 50
    n_technologies: int = 40
    t_years: int = 10
    year_start: int = 2001
    patents_per_company_year: float = 40.0  # Poisson mean
    tokens_per_patent: int = 8
    noise_vocab_size: int = 50
    group_count: int = 5
    concentration: float = 0.3  # Dirichlet parameter for group preferences
    drift: float = 0.0  # per-year movement of preference mass
    collab_pairs: tuple[tuple[int, int], ...] = ()  # technology index pairs
    collab_prob: float = 0.9
    extra_code_prob: float = 0.02

    def validate(self) -> None:
        if self.m_companies < 1 or self.n_technologies < 1 or self.t_years < 1:
            raise SynthConfigError("m_companies, n_technologies, t_years must be >= 1")
        if self.n_technologies > 9 * 99:
            raise SynthConfigError("n_technologies exceeds the code generator's range")
        if not 1 <= self.group_count <= self.m_companies:
            raise SynthConfigError("group_count must be in [1, m_companies]")
        if self.patents_per_company_year <= 0:
            raise SynthConfigError("patents_per_company_year must be positive")
        if self.tokens_per_patent < 1:
            raise SynthConfigError("tokens_per_patent must be >= 1")
        if self.drift < 0:
            raise SynthConfigError("drift must be non-negative")
        if not 0 <= self.collab_prob <= 1 or not 0 <= self.extra_code_prob <= 1:
            raise SynthConfigError("probabilities must lie in [0, 1]")
        seen: set[int] = set()
        for j1, j2 in self.collab_pairs:
            if j1 == j2:
                raise SynthConfigError("collaborator pair must have distinct members")
            for j in (j1, j2):
                if not 0 <= j < self.n_technologies:
                    raise SynthConfigError(f"collaborator index {j} out of range")
                if j in seen:
                    raise SynthConfigError(f"technology {j} appears in two planted pairs")
                seen.add(j)


def tech_codes(n: int) -> list[str]:
    """Deterministic subclass-level CPC codes, e.g. A01A, B01A, ..."""
    codes = []
    for k in range(n):
        section = _SECTIONS[k % 9]
        klass = k // 9 + 1
        codes.append(f"{section}{klass:02d}A")
    return codes


def group_preferences(config: SynthConfig, seed: int) -> np.ndarray:
    """Planted per-group preference vectors, shape (groups, years, N).

    Year y preference = base Dirichlet draw shifted by y * drift along a
    zero-sum direction, clipped and renormalized.  drift=0 makes every
    year identical.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    g, n, t = config.group_count, config.n_technologies, config.t_years
    base = rng.dirichlet(np.full(n, config.concentration), size=g)
    direction = rng.dirichlet(np.full(n, config.concentration), size=g)
    direction -= direction.mean(axis=1, keepdims=True)
    prefs = np.empty((g, t, n))
    for y in range(t):
        p = base + config.drift * y * direction
        p = np.clip(p, 1e-9, None)
        prefs[:, y, :] = p / p.sum(axis=1, keepdims=True)
    return prefs


def synth_corpus(config: SynthConfig, seed: int) -> CorpusIndex:
    """Generate a corpus with planted structure; deterministic in seed."""
    config.validate()
    prefs = group_preferences(config, seed)
    rng = np.random.default_rng(seed + 1)
    codes = tech_codes(config.n_technologies)
    partner = {j1: j2 for j1, j2 in config.collab_pairs}
    partner.update({j2: j1 for j1, j2 in config.collab_pairs})
    noise_vocab = [f"w{v:03d}" for v in range(config.noise_vocab_size)]

    records: list[PatentRecord] = []
    counter = 0
    for i in range(config.m_companies):
        g = i % config.group_count
        for y in range(config.t_years):
            n_pat = rng.poisson(config.patents_per_company_year)
            if n_pat == 0:
                continue
            primaries = rng.choice(config.n_technologies, size=n_pat, p=prefs[g, y])
            for j in primaries:
                j = int(j)
                tags = [j]
                if j in partner and rng.random() < config.collab_prob:
                    tags.append(partner[j])
                extra = rng.random(config.n_technologies) < config.extra_code_prob
                for j2 in np.flatnonzero(extra):
                    if int(j2) not in tags:
                        tags.append(int(j2))
                tokens = [codes[j].lower()] * 3 + [codes[j2].lower() for j2 in tags[1:]]
                n_noise = max(0, config.tokens_per_patent - len(tokens))
                tokens += [noise_vocab[v] for v in rng.integers(0, config.noise_vocab_size, n_noise)]
                tokens = tokens[: config.tokens_per_patent]
                order = rng.permutation(len(tokens))
                tokens = [tokens[k] for k in order]
                records.append(
                    PatentRecord(
                        patent_id=f"P{counter:07d}",
                        assignee_id=f"C{i:03d}",
                        filing_year=config.year_start + y,
                        cpc_codes=frozenset(parse_cpc(codes[j2]) for j2 in tags),
                        tokens=tuple(tokens),
                    )
                )
                counter += 1
    if not records:
        raise CorpusError("synthetic generation produced no patents")
    index = build_index(records, level="subclass", min_patents=1)
    # pin the year range to the config even if edge years came out empty
    year_max = config.year_start + config.t_years - 1
    if index.year_min != config.year_start or index.year_max != year_max:
        index = dataclasses.replace(index, year_min=config.year_start, year_max=year_max)
    return index
