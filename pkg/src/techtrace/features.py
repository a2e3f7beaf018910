"""Yearly entity vectors and relation-enhanced factors.

For every company-year and technology-year, sample up to d2 patents,
encode them, and average into an entity vector a^t.  Company factors
add weighted competitor vectors; technology factors add Jaccard-weighted
collaborator vectors.  Both enhancements are linear maps (I + W) over
the stacked entity vectors, so the backward pass is a transpose.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collaboration import build_collab_graph, top_collaborators
from .competitors import DEFAULT_ALPHA
from .corpus import CorpusIndex
from .encoder import TextEncoder

_KIND_COMPANY = 0
_KIND_TECH = 1


def competitor_weight_matrix(
    index: CorpusIndex,
    year: int,
    m: int,
    alpha: tuple[float, float, float] = DEFAULT_ALPHA,
    standardize_activity: bool = True,
) -> np.ndarray:
    """(M, M) matrix; row i holds the normalized weights of i's top-m
    competitors.  Vectorized equivalent of calling `top_competitors`
    per company."""
    m_comp, n_tech = index.M, index.N
    act = np.zeros((m_comp, n_tech))
    comp_idx = {c: i for i, c in enumerate(index.companies)}
    tech_idx = {j: k for k, j in enumerate(index.technologies)}
    filed_count = np.zeros(m_comp)
    for (company, t), pats in index.by_company_year.items():
        if t != year:
            continue
        i = comp_idx[company]
        filed_count[i] = len(pats)
        for pid in pats:
            for tech in index.patent_techs(pid):
                act[i, tech_idx[tech]] += 1
    tech_total = act.sum(axis=0)
    share = np.divide(act, tech_total, out=np.zeros_like(act), where=tech_total > 0)
    emphasis = np.divide(
        act, filed_count[:, None], out=np.zeros_like(act), where=filed_count[:, None] > 0
    )
    act_scaled = act
    if alpha[0] > 0 and standardize_activity and act.max() > 0:
        act_scaled = act / act.max()

    def sq_dists(v: np.ndarray) -> np.ndarray:
        sq = (v * v).sum(axis=1)
        d = sq[:, None] + sq[None, :] - 2.0 * (v @ v.T)
        return np.maximum(d, 0.0)

    dist_sq = (
        alpha[0] * sq_dists(act_scaled) + alpha[1] * sq_dists(share) + alpha[2] * sq_dists(emphasis)
    )
    scores = np.sqrt(np.maximum(dist_sq, 0.0))

    weights = np.zeros((m_comp, m_comp))
    active = filed_count > 0
    for i in range(m_comp):
        cand = [(scores[i, k], index.companies[k], k) for k in range(m_comp) if k != i and active[k]]
        cand.sort(key=lambda sck: (sck[0], sck[1]))
        top = cand[:m]
        if not top:
            continue
        raw = np.array([1.0 / (1.0 + s) for s, _, _ in top])
        raw /= raw.sum()
        for (_, _, k), w in zip(top, raw):
            weights[i, k] = w
    return weights


def collaborator_weight_matrix(index: CorpusIndex, year: int, n: int) -> np.ndarray:
    """(N, N) matrix; row j holds raw Jaccard weights of j's top-n
    collaborators."""
    graph = build_collab_graph(index, year)
    n_tech = index.N
    tech_idx = {j: k for k, j in enumerate(index.technologies)}
    weights = np.zeros((n_tech, n_tech))
    for j in index.technologies:
        for other, w in top_collaborators(graph, j, n):
            weights[tech_idx[j], tech_idx[other]] = w
    return weights


def _sample_ids(pids: list[str], d2: int, rng: np.random.Generator) -> list[str]:
    if len(pids) <= d2:
        return list(pids)
    chosen = rng.choice(len(pids), size=d2, replace=False)
    return [pids[k] for k in sorted(chosen)]


def _stream(seed: int, kind: int, entity_idx: int, year: int) -> np.random.Generator:
    return np.random.default_rng([seed, kind, entity_idx, year])


def entity_year_vector(
    encoder: TextEncoder,
    params: dict[str, np.ndarray],
    index: CorpusIndex,
    kind: str,
    entity: str,
    year: int,
    seed: int,
) -> np.ndarray:
    """Mean encoding of up to d2 sampled patents; zero vector if the
    entity filed nothing that year."""
    if kind == "company":
        pids = sorted(index.company_year_patents(entity, year))
        kind_code, eidx = _KIND_COMPANY, index.companies.index(entity)
    elif kind == "tech":
        pids = sorted(index.tech_year_patents(entity, year))
        kind_code, eidx = _KIND_TECH, index.technologies.index(entity)
    else:
        raise ValueError(f"kind must be 'company' or 'tech', got {kind!r}")
    sampled = _sample_ids(pids, encoder.cfg.d2, _stream(seed, kind_code, eidx, year))
    if not sampled:
        return np.zeros(encoder.cfg.d)
    ids = np.stack([encoder.token_ids(index.patents[p].tokens) for p in sampled])
    return encoder.forward(params, ids).mean(axis=0)


@dataclass
class FactorSet:
    a_comp: np.ndarray  # (T_in, M, d)
    a_tech: np.ndarray  # (T_in, N, d)
    x: np.ndarray  # (T_in, M, d) relation-enhanced company factors
    y: np.ndarray  # (T_in, N, d) relation-enhanced technology factors
    cache: dict | None
    plan: dict


class FactorExtractor:
    def __init__(
        self,
        index: CorpusIndex,
        input_years: list[int],
        encoder: TextEncoder,
        pcr_m: int = 5,
        pcr_alpha: tuple[float, float, float] = DEFAULT_ALPHA,
        ctr_n: int = 5,
        use_competitors: bool = True,
        use_collaborators: bool = True,
    ):
        self.index = index
        self.input_years = list(input_years)
        self.encoder = encoder
        eye_m = np.eye(index.M)
        eye_n = np.eye(index.N)
        self.r_comp = []
        self.r_tech = []
        for t in self.input_years:
            wc = (
                competitor_weight_matrix(index, t, pcr_m, pcr_alpha)
                if use_competitors
                else np.zeros((index.M, index.M))
            )
            wt = (
                collaborator_weight_matrix(index, t, ctr_n)
                if use_collaborators
                else np.zeros((index.N, index.N))
            )
            self.r_comp.append(eye_m + wc)
            self.r_tech.append(eye_n + wt)
        self._pids_comp = {
            (ti, i): sorted(index.company_year_patents(c, t))
            for ti, t in enumerate(self.input_years)
            for i, c in enumerate(index.companies)
        }
        self._pids_tech = {
            (ti, k): sorted(index.tech_year_patents(j, t))
            for ti, t in enumerate(self.input_years)
            for k, j in enumerate(index.technologies)
        }
        self._ids_cache: dict[str, np.ndarray] = {}
        self._plan_cache: tuple[int, dict] | None = None

    def _token_ids(self, pid: str) -> np.ndarray:
        ids = self._ids_cache.get(pid)
        if ids is None:
            ids = self.encoder.token_ids(self.index.patents[pid].tokens)
            self._ids_cache[pid] = ids
        return ids

    def sample_plan(self, seed: int) -> dict:
        """Sampled patents per entity-year plus flat slot arrays for
        vectorized averaging; deterministic in seed."""
        if self._plan_cache is not None and self._plan_cache[0] == seed:
            return self._plan_cache[1]
        d2 = self.encoder.cfg.d2
        uniq: dict[str, int] = {}
        slots = {"comp": ([], [], [], []), "tech": ([], [], [], [])}  # year, entity, patent, w
        counts = {
            "comp": np.zeros((len(self.input_years), self.index.M)),
            "tech": np.zeros((len(self.input_years), self.index.N)),
        }
        for kind, kind_code, pids_map, n_ent in (
            ("comp", _KIND_COMPANY, self._pids_comp, self.index.M),
            ("tech", _KIND_TECH, self._pids_tech, self.index.N),
        ):
            years_arr, ents_arr, pats_arr, w_arr = slots[kind]
            for ti, t in enumerate(self.input_years):
                for e in range(n_ent):
                    pids = pids_map[(ti, e)]
                    if not pids:
                        continue
                    sampled = _sample_ids(pids, d2, _stream(seed, kind_code, e, t))
                    counts[kind][ti, e] = len(sampled)
                    for p in sampled:
                        idx = uniq.setdefault(p, len(uniq))
                        years_arr.append(ti)
                        ents_arr.append(e)
                        pats_arr.append(idx)
                        w_arr.append(1.0 / len(sampled))
        plan = {
            "uniq": list(uniq),
            "slots": {
                kind: tuple(np.asarray(a) for a in arrays) for kind, arrays in slots.items()
            },
            "counts": counts,
        }
        self._plan_cache = (seed, plan)
        return plan

    def compute(self, params: dict[str, np.ndarray], seed: int, want_cache: bool = False) -> FactorSet:
        plan = self.sample_plan(seed)
        d = self.encoder.cfg.d
        t_in = len(self.input_years)
        if plan["uniq"]:
            ids = np.stack([self._token_ids(p) for p in plan["uniq"]])
            if want_cache:
                enc, cache = self.encoder.forward(params, ids, want_cache=True)
            else:
                enc, cache = self.encoder.forward(params, ids), None
        else:
            enc, cache = np.zeros((0, d), dtype=params["proj_b"].dtype), None
        dt = enc.dtype
        a = {
            "comp": np.zeros((t_in, self.index.M, d), dtype=dt),
            "tech": np.zeros((t_in, self.index.N, d), dtype=dt),
        }
        for kind in ("comp", "tech"):
            years_arr, ents_arr, pats_arr, w_arr = plan["slots"][kind]
            if len(years_arr):
                np.add.at(
                    a[kind], (years_arr, ents_arr), enc[pats_arr] * w_arr.astype(dt)[:, None]
                )
        rc = [r.astype(dt, copy=False) for r in self.r_comp]
        rt = [r.astype(dt, copy=False) for r in self.r_tech]
        x = np.stack([rc[ti] @ a["comp"][ti] for ti in range(t_in)])
        y = np.stack([rt[ti] @ a["tech"][ti] for ti in range(t_in)])
        return FactorSet(a_comp=a["comp"], a_tech=a["tech"], x=x, y=y, cache=cache, plan=plan)

    def backward(
        self,
        params: dict[str, np.ndarray],
        factors: FactorSet,
        dx: np.ndarray,
        dy: np.ndarray,
    ) -> dict[str, np.ndarray]:
        """Gradients of the encoder parameters given gradients on the
        relation-enhanced factors."""
        if factors.cache is None:
            raise ValueError("factors were computed without want_cache=True")
        t_in = len(self.input_years)
        dt = dx.dtype
        da = {
            "comp": np.stack([self.r_comp[ti].T.astype(dt, copy=False) @ dx[ti] for ti in range(t_in)]),
            "tech": np.stack([self.r_tech[ti].T.astype(dt, copy=False) @ dy[ti] for ti in range(t_in)]),
        }
        denc = np.zeros((len(factors.plan["uniq"]), self.encoder.cfg.d), dtype=dt)
        for kind in ("comp", "tech"):
            years_arr, ents_arr, pats_arr, w_arr = factors.plan["slots"][kind]
            if len(years_arr):
                np.add.at(
                    denc, pats_arr, da[kind][years_arr, ents_arr] * w_arr.astype(dt)[:, None]
                )
        return self.encoder.backward(params, factors.cache, denc)
