"""Potential competitor recognition.

Per company-year indicator vectors over technologies:

* activity  — raw patent count per technology
* share     — company's fraction of the technology's patents that year
* emphasis  — technology's fraction of the company's patents that year

The competitive score between two companies is a weighted Euclidean
distance over the three indicator vectors; smaller means closer
competitors.  Scores feed the ranking, and each ranked competitor gets
a weight 1/(1+score), normalized within the list to sum to 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CorpusIndex

DEFAULT_ALPHA = (0.0, 0.5, 0.5)


@dataclass(frozen=True)
class IndicatorVector:
    company: str
    year: int
    activity: np.ndarray  # counts, length N
    share: np.ndarray  # fractions in [0,1]
    emphasis: np.ndarray  # fractions in [0,1]


@dataclass(frozen=True)
class CompetitorList:
    company: str
    year: int
    entries: tuple[tuple[str, float, float], ...]  # (competitor, score, weight)


def indicators(index: CorpusIndex, company: str, year: int) -> IndicatorVector:
    filed = index.company_year_patents(company, year)
    n = index.N
    activity = np.zeros(n)
    share = np.zeros(n)
    emphasis = np.zeros(n)
    for j, tech in enumerate(index.technologies):
        tech_pats = index.tech_year_patents(tech, year)
        both = len(filed & tech_pats)
        activity[j] = both
        if tech_pats:
            share[j] = both / len(tech_pats)
        if filed:
            emphasis[j] = both / len(filed)
    return IndicatorVector(company, year, activity, share, emphasis)


def competitive_score(
    a: IndicatorVector, b: IndicatorVector, alpha: tuple[float, float, float] = DEFAULT_ALPHA
) -> float:
    """Weighted Euclidean distance between two indicator vectors."""
    if a.activity.shape != b.activity.shape:
        raise ValueError(
            f"indicator dimensions differ: {a.activity.shape} vs {b.activity.shape}"
        )
    if any(w < 0 for w in alpha):
        raise ValueError("alpha weights must be non-negative")
    total = 0.0
    pairs = ((a.activity, b.activity), (a.share, b.share), (a.emphasis, b.emphasis))
    for w, (va, vb) in zip(alpha, pairs):
        diff = va - vb
        total += w * float(diff @ diff)
    return float(np.sqrt(total))


def _scaled(ind: IndicatorVector, activity_max: float) -> IndicatorVector:
    if activity_max <= 0:
        return ind
    return IndicatorVector(
        ind.company, ind.year, ind.activity / activity_max, ind.share, ind.emphasis
    )


def top_competitors(
    index: CorpusIndex,
    company: str,
    year: int,
    m: int,
    alpha: tuple[float, float, float] = DEFAULT_ALPHA,
    standardize_activity: bool = True,
) -> CompetitorList:
    """The m companies closest to `company` in year `year`.

    Zero-filing companies are excluded as candidates.  When alpha[0] > 0
    and standardize_activity is set, activity counts are divided by the
    year's max count so the raw-count indicator is comparable in scale
    to the two fractional ones.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    all_inds = {c: indicators(index, c, year) for c in index.companies}
    if alpha[0] > 0 and standardize_activity:
        amax = max(float(ind.activity.max()) for ind in all_inds.values())
        all_inds = {c: _scaled(ind, amax) for c, ind in all_inds.items()}
    self_ind = all_inds[company]
    scored = []
    for c in index.companies:
        if c == company:
            continue
        if not index.company_year_patents(c, year):
            continue
        scored.append((competitive_score(self_ind, all_inds[c], alpha), c))
    scored.sort(key=lambda sc: (sc[0], sc[1]))
    top = scored[:m]
    raw = np.array([1.0 / (1.0 + s) for s, _ in top])
    weights = raw / raw.sum() if len(raw) else raw
    entries = tuple((c, s, float(w)) for (s, c), w in zip(top, weights))
    return CompetitorList(company=company, year=year, entries=entries)
