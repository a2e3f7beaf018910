"""Collaborative technology recognition.

Two technologies collaborate in a year when they share patents; the
edge weight is the Jaccard coefficient of their patent sets that year.
The graph is built in a single pass over patents, accumulating pair
co-occurrence counts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import CorpusIndex


@dataclass(frozen=True)
class CollabGraph:
    year: int
    technologies: tuple[str, ...]
    weights: dict[tuple[str, str], float] = field(repr=False)  # keys sorted pairs, > 0 only

    def weight(self, j1: str, j2: str) -> float:
        if j1 == j2:
            return 0.0
        key = (j1, j2) if j1 < j2 else (j2, j1)
        return self.weights.get(key, 0.0)

    def neighbors(self, j: str) -> list[tuple[str, float]]:
        if j not in self.technologies:
            raise KeyError(f"unknown technology {j!r}")
        out = []
        for (a, b), w in self.weights.items():
            if a == j:
                out.append((b, w))
            elif b == j:
                out.append((a, w))
        return out


def collab_weight(index: CorpusIndex, j1: str, j2: str, year: int) -> float:
    """Jaccard coefficient of two technologies' patent sets in a year."""
    if j1 == j2:
        raise ValueError("collab_weight requires two distinct technologies")
    s1 = index.tech_year_patents(j1, year)
    s2 = index.tech_year_patents(j2, year)
    union = len(s1 | s2)
    if union == 0:
        return 0.0  # no evidence either way
    return len(s1 & s2) / union


def build_collab_graph(index: CorpusIndex, year: int) -> CollabGraph:
    if year not in index.years:
        raise KeyError(f"year {year} outside corpus range")
    sizes = {j: len(index.tech_year_patents(j, year)) for j in index.technologies}
    common: dict[tuple[str, str], int] = {}
    for (company, t), pats in index.by_company_year.items():
        if t != year:
            continue
        for pid in pats:
            techs = index.patent_techs(pid)
            for a in range(len(techs)):
                for b in range(a + 1, len(techs)):
                    key = (techs[a], techs[b])
                    common[key] = common.get(key, 0) + 1
    weights = {}
    for (a, b), c in common.items():
        union = sizes[a] + sizes[b] - c
        weights[(a, b)] = c / union
    return CollabGraph(year=year, technologies=index.technologies, weights=weights)


def top_collaborators(graph: CollabGraph, j: str, n: int) -> list[tuple[str, float]]:
    """Up to n strongest collaborators of j, weight descending.

    Zero-weight pairs never appear, so the list may be shorter than n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    neigh = graph.neighbors(j)
    neigh.sort(key=lambda tw: (-tw[1], tw[0]))
    return neigh[:n]
