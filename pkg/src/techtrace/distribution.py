"""Per-company yearly technology distributions.

Entry (i, j) for year t is |patents of i in t tagged j| / |patents of i
in t|.  With multi-label codes a row can sum past 1; rows are reported
as-is, never renormalized.  A company with no filings in t gets a zero
row.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CorpusIndex


@dataclass(frozen=True)
class DistributionMatrix:
    year: int
    values: np.ndarray  # (M, N), rows follow index.companies, cols index.technologies


def distribution(index: CorpusIndex, company: str, year: int) -> np.ndarray:
    """Technology-share row of one company in one year (length N)."""
    filed = index.company_year_patents(company, year)
    row = np.zeros(index.N)
    if not filed:
        return row
    for j, tech in enumerate(index.technologies):
        row[j] = len(filed & index.tech_year_patents(tech, year)) / len(filed)
    return row


def distribution_matrix(index: CorpusIndex, year: int) -> DistributionMatrix:
    values = np.stack([distribution(index, c, year) for c in index.companies])
    return DistributionMatrix(year=year, values=values)


def distribution_tensor(index: CorpusIndex) -> dict[int, DistributionMatrix]:
    """One DistributionMatrix per corpus year."""
    return {t: distribution_matrix(index, t) for t in index.years}
