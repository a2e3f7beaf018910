"""Corpus statistics: yearly section counts, company technology shares,
top-growing technologies."""
from __future__ import annotations

from dataclasses import dataclass

from .corpus import CorpusIndex
from .distribution import distribution


@dataclass(frozen=True)
class StatsReport:
    years: tuple[int, ...]
    sections: tuple[str, ...]
    # section_counts[year][section] = patents filed that year carrying the section
    section_counts: dict[int, dict[str, int]]
    # company_section_shares[(company, year)][section], rows sum to 1 where the company filed
    company_section_shares: dict[tuple[str, int], dict[str, float]]
    # (tech, count in last year - count in first year), descending
    growth: tuple[tuple[str, int], ...]

    def section_share(self, year: int) -> dict[str, float]:
        counts = self.section_counts[year]
        total = sum(counts.values())
        if total == 0:
            return {s: 0.0 for s in self.sections}
        return {s: counts.get(s, 0) / total for s in self.sections}

    def to_rows(self) -> list[tuple]:
        rows = [("year", "section", "patents")]
        for year in self.years:
            for s in self.sections:
                rows.append((year, s, self.section_counts[year].get(s, 0)))
        return rows


def stats(index: CorpusIndex) -> StatsReport:
    sections = tuple(sorted({t[0] for t in index.technologies}))
    years = tuple(index.years)

    section_counts: dict[int, dict[str, int]] = {t: {} for t in years}
    for rec in index.patents.values():
        secs = {c.section for c in rec.cpc_codes}
        per_year = section_counts[rec.filing_year]
        for s in secs & set(sections):
            per_year[s] = per_year.get(s, 0) + 1

    shares: dict[tuple[str, int], dict[str, float]] = {}
    for company in index.companies:
        for year in years:
            filed = index.company_year_patents(company, year)
            if not filed:
                continue
            counts: dict[str, int] = {}
            for pid in filed:
                # a multi-section patent contributes fractionally so shares sum to 1
                secs = sorted({c.section for c in index.patents[pid].cpc_codes})
                for s in secs:
                    counts[s] = counts.get(s, 0) + 1
            row_total = sum(counts.values())
            shares[(company, year)] = {s: c / row_total for s, c in counts.items()}

    tech_counts = {
        (j, t): len(index.tech_year_patents(j, t)) for j in index.technologies for t in years
    }
    growth = sorted(
        ((j, tech_counts[(j, years[-1])] - tech_counts[(j, years[0])]) for j in index.technologies),
        key=lambda jg: (-jg[1], jg[0]),
    )
    return StatsReport(
        years=years,
        sections=sections,
        section_counts=section_counts,
        company_section_shares=shares,
        growth=tuple(growth),
    )
