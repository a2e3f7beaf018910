"""Patent corpus ingestion and indexing.

Input is line-delimited JSON, one patent per line:

    {"patent_id": "...", "assignee": "...", "year": 2001,
     "cpc": ["H04W", "G06F"], "text": "title and abstract ..."}

`assignee` may also be a list; such rows are split into one record per
assignee (patent ids are suffixed with ``#<k>`` to stay unique).

The built `CorpusIndex` is immutable and safe for concurrent reads.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .cpc import CPC_LEVELS, CpcCode, CpcParseError, parse_cpc


class CorpusError(Exception):
    """Malformed corpus input."""


class EmptyCorpusError(CorpusError):
    """No companies survive filtering."""


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, strip punctuation, split on whitespace."""
    return tuple(_TOKEN_RE.findall(text.lower()))


@dataclass(frozen=True)
class PatentRecord:
    patent_id: str
    assignee_id: str
    filing_year: int
    cpc_codes: frozenset[CpcCode]
    tokens: tuple[str, ...]
    text_missing: bool = False

    def __post_init__(self) -> None:
        if not self.cpc_codes:
            raise CorpusError(f"patent {self.patent_id}: empty CPC code set")
        if not self.tokens and not self.text_missing:
            raise CorpusError(
                f"patent {self.patent_id}: empty tokens without text_missing flag"
            )


@dataclass(frozen=True)
class CorpusIndex:
    """Bidirectional indexes over companies x technologies x years."""

    companies: tuple[str, ...]
    technologies: tuple[str, ...]  # canonical code strings at `level`
    level: str
    year_min: int
    year_max: int
    min_patents: int
    patents: dict[str, PatentRecord]
    by_company_year: dict[tuple[str, int], frozenset[str]] = field(repr=False)
    by_tech_year: dict[tuple[str, int], frozenset[str]] = field(repr=False)

    @property
    def M(self) -> int:
        return len(self.companies)

    @property
    def N(self) -> int:
        return len(self.technologies)

    @property
    def T(self) -> int:
        return self.year_max - self.year_min + 1

    @property
    def years(self) -> range:
        return range(self.year_min, self.year_max + 1)

    def company_year_patents(self, company: str, year: int) -> frozenset[str]:
        self._check(company, year)
        return self.by_company_year.get((company, year), frozenset())

    def tech_year_patents(self, tech: str, year: int) -> frozenset[str]:
        if tech not in self._tech_set:
            raise KeyError(f"unknown technology {tech!r}")
        if year not in self.years:
            raise KeyError(f"year {year} outside corpus range {self.year_min}-{self.year_max}")
        return self.by_tech_year.get((tech, year), frozenset())

    def _check(self, company: str, year: int) -> None:
        if company not in self._company_set:
            raise KeyError(f"unknown company {company!r}")
        if year not in self.years:
            raise KeyError(f"year {year} outside corpus range {self.year_min}-{self.year_max}")

    def __post_init__(self) -> None:
        object.__setattr__(self, "_company_set", frozenset(self.companies))
        object.__setattr__(self, "_tech_set", frozenset(self.technologies))

    def patent_techs(self, patent_id: str) -> tuple[str, ...]:
        """Distinct technology codes of a patent at the index level."""
        rec = self.patents[patent_id]
        codes = {str(c.truncate(self.level)) for c in rec.cpc_codes}
        return tuple(sorted(codes & self._tech_set))

    def ordering_hash(self) -> str:
        h = hashlib.sha256()
        for c in self.companies:
            h.update(c.encode())
        h.update(b"|")
        for t in self.technologies:
            h.update(t.encode())
        return h.hexdigest()


def _parse_line(line: str, lineno: int) -> list[PatentRecord]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusError(f"line {lineno}: invalid JSON ({e.msg})") from e
    try:
        pid = str(obj["patent_id"])
        assignee = obj["assignee"]
        year = obj["year"]
        cpc = obj["cpc"]
        text = obj.get("text", "")
    except KeyError as e:
        raise CorpusError(f"line {lineno}: missing field {e.args[0]!r}") from e
    if not isinstance(year, int):
        raise CorpusError(f"line {lineno}: year must be an integer")
    if not isinstance(cpc, list) or not cpc:
        raise CorpusError(f"line {lineno}: cpc must be a non-empty list")
    try:
        codes = frozenset(parse_cpc(c) for c in cpc)
    except CpcParseError as e:
        raise CorpusError(f"line {lineno}: {e}") from e
    tokens = tokenize(text)
    assignees = assignee if isinstance(assignee, list) else [assignee]
    if not assignees:
        raise CorpusError(f"line {lineno}: empty assignee list")
    records = []
    for k, a in enumerate(assignees):
        rec_id = pid if len(assignees) == 1 else f"{pid}#{k}"
        records.append(
            PatentRecord(
                patent_id=rec_id,
                assignee_id=str(a),
                filing_year=year,
                cpc_codes=codes,
                tokens=tokens,
                text_missing=not tokens,
            )
        )
    return records


def build_index(
    records: list[PatentRecord], level: str, min_patents: int = 1
) -> CorpusIndex:
    """Index records, keeping companies with >= min_patents total patents."""
    if level not in CPC_LEVELS:
        raise CorpusError(f"unknown CPC level {level!r}")
    seen: set[str] = set()
    for r in records:
        if r.patent_id in seen:
            raise CorpusError(f"duplicate patent id {r.patent_id!r}")
        seen.add(r.patent_id)

    counts: dict[str, int] = {}
    for r in records:
        counts[r.assignee_id] = counts.get(r.assignee_id, 0) + 1
    companies = tuple(sorted(c for c, n in counts.items() if n >= min_patents))
    if not companies:
        raise EmptyCorpusError(
            f"no company has at least {min_patents} patents (corpus of {len(records)})"
        )
    keep = frozenset(companies)
    kept = [r for r in records if r.assignee_id in keep]

    techs = sorted({str(c.truncate(level)) for r in kept for c in r.cpc_codes})
    year_min = min(r.filing_year for r in kept)
    year_max = max(r.filing_year for r in kept)

    by_cy: dict[tuple[str, int], set[str]] = {}
    by_ty: dict[tuple[str, int], set[str]] = {}
    for r in kept:
        by_cy.setdefault((r.assignee_id, r.filing_year), set()).add(r.patent_id)
        for code in {str(c.truncate(level)) for c in r.cpc_codes}:
            by_ty.setdefault((code, r.filing_year), set()).add(r.patent_id)

    return CorpusIndex(
        companies=companies,
        technologies=tuple(techs),
        level=level,
        year_min=year_min,
        year_max=year_max,
        min_patents=min_patents,
        patents={r.patent_id: r for r in kept},
        by_company_year={k: frozenset(v) for k, v in by_cy.items()},
        by_tech_year={k: frozenset(v) for k, v in by_ty.items()},
    )


def ingest(path: str | Path, cpc_level: str = "subclass", min_patents: int = 1) -> CorpusIndex:
    """Read a line-delimited patent file and build a filtered index."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"patent file not found: {path}")
    records: list[PatentRecord] = []
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            records.extend(_parse_line(line, lineno))
    return build_index(records, cpc_level, min_patents)


def export_corpus(index: CorpusIndex, outdir: str | Path) -> None:
    """Write patents.jsonl plus a manifest; `load_corpus` round-trips it."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with (outdir / "patents.jsonl").open("w", encoding="utf-8") as f:
        for pid in sorted(index.patents):
            r = index.patents[pid]
            f.write(
                json.dumps(
                    {
                        "patent_id": r.patent_id,
                        "assignee": r.assignee_id,
                        "year": r.filing_year,
                        "cpc": sorted(str(c) for c in r.cpc_codes),
                        "text": " ".join(r.tokens),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    manifest = {
        "M": index.M,
        "N": index.N,
        "T": index.T,
        "level": index.level,
        "min_patents": index.min_patents,
        "year_min": index.year_min,
        "year_max": index.year_max,
        "ordering_hash": index.ordering_hash(),
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_corpus(corpus_dir: str | Path) -> CorpusIndex:
    """Re-ingest an exported corpus directory."""
    corpus_dir = Path(corpus_dir)
    manifest_path = corpus_dir / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest.json in {corpus_dir}")
    manifest = json.loads(manifest_path.read_text())
    index = ingest(
        corpus_dir / "patents.jsonl",
        cpc_level=manifest["level"],
        min_patents=manifest["min_patents"],
    )
    if index.ordering_hash() != manifest["ordering_hash"]:
        raise CorpusError(f"corpus in {corpus_dir} does not match its manifest")
    return index
