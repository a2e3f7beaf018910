"""Temporal evaluation protocol, NDCG@K, and baseline forecasters.

A period [y0, y1] trains on input years y0..y1-1 with target y1; the
test window is the same shape shifted forward one year (input y0+1..y1,
target y1+1, which must exist in the corpus).

NDCG uses graded relevance: the gain of a technology is its true
distribution value in the target year, with a log2(rank+1) discount.
Companies whose target row is all zeros are excluded from the macro
average (their NDCG is undefined) and counted in the report.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CorpusIndex
from .distribution import distribution, distribution_matrix


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    train_input_years: tuple[int, ...]
    train_target_year: int
    test_input_years: tuple[int, ...]
    test_target_year: int


@dataclass(frozen=True)
class RankingResult:
    company: str
    ranked: tuple[tuple[str, float], ...]  # permutation of all technologies
    truth: np.ndarray  # ground-truth distribution row for the target year


@dataclass(frozen=True)
class NdcgReport:
    ks: tuple[int, ...]
    per_company: dict[str, dict[int, float]]
    macro: dict[int, float]
    excluded: int  # companies skipped for all-zero truth rows


def make_split(index: CorpusIndex, y0: int, y1: int) -> SplitSpec:
    if y1 <= y0:
        raise SplitError(f"period {y0}-{y1} has no input years")
    if y0 < index.year_min:
        raise SplitError(f"period start {y0} precedes corpus ({index.year_min})")
    if y1 + 1 > index.year_max:
        raise SplitError(
            f"period {y0}-{y1} needs test target year {y1 + 1}, corpus ends {index.year_max}"
        )
    return SplitSpec(
        train_input_years=tuple(range(y0, y1)),
        train_target_year=y1,
        test_input_years=tuple(range(y0 + 1, y1 + 1)),
        test_target_year=y1 + 1,
    )


def make_splits(index: CorpusIndex, periods: list[tuple[int, int]]) -> list[SplitSpec]:
    return [make_split(index, y0, y1) for y0, y1 in periods]


def ndcg_at_k(ranked: list[str], truth: dict[str, float] | np.ndarray, k: int, technologies=None) -> float:
    """Graded NDCG with linear gain and log2(rank+1) discount."""
    if k < 1:
        raise ValueError("K must be >= 1")
    if isinstance(truth, np.ndarray):
        if technologies is None:
            raise ValueError("technologies required when truth is an array")
        truth = {t: float(v) for t, v in zip(technologies, truth)}
    gains = np.array([truth.get(t, 0.0) for t in ranked[:k]])
    if not any(v > 0 for v in truth.values()):
        raise ValueError("NDCG undefined for an all-zero truth row")
    discounts = 1.0 / np.log2(np.arange(2, gains.size + 2))
    dcg = float(gains @ discounts)
    # contiguous copy + shared discounts keep the ideal-ranking case
    # bit-identical to dcg, so a perfect ranking scores exactly 1.0
    ideal = np.sort(np.array(list(truth.values())))[::-1][:k].copy()
    if ideal.size == gains.size:
        idcg = float(ideal @ discounts)
    else:
        idcg = float(ideal @ (1.0 / np.log2(np.arange(2, ideal.size + 2))))
    return dcg / idcg


def _rank_row(index: CorpusIndex, row: np.ndarray) -> tuple[tuple[str, float], ...]:
    order = np.lexsort((np.arange(index.N), -row))
    return tuple((index.technologies[j], float(row[j])) for j in order)


def baseline_persistence(index: CorpusIndex, split: SplitSpec) -> dict[str, RankingResult]:
    """Rank next year's technologies by the last observed input year."""
    last = split.test_input_years[-1]
    truth_matrix = distribution_matrix(index, split.test_target_year).values
    out = {}
    for i, company in enumerate(index.companies):
        row = distribution(index, company, last)
        out[company] = RankingResult(
            company=company, ranked=_rank_row(index, row), truth=truth_matrix[i]
        )
    return out


def baseline_lr(index: CorpusIndex, split: SplitSpec, reg: float = 1e-6) -> dict[str, RankingResult]:
    """Per-technology ridge regression of the target-year value from the
    company's input-year values for that technology."""
    if reg <= 0:
        raise ValueError("reg must be positive")
    if len(split.train_input_years) < 2:
        raise SplitError("linear-regression baseline needs at least 2 input years")
    train_x = np.stack(
        [distribution_matrix(index, t).values for t in split.train_input_years], axis=-1
    )  # (M, N, P)
    train_y = distribution_matrix(index, split.train_target_year).values  # (M, N)
    test_x = np.stack(
        [distribution_matrix(index, t).values for t in split.test_input_years], axis=-1
    )
    truth_matrix = distribution_matrix(index, split.test_target_year).values
    m, n, p = train_x.shape
    preds = np.zeros((m, n))
    for j in range(n):
        feats = np.hstack([train_x[:, j, :], np.ones((m, 1))])  # (M, P+1)
        gram = feats.T @ feats + reg * np.eye(p + 1)
        coef = np.linalg.solve(gram, feats.T @ train_y[:, j])
        test_feats = np.hstack([test_x[:, j, :], np.ones((m, 1))])
        preds[:, j] = test_feats @ coef
    out = {}
    for i, company in enumerate(index.companies):
        out[company] = RankingResult(
            company=company, ranked=_rank_row(index, preds[i]), truth=truth_matrix[i]
        )
    return out


def oracle_forecaster(index: CorpusIndex, split: SplitSpec) -> dict[str, RankingResult]:
    """Ranks by the truth itself; NDCG upper bound."""
    truth_matrix = distribution_matrix(index, split.test_target_year).values
    return {
        company: RankingResult(
            company=company,
            ranked=_rank_row(index, truth_matrix[i]),
            truth=truth_matrix[i],
        )
        for i, company in enumerate(index.companies)
    }


def evaluate(
    forecaster,
    index: CorpusIndex,
    split: SplitSpec,
    ks: tuple[int, ...] = (10, 20, 50, 100),
) -> NdcgReport:
    """Run a forecaster on the test window and macro-average NDCG@K.

    `forecaster(index, split)` must return {company: RankingResult}.
    """
    results = forecaster(index, split)
    per_company: dict[str, dict[int, float]] = {}
    excluded = 0
    for company in index.companies:
        res = results[company]
        if not np.any(res.truth > 0):
            excluded += 1
            continue
        truth = {t: float(v) for t, v in zip(index.technologies, res.truth)}
        ranked = [t for t, _ in res.ranked]
        per_company[company] = {k: ndcg_at_k(ranked, truth, k) for k in ks}
    macro = {
        k: (float(np.mean([v[k] for v in per_company.values()])) if per_company else 0.0)
        for k in ks
    }
    return NdcgReport(ks=tuple(ks), per_company=per_company, macro=macro, excluded=excluded)


def dtt_forecaster(train_fn, forecast_fn, cfg):
    """Adapt the recurrent model to the evaluate() interface: train on
    the split's train window, forecast on its test window."""

    def run(index: CorpusIndex, split: SplitSpec) -> dict[str, RankingResult]:
        model, _ = train_fn(index, list(split.train_input_years), split.train_target_year, cfg)
        rankings = forecast_fn(model, index, list(split.test_input_years))
        truth_matrix = distribution_matrix(index, split.test_target_year).values
        return {
            company: RankingResult(
                company=company,
                ranked=tuple(rankings[company]),
                truth=truth_matrix[i],
            )
            for i, company in enumerate(index.companies)
        }

    return run
