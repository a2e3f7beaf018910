import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from techtrace.competitors import (
    IndicatorVector,
    competitive_score,
    indicators,
    top_competitors,
)
from techtrace.corpus import build_index
from techtrace.features import competitor_weight_matrix
from techtrace.synth import SynthConfig, synth_corpus

from conftest import make_record, random_micro_corpus


def brute_indicators(records, technologies, company, year):
    """Independent set-arithmetic oracle over the raw records."""
    filed = {r.patent_id for r in records if r.assignee_id == company and r.filing_year == year}
    out = {}
    for code in technologies:
        tagged = {
            r.patent_id
            for r in records
            if r.filing_year == year and code in {str(c.truncate("subclass")) for c in r.cpc_codes}
        }
        both = len(filed & tagged)
        out[code] = (
            both,
            both / len(tagged) if tagged else 0.0,
            both / len(filed) if filed else 0.0,
        )
    return out


def test_monopoly_share_is_one():
    recs = [make_record(f"p{k}", "acme", 2000, ["H04W"]) for k in range(5)]
    recs.append(make_record("q", "zeta", 2000, ["G06F"]))
    index = build_index(recs, "subclass")
    ind = indicators(index, "acme", 2000)
    j = list(index.technologies).index("H04W")
    assert ind.share[j] == 1.0
    assert ind.activity[j] == 5


def test_zero_filing_company_all_zero():
    recs = [
        make_record("p1", "acme", 2000, ["H04W"]),
        make_record("p2", "zeta", 2001, ["H04W"]),
    ]
    index = build_index(recs, "subclass")
    ind = indicators(index, "zeta", 2000)
    assert not ind.activity.any() and not ind.share.any() and not ind.emphasis.any()


@pytest.mark.parametrize("seed", range(5))
def test_indicators_match_brute_force(seed):
    index, records = random_micro_corpus(np.random.default_rng(seed + 100))
    for year in index.years:
        for company in index.companies:
            ind = indicators(index, company, year)
            oracle = brute_indicators(records, index.technologies, company, year)
            for j, code in enumerate(index.technologies):
                act, share, emph = oracle[code]
                assert ind.activity[j] == act
                assert ind.share[j] == pytest.approx(share, abs=1e-12)
                assert ind.emphasis[j] == pytest.approx(emph, abs=1e-12)


def _vec(company, year, a, s, e):
    return IndicatorVector(company, year, np.asarray(a, float), np.asarray(s, float), np.asarray(e, float))


def test_score_zero_on_identical():
    v = _vec("a", 2000, [1, 2], [0.5, 0.1], [0.3, 0.7])
    assert competitive_score(v, v, (1, 1, 1)) == 0.0


def test_score_hand_computed():
    # 2 companies, 2 technologies, alpha = (1, 1, 1): 12 numbers by hand
    a = _vec("a", 2000, [3, 1], [0.6, 0.2], [0.75, 0.25])
    b = _vec("b", 2000, [1, 2], [0.4, 0.4], [0.33, 0.67])
    expected = math.sqrt(
        (3 - 1) ** 2 + (1 - 2) ** 2
        + (0.6 - 0.4) ** 2 + (0.2 - 0.4) ** 2
        + (0.75 - 0.33) ** 2 + (0.25 - 0.67) ** 2
    )
    assert competitive_score(a, b, (1, 1, 1)) == pytest.approx(expected, abs=1e-12)
    assert competitive_score(b, a, (1, 1, 1)) == pytest.approx(expected, abs=1e-12)


def test_score_dimension_mismatch():
    a = _vec("a", 2000, [1], [0.5], [0.5])
    b = _vec("b", 2000, [1, 2], [0.5, 0.5], [0.5, 0.5])
    with pytest.raises(ValueError, match="dimension"):
        competitive_score(a, b)


unit = st.floats(0, 1, allow_nan=False)
vec3 = st.tuples(
    st.lists(st.integers(0, 20), min_size=3, max_size=3),
    st.lists(unit, min_size=3, max_size=3),
    st.lists(unit, min_size=3, max_size=3),
)


@settings(max_examples=200)
@given(vec3, vec3, vec3)
def test_pseudometric_axioms(ta, tb, tc):
    a = _vec("a", 2000, *ta)
    b = _vec("b", 2000, *tb)
    c = _vec("c", 2000, *tc)
    alpha = (0.2, 0.5, 0.3)
    ab = competitive_score(a, b, alpha)
    ba = competitive_score(b, a, alpha)
    assert ab >= 0
    assert ab == pytest.approx(ba, abs=1e-12)
    assert competitive_score(a, a, alpha) == 0.0
    assert ab <= competitive_score(a, c, alpha) + competitive_score(c, b, alpha) + 1e-9


def test_planted_group_mate_ranks_first():
    cfg = SynthConfig(
        m_companies=6,
        n_technologies=10,
        t_years=2,
        patents_per_company_year=60,
        group_count=3,
        concentration=0.2,
    )
    index = synth_corpus(cfg, 5)
    # companies 0 and 3 share a planted preference vector
    top = top_competitors(index, "C000", cfg.year_start, m=1)
    assert top.entries[0][0] == "C003"


def test_two_company_corpus_returns_the_other():
    recs = [
        make_record("p1", "acme", 2000, ["H04W"]),
        make_record("p2", "zeta", 2000, ["G06F"]),
    ]
    index = build_index(recs, "subclass")
    top = top_competitors(index, "acme", 2000, m=10)
    assert [e[0] for e in top.entries] == ["zeta"]
    assert top.entries[0][2] == 1.0  # single entry, normalized weight


def test_ranking_scale_free_for_fraction_indicators():
    index, records = random_micro_corpus(np.random.default_rng(77))
    year = index.year_min
    ranks = {
        c: [e[0] for e in top_competitors(index, c, year, m=index.M, alpha=(0, 1, 1)).entries]
        for c in index.companies
    }
    dup = list(records)
    for k, r in enumerate(records):
        for copy in range(2):  # duplicate every patent 2 extra times
            dup.append(
                make_record(f"dup{k}_{copy}", r.assignee_id, r.filing_year,
                            [str(c) for c in r.cpc_codes], r.tokens)
            )
    index2 = build_index(dup, "subclass")
    for c in index.companies:
        got = [e[0] for e in top_competitors(index2, c, year, m=index2.M, alpha=(0, 1, 1)).entries]
        assert got == ranks[c]


def test_weights_descend_and_normalize(micro_synth):
    top = top_competitors(micro_synth, micro_synth.companies[0], micro_synth.year_min, m=3)
    scores = [e[1] for e in top.entries]
    weights = [e[2] for e in top.entries]
    assert scores == sorted(scores)
    assert weights == sorted(weights, reverse=True)
    assert sum(weights) == pytest.approx(1.0, abs=1e-12)
    assert all(0 < w <= 1 for w in weights)


def test_weight_matrix_matches_top_competitors(micro_synth):
    year = micro_synth.year_min
    m = 2
    matrix = competitor_weight_matrix(micro_synth, year, m)
    for i, company in enumerate(micro_synth.companies):
        top = top_competitors(micro_synth, company, year, m)
        expected = np.zeros(micro_synth.M)
        for comp, _, w in top.entries:
            expected[micro_synth.companies.index(comp)] = w
        np.testing.assert_allclose(matrix[i], expected, atol=1e-12)
