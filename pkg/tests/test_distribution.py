import numpy as np
import pytest

from techtrace.corpus import build_index
from techtrace.distribution import distribution, distribution_matrix, distribution_tensor

from conftest import make_record, random_micro_corpus


def brute_force_cell(records, level_codes, company, year, code):
    """Independent oracle: count straight over the record list."""
    filed = [r for r in records if r.assignee_id == company and r.filing_year == year]
    if not filed:
        return 0.0
    tagged = [
        r for r in filed if code in {str(c.truncate("subclass")) for c in r.cpc_codes}
    ]
    return len(tagged) / len(filed)


def test_simple_ratio():
    recs = [make_record(f"p{k}", "acme", 2000, ["H04W"] if k < 3 else ["G06F"]) for k in range(4)]
    index = build_index(recs, "subclass")
    row = distribution(index, "acme", 2000)
    assert row[list(index.technologies).index("H04W")] == 0.75
    assert row[list(index.technologies).index("G06F")] == 0.25


def test_zero_filing_year_gives_zero_row():
    recs = [
        make_record("p1", "acme", 2000, ["H04W"]),
        make_record("p2", "zeta", 2001, ["H04W"]),
    ]
    index = build_index(recs, "subclass")
    assert not distribution(index, "acme", 2001).any()


def test_multilabel_row_can_exceed_one():
    # one patent with two codes: both entries 1.0, row sum 2.0
    recs = [make_record("p1", "acme", 2000, ["H04W", "G06F"])]
    index = build_index(recs, "subclass")
    row = distribution(index, "acme", 2000)
    np.testing.assert_array_equal(row, [1.0, 1.0])
    assert row.sum() == 2.0


def test_unknown_company_or_year():
    recs = [make_record("p1", "acme", 2000, ["H04W"])]
    index = build_index(recs, "subclass")
    with pytest.raises(KeyError):
        distribution(index, "other", 2000)
    with pytest.raises(KeyError):
        distribution(index, "acme", 1999)


@pytest.mark.parametrize("seed", range(5))
def test_matches_brute_force_oracle(seed):
    index, records = random_micro_corpus(np.random.default_rng(seed))
    tensor = distribution_tensor(index)
    for year in index.years:
        values = tensor[year].values
        for i, company in enumerate(index.companies):
            for j, code in enumerate(index.technologies):
                expected = brute_force_cell(records, index.technologies, company, year, code)
                assert values[i, j] == pytest.approx(expected, abs=1e-12)


def test_entries_in_unit_interval_and_positivity_iff_intersection():
    index, _ = random_micro_corpus(np.random.default_rng(42))
    for year in index.years:
        values = distribution_matrix(index, year).values
        assert ((values >= 0) & (values <= 1)).all()
        for i, company in enumerate(index.companies):
            filed = index.company_year_patents(company, year)
            for j, code in enumerate(index.technologies):
                inter = filed & index.tech_year_patents(code, year)
                assert (values[i, j] > 0) == bool(inter)


def test_single_label_rows_sum_to_one():
    recs = [
        make_record(f"p{k}", "acme", 2000, [code])
        for k, code in enumerate(["H04W", "H04W", "G06F"])
    ]
    index = build_index(recs, "subclass")
    assert distribution(index, "acme", 2000).sum() == pytest.approx(1.0, abs=1e-12)


def test_duplicating_patents_leaves_row_unchanged():
    recs = [
        make_record("p1", "acme", 2000, ["H04W", "G06F"]),
        make_record("p2", "acme", 2000, ["H04W"]),
    ]
    index = build_index(recs, "subclass")
    row1 = distribution(index, "acme", 2000)
    dup = recs + [
        make_record("q1", "acme", 2000, ["H04W", "G06F"]),
        make_record("q2", "acme", 2000, ["H04W"]),
    ]
    row2 = distribution(build_index(dup, "subclass"), "acme", 2000)
    np.testing.assert_allclose(row1, row2, atol=1e-15)


def test_permuting_record_order_gives_identical_tensor():
    index1, records = random_micro_corpus(np.random.default_rng(8))
    index2 = build_index(records[::-1], "subclass")
    for year in index1.years:
        np.testing.assert_array_equal(
            distribution_matrix(index1, year).values, distribution_matrix(index2, year).values
        )
