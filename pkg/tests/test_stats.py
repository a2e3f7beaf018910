import pytest

from techtrace.corpus import build_index
from techtrace.stats import stats

from conftest import make_record


@pytest.fixture
def small_index():
    recs = [
        make_record("p1", "acme", 2000, ["H04W"]),
        make_record("p2", "acme", 2000, ["G06F"]),
        make_record("p3", "acme", 2000, ["H04L", "G06N"]),
        make_record("p4", "zeta", 2000, ["A01B"]),
        make_record("p5", "zeta", 2001, ["A01B", "A01C"]),
        make_record("p6", "acme", 2001, ["H04W"]),
    ]
    return build_index(recs, "subclass")


def test_section_counts_by_hand(small_index):
    report = stats(small_index)
    assert report.years == (2000, 2001)
    assert report.sections == ("A", "G", "H")
    # 2000: H04W, G06F, H04L+G06N (one patent with both G and H), A01B
    assert report.section_counts[2000] == {"H": 2, "G": 2, "A": 1}
    assert report.section_counts[2001] == {"A": 1, "H": 1}


def test_section_share_sums_to_one(small_index):
    report = stats(small_index)
    for year in report.years:
        total = sum(report.section_share(year).values())
        assert total == pytest.approx(1.0, abs=1e-12)


def test_company_shares_sum_to_one(small_index):
    report = stats(small_index)
    for shares in report.company_section_shares.values():
        assert sum(shares.values()) == pytest.approx(1.0, abs=1e-12)
    # acme 2000: 4 section tags over 3 patents -> H: 2/4, G: 2/4
    acme = report.company_section_shares[("acme", 2000)]
    assert acme == {"G": 0.5, "H": 0.5}


def test_zero_filing_years_absent(small_index):
    report = stats(small_index)
    assert ("zeta", 2002) not in report.company_section_shares


def test_growth_last_minus_first(small_index):
    report = stats(small_index)
    growth = dict(report.growth)
    # A01C appears only in 2001 (+1); G06F only in 2000 (-1); H04W flat
    assert growth["A01C"] == 1
    assert growth["G06F"] == -1
    assert growth["H04W"] == 0
    values = [g for _, g in report.growth]
    assert values == sorted(values, reverse=True)


def test_to_rows_covers_all_year_sections(small_index):
    rows = stats(small_index).to_rows()
    assert rows[0] == ("year", "section", "patents")
    assert len(rows) == 1 + 2 * 3
    assert (2000, "H", 2) in rows


def test_stats_on_synth_corpus(micro_synth):
    report = stats(micro_synth)
    assert report.years == tuple(micro_synth.years)
    total_tagged = sum(sum(c.values()) for c in report.section_counts.values())
    assert total_tagged >= len(micro_synth.patents)
