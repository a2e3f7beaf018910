import pytest
from hypothesis import given, strategies as st

from techtrace.cpc import CpcCode, CpcParseError, parse_cpc


def test_parse_full_subclass():
    code = parse_cpc("H04J")
    assert code.section == "H"
    assert code.klass == "04"
    assert code.subclass == "J"
    assert code.group is None


def test_parse_section_only():
    code = parse_cpc("H")
    assert code == CpcCode("H")
    assert code.level == "section"


def test_parse_group():
    code = parse_cpc("H04W72/04")
    assert code.group == "72/04"
    assert str(code) == "H04W72/04"


def test_invalid_section_rejected():
    with pytest.raises(CpcParseError, match="section"):
        parse_cpc("K01A")


@pytest.mark.parametrize("bad", ["", "  ", "1A", "H4W", "H04W-3"])
def test_malformed_rejected(bad):
    with pytest.raises(CpcParseError):
        parse_cpc(bad)


def test_truncate_is_prefix():
    code = parse_cpc("G06F17/30")
    assert str(code.truncate("section")) == "G"
    assert str(code.truncate("class")) == "G06"
    assert str(code.truncate("subclass")) == "G06F"
    assert str(code.truncate("group")) == "G06F17/30"


def test_truncate_unknown_level():
    with pytest.raises(ValueError):
        parse_cpc("G06F").truncate("supergroup")


@given(
    st.sampled_from("ABCDEFGHY"),
    st.integers(0, 99),
    st.sampled_from("ABCDEFGHIJKLMNOPQRSTUVWXYZ"),
)
def test_roundtrip(section, klass, subclass):
    text = f"{section}{klass:02d}{subclass}"
    assert str(parse_cpc(text)) == text
