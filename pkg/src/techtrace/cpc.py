"""Cooperative Patent Classification (CPC) codes.

A CPC code is hierarchical: section (one letter), class (two digits),
subclass (one letter), group (digits, optionally "main/sub").  Example:
"H04W" is section H, class 04, subclass W.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

VALID_SECTIONS = frozenset("ABCDEFGHY")

CPC_LEVELS = ("section", "class", "subclass", "group")

_CPC_RE = re.compile(r"^([A-Za-z])(\d{2})?([A-Za-z])?(\d+(?:/\d+)?)?$")


class CpcParseError(ValueError):
    """Raised when a string cannot be parsed as a CPC code."""


@dataclass(frozen=True, order=True)
class CpcCode:
    section: str
    klass: str | None = None
    subclass: str | None = None
    group: str | None = None

    def __str__(self) -> str:
        return "".join(p for p in (self.section, self.klass, self.subclass, self.group) if p)

    @property
    def level(self) -> str:
        if self.group is not None:
            return "group"
        if self.subclass is not None:
            return "subclass"
        if self.klass is not None:
            return "class"
        return "section"

    def truncate(self, level: str) -> "CpcCode":
        """Drop components below `level`; a pure prefix operation."""
        if level not in CPC_LEVELS:
            raise ValueError(f"unknown CPC level: {level!r}")
        keep = CPC_LEVELS.index(level)
        return CpcCode(
            self.section,
            self.klass if keep >= 1 else None,
            self.subclass if keep >= 2 else None,
            self.group if keep >= 3 else None,
        )


def parse_cpc(text: str) -> CpcCode:
    """Parse a canonical CPC string such as "H04W" or "H04W72/04"."""
    s = text.strip()
    if not s:
        raise CpcParseError("empty CPC code")
    m = _CPC_RE.match(s)
    if m is None:
        raise CpcParseError(f"malformed CPC code {text!r}")
    section, klass, subclass, group = m.groups()
    section = section.upper()
    if section not in VALID_SECTIONS:
        raise CpcParseError(f"invalid section {section!r} in CPC code {text!r}")
    if subclass is not None:
        subclass = subclass.upper()
    # the hierarchy cannot skip levels
    if subclass is not None and klass is None:
        raise CpcParseError(f"CPC code {text!r} has a subclass but no class")
    if group is not None and subclass is None:
        raise CpcParseError(f"CPC code {text!r} has a group but no subclass")
    return CpcCode(section, klass, subclass, group)
