"""Sentiment/topic lexicons for natural-language rules.

A lexicon file is plain text, UTF-8, one entry per line::

    term<TAB>weight

Weights are decimals in [-1, 1]. A term may be a multi-word phrase; it is
matched token-wise with the same normalization as rule keywords. Blank lines
and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .errors import GuardgateError


def normalize_token(token: str) -> str:
    """NFKC-normalize and case-fold a single token."""
    return unicodedata.normalize("NFKC", token).casefold()


def normalize_phrase(phrase: str) -> tuple[str, ...]:
    """Split a phrase on whitespace and normalize each token."""
    return tuple(normalize_token(t) for t in phrase.split())


@dataclass(frozen=True)
class Lexicon:
    """Weighted term list. ``entries`` maps normalized token tuples to weights."""

    name: str
    entries: dict[tuple[str, ...], float]

    def __post_init__(self):
        for term, weight in self.entries.items():
            if not term:
                raise GuardgateError(f"lexicon {self.name!r}: empty term")
            if not -1.0 <= weight <= 1.0:
                raise GuardgateError(
                    f"lexicon {self.name!r}: weight {weight} for {' '.join(term)!r} outside [-1, 1]"
                )

    @property
    def max_phrase_len(self) -> int:
        return max((len(t) for t in self.entries), default=0)


def parse_lexicon(name: str, text: str) -> Lexicon:
    """Parse lexicon file content. Raises GuardgateError on malformed lines."""
    entries: dict[tuple[str, ...], float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "\t" not in stripped:
            raise GuardgateError(f"lexicon {name!r} line {lineno}: expected term<TAB>weight")
        term, _, weight_str = stripped.partition("\t")
        try:
            weight = float(weight_str)
        except ValueError:
            raise GuardgateError(
                f"lexicon {name!r} line {lineno}: weight {weight_str!r} is not a number"
            ) from None
        if not -1.0 <= weight <= 1.0:
            raise GuardgateError(
                f"lexicon {name!r} line {lineno}: weight {weight} outside [-1, 1]"
            )
        key = normalize_phrase(term)
        if not key:
            raise GuardgateError(f"lexicon {name!r} line {lineno}: empty term")
        entries[key] = weight
    return Lexicon(name=name, entries=entries)


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon from a ``term<TAB>weight`` file."""
    p = Path(path)
    return parse_lexicon(p.stem, p.read_text("utf-8"))
