"""Builtin pattern catalog for static rules.

The catalog ships as a versioned JSON data file (``data/builtin_patterns.json``)
mapping pattern names to regex sources. It is loaded once and exposed as an
immutable mapping; every entry is compile-checked at load time.

Current entries:

======  =====================================================
name    matches
======  =====================================================
email   RFC-casual email addresses (``user@host.tld``)
ssn     US social security numbers, dashed form ``ddd-dd-dddd``
phone   US phone numbers with separators, optional ``+1`` / ``(area)``
======  =====================================================
"""

from __future__ import annotations

import json
import re
from importlib import resources
from types import MappingProxyType

from .errors import UnknownBuiltinPattern

_CATALOG_RESOURCE = "builtin_patterns.json"


def _load_catalog() -> tuple[int, MappingProxyType]:
    raw = resources.files("guardgate.data").joinpath(_CATALOG_RESOURCE).read_text("utf-8")
    doc = json.loads(raw)
    patterns = {}
    for name, source in doc["patterns"].items():
        re.compile(source)  # fail fast on a broken catalog entry
        patterns[name] = source
    return int(doc["version"]), MappingProxyType(patterns)


CATALOG_VERSION, BUILTIN_PATTERNS = _load_catalog()


def builtin_pattern(name: str) -> str:
    """Return the regex source for a builtin pattern name.

    Raises UnknownBuiltinPattern for names not in the catalog.
    """
    try:
        return BUILTIN_PATTERNS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_PATTERNS))
        raise UnknownBuiltinPattern(f"no builtin pattern {name!r} (known: {known})") from None
