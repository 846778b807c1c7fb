"""Rule compilation, matching, and redaction.

Three rule kinds exist, differing in strength and machinery:

* static    — regex patterns (builtin catalog entry or raw source) for
              predictable sensitive strings such as emails and SSNs.
* natural-language — keyword/phrase lists plus optional weighted lexicons,
              matched on word boundaries after NFKC + case-fold
              normalization.
* classifier — a trained text classifier gating on Deny probability.

Compilation produces an immutable evaluator; evaluation is a pure function
of (rule, text), so compiled rules are safe to share across threads.

Offsets in MatchSpan are byte offsets into the UTF-8 encoding of the text
and always fall on character boundaries. Redaction replaces each merged
span with ``[REDACTED:<ruleId>]``; text inside existing placeholders is
exempt from matching, which makes redaction idempotent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .classifier import ClassifierModel, predict
from .errors import (
    EmptyKeywordList,
    GuardgateError,
    InvalidPattern,
    SpanOutOfBounds,
    UnknownLexiconReference,
    UnknownModelReference,
)
from .lexicon import Lexicon, normalize_phrase, normalize_token
from .patterns import builtin_pattern

PLACEHOLDER_RE = re.compile(r"\[REDACTED:[^\]]*\]")

_WORD_RE = re.compile(r"\w+", re.UNICODE)


class RuleKind(str, Enum):
    STATIC = "static"
    NATURAL_LANGUAGE = "natural-language"
    CLASSIFIER = "classifier"


class RuleAction(str, Enum):
    """What a triggered rule asks the policy layer to do."""

    REDACT = "redact"
    WARN = "warn"
    BLOCK = "block"
    ESCALATE = "escalate"


@dataclass(frozen=True)
class RuleSpec:
    """Declarative description of one guardrail rule.

    Kind-specific payload fields:

    * static: ``builtin`` (catalog name) or ``pattern`` (raw regex source).
    * natural-language: ``keywords``, optional ``lexicon`` reference,
      ``threshold`` in [0, 1], ``mode`` ("avoid" enforces, "encourage" is
      recorded but non-enforcing), optional ``description``.
    * classifier: ``model`` reference and ``threshold`` in [0, 1].
    """

    id: str
    kind: RuleKind
    action: RuleAction
    severity: int = 5
    builtin: Optional[str] = None
    pattern: Optional[str] = None
    description: str = ""
    keywords: tuple[str, ...] = ()
    lexicon: Optional[str] = None
    threshold: float = 0.5
    mode: str = "avoid"
    model: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise GuardgateError("rule id must be non-empty")
        if not 1 <= self.severity <= 10:
            raise GuardgateError(f"rule {self.id!r}: severity {self.severity} outside 1..10")
        if not 0.0 <= self.threshold <= 1.0:
            raise GuardgateError(f"rule {self.id!r}: threshold {self.threshold} outside [0, 1]")
        if self.mode not in ("avoid", "encourage"):
            raise GuardgateError(f"rule {self.id!r}: mode must be 'avoid' or 'encourage'")


@dataclass(frozen=True)
class MatchSpan:
    """Evidence for one rule match: a byte range of the original text."""

    start: int
    end: int
    rule_id: str
    excerpt: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise SpanOutOfBounds(f"span [{self.start}, {self.end}) is empty or negative")


@dataclass(frozen=True)
class Finding:
    """Outcome of evaluating one rule against one text."""

    rule_id: str
    triggered: bool
    score: float
    spans: tuple[MatchSpan, ...] = ()
    explanation: str = ""

    def __post_init__(self):
        if self.triggered and not self.explanation:
            raise GuardgateError(f"finding for {self.rule_id!r}: triggered without explanation")


@dataclass
class Resources:
    """Named lexicons and classifier models referenced by rule specs."""

    lexicons: dict[str, Lexicon] = field(default_factory=dict)
    models: dict[str, ClassifierModel] = field(default_factory=dict)


EMPTY_RESOURCES = Resources()


# --------------------------------------------------------------------------
# byte-offset helpers
# --------------------------------------------------------------------------

def _char_to_byte_table(text: str) -> list[int]:
    """byte offset of each character index, plus the total length at the end."""
    table = [0] * (len(text) + 1)
    acc = 0
    for i, ch in enumerate(text):
        table[i] = acc
        acc += len(ch.encode("utf-8"))
    table[len(text)] = acc
    return table


def check_spans(text: str, spans: Sequence[MatchSpan]) -> bytes:
    """Validate spans against ``text``; returns the UTF-8 encoding of the text.

    Raises SpanOutOfBounds if a span exceeds the text, starts or ends in the
    middle of a UTF-8 character, or its excerpt disagrees with the slice.
    """
    data = text.encode("utf-8")
    n = len(data)
    for span in spans:
        if span.end > n:
            raise SpanOutOfBounds(f"span [{span.start}, {span.end}) exceeds text length {n}")
        for edge in (span.start, span.end):
            if edge < n and (data[edge] & 0xC0) == 0x80:
                raise SpanOutOfBounds(f"offset {edge} splits a UTF-8 character")
        if data[span.start : span.end].decode("utf-8") != span.excerpt:
            raise SpanOutOfBounds(
                f"span [{span.start}, {span.end}) excerpt does not match text slice"
            )
    return data


def _placeholder_char_ranges(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in PLACEHOLDER_RE.finditer(text)]


def _overlaps_any(start: int, end: int, ranges: list[tuple[int, int]]) -> bool:
    return any(start < r_end and r_start < end for r_start, r_end in ranges)


# --------------------------------------------------------------------------
# compiled rules
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CompiledRule:
    """Base class for immutable rule evaluators."""

    spec: RuleSpec

    @property
    def id(self) -> str:
        return self.spec.id

    @property
    def kind(self) -> RuleKind:
        return self.spec.kind

    @property
    def action(self) -> RuleAction:
        return self.spec.action

    def evaluate(self, text: str) -> Finding:
        raise NotImplementedError


@dataclass(frozen=True)
class StaticRule(CompiledRule):
    regex: re.Pattern = field(repr=False, default=None)  # type: ignore[assignment]

    def evaluate(self, text: str) -> Finding:
        spans = match_static(self, text)
        if spans:
            return Finding(
                rule_id=self.id,
                triggered=True,
                score=1.0,
                spans=tuple(spans),
                explanation=f"pattern matched {len(spans)} span(s)",
            )
        return Finding(rule_id=self.id, triggered=False, score=0.0)


@dataclass(frozen=True)
class NaturalLanguageRule(CompiledRule):
    keyword_phrases: tuple[tuple[str, ...], ...] = ()
    lexicon: Optional[Lexicon] = None

    def evaluate(self, text: str) -> Finding:
        return eval_natural_language(self, text)


@dataclass(frozen=True)
class ClassifierRule(CompiledRule):
    model: ClassifierModel = None  # type: ignore[assignment]

    def evaluate(self, text: str) -> Finding:
        label, probability = predict(self.model, text, threshold=self.spec.threshold)
        triggered = label == "deny"
        return Finding(
            rule_id=self.id,
            triggered=triggered,
            score=probability,
            explanation=(
                f"deny probability {probability:.4f} >= threshold {self.spec.threshold}"
                if triggered
                else ""
            ),
        )


def compile_rule(spec: RuleSpec, resources: Resources = EMPTY_RESOURCES) -> CompiledRule:
    """Compile a RuleSpec into an immutable evaluator.

    Deterministic: the same spec (and resources) always yields a
    behaviorally identical evaluator.
    """
    if spec.kind is RuleKind.STATIC:
        if spec.builtin is not None:
            source = builtin_pattern(spec.builtin)
        elif spec.pattern is not None:
            source = spec.pattern
        else:
            raise InvalidPattern(f"static rule {spec.id!r} needs 'builtin' or 'pattern'")
        try:
            regex = re.compile(source)
        except re.error as exc:
            raise InvalidPattern(f"static rule {spec.id!r}: {exc}") from exc
        return StaticRule(spec=spec, regex=regex)

    if spec.kind is RuleKind.NATURAL_LANGUAGE:
        lexicon = None
        if spec.lexicon is not None:
            try:
                lexicon = resources.lexicons[spec.lexicon]
            except KeyError:
                raise UnknownLexiconReference(
                    f"rule {spec.id!r}: lexicon {spec.lexicon!r} not loaded"
                ) from None
        phrases = tuple(normalize_phrase(k) for k in spec.keywords if k.strip())
        if not phrases and lexicon is None:
            raise EmptyKeywordList(f"rule {spec.id!r} has no keywords and no lexicon")
        return NaturalLanguageRule(spec=spec, keyword_phrases=phrases, lexicon=lexicon)

    if spec.kind is RuleKind.CLASSIFIER:
        if spec.model is None:
            raise UnknownModelReference(f"classifier rule {spec.id!r} has no model reference")
        try:
            model = resources.models[spec.model]
        except KeyError:
            raise UnknownModelReference(
                f"rule {spec.id!r}: model {spec.model!r} not loaded"
            ) from None
        return ClassifierRule(spec=spec, model=model)

    raise GuardgateError(f"unknown rule kind {spec.kind!r}")


# --------------------------------------------------------------------------
# matching
# --------------------------------------------------------------------------

def match_static(rule: StaticRule, text: str) -> list[MatchSpan]:
    """All non-overlapping leftmost matches, ascending by start offset.

    Matches overlapping an existing ``[REDACTED:...]`` placeholder are
    skipped so redacted text never re-matches.
    """
    if not isinstance(rule, StaticRule):
        raise GuardgateError(f"match_static needs a static rule, got {rule.kind}")
    exempt = _placeholder_char_ranges(text)
    table = _char_to_byte_table(text)
    spans = []
    for m in rule.regex.finditer(text):
        c_start, c_end = m.span()
        if c_start == c_end:
            continue  # zero-width matches carry no evidence
        if _overlaps_any(c_start, c_end, exempt):
            continue
        spans.append(
            MatchSpan(
                start=table[c_start],
                end=table[c_end],
                rule_id=rule.id,
                excerpt=m.group(0),
            )
        )
    return spans


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    """Word tokens as (normalized token, char start, char end), skipping placeholders."""
    exempt = _placeholder_char_ranges(text)
    out = []
    for m in _WORD_RE.finditer(text):
        if _overlaps_any(m.start(), m.end(), exempt):
            continue
        out.append((normalize_token(m.group(0)), m.start(), m.end()))
    return out


def _find_phrase_hits(
    tokens: list[tuple[str, int, int]], phrase: tuple[str, ...]
) -> list[tuple[int, int]]:
    """Char ranges of every occurrence of a normalized token sequence."""
    hits = []
    n = len(phrase)
    for i in range(len(tokens) - n + 1):
        if all(tokens[i + j][0] == phrase[j] for j in range(n)):
            hits.append((tokens[i][1], tokens[i + n - 1][2]))
    return hits


def eval_natural_language(rule: NaturalLanguageRule, text: str) -> Finding:
    """Evaluate a natural-language rule.

    Matching is token-wise: the text is split on word boundaries and each
    token is NFKC-normalized and case-folded, so "ReLiGiOn" and full-width
    variants match "religion". Phrases must appear as the exact token
    sequence ("credit card" does not match "creditcard").

    score = max(keyword hit score, lexicon score) where the keyword hit
    score is 1.0 when any keyword/phrase occurs (else 0.0) and the lexicon
    score is the sum of weights of matched lexicon terms clamped to [0, 1].
    A rule in "encourage" mode never triggers.
    """
    if not isinstance(rule, NaturalLanguageRule):
        raise GuardgateError(f"eval_natural_language needs a natural-language rule, got {rule.kind}")
    tokens = _tokenize(text)
    table = _char_to_byte_table(text)

    spans: list[MatchSpan] = []
    matched_keywords: list[str] = []
    for phrase in rule.keyword_phrases:
        hits = _find_phrase_hits(tokens, phrase)
        if hits:
            matched_keywords.append(" ".join(phrase))
        for c_start, c_end in hits:
            spans.append(
                MatchSpan(
                    start=table[c_start],
                    end=table[c_end],
                    rule_id=rule.id,
                    excerpt=text[c_start:c_end],
                )
            )
    keyword_score = 1.0 if matched_keywords else 0.0

    lexicon_score = 0.0
    matched_terms: list[str] = []
    if rule.lexicon is not None and rule.lexicon.entries:
        total = 0.0
        for term, weight in rule.lexicon.entries.items():
            hits = _find_phrase_hits(tokens, term)
            if hits:
                matched_terms.append(" ".join(term))
                total += weight * len(hits)
        lexicon_score = min(max(total, 0.0), 1.0)

    score = max(keyword_score, lexicon_score)
    triggered = score >= rule.spec.threshold and rule.spec.mode == "avoid"

    explanation = ""
    if triggered:
        parts = []
        if matched_keywords:
            parts.append("keywords: " + ", ".join(sorted(matched_keywords)))
        if matched_terms:
            parts.append(f"lexicon score {lexicon_score:.2f}")
        explanation = (
            f"score {score:.2f} >= threshold {rule.spec.threshold} ({'; '.join(parts)})"
        )

    spans.sort(key=lambda s: (s.start, s.end))
    return Finding(
        rule_id=rule.id,
        triggered=triggered,
        score=score,
        spans=tuple(spans),
        explanation=explanation,
    )


# --------------------------------------------------------------------------
# redaction
# --------------------------------------------------------------------------

def redact(text: str, spans: Sequence[MatchSpan]) -> str:
    """Replace matched spans with ``[REDACTED:<ruleId>]`` placeholders.

    Overlapping and adjacent spans merge into one placeholder attributed to
    the first contributing rule (ascending start, ties broken by
    lexicographic rule id). Text outside the spans is preserved
    byte-for-byte.
    """
    if not spans:
        return text
    data = check_spans(text, spans)

    ordered = sorted(spans, key=lambda s: (s.start, s.rule_id))
    merged: list[list] = []  # [start, end, owner_rule_id]
    for span in ordered:
        if merged and span.start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], span.end)
        else:
            merged.append([span.start, span.end, span.rule_id])

    out = bytearray()
    cursor = 0
    for start, end, rule_id in merged:
        out += data[cursor:start]
        out += f"[REDACTED:{rule_id}]".encode("utf-8")
        cursor = end
    out += data[cursor:]
    return out.decode("utf-8")
