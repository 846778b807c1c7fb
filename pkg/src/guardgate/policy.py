"""Policies: ordered rule chains with a direction, evaluated sequentially.

Rules run in the policy's effective order: the default puts static rules
first (cheap, predictable checks up front), then natural-language rules,
then classifiers; custom mode keeps the user-given order. The first
triggered block-action rule stops evaluation — everything after it stays
unevaluated in the trace.

Triggered rules combine through the action lattice

    allow < redact < warn < escalate < block

so information-hiding (redaction) still happens on warn/escalate, and a
block always dominates. Redaction spans from all triggered redact rules
accumulate and are applied together.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

from .errors import GuardgateError, MixedDirections
from .rules import (
    CompiledRule,
    EMPTY_RESOURCES,
    Finding,
    MatchSpan,
    Resources,
    RuleKind,
    RuleSpec,
    compile_rule,
    redact,
)
from .vectors import EthicalVector


class Direction(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


class OrderMode(str, Enum):
    DEFAULT = "default"
    CUSTOM = "custom"


class VerdictAction(str, Enum):
    ALLOW = "allow"
    REDACT = "redact"
    WARN = "warn"
    ESCALATE = "escalate"
    BLOCK = "block"


_ACTION_RANK = {
    VerdictAction.ALLOW: 0,
    VerdictAction.REDACT: 1,
    VerdictAction.WARN: 2,
    VerdictAction.ESCALATE: 3,
    VerdictAction.BLOCK: 4,
}

_KIND_RANK = {RuleKind.STATIC: 0, RuleKind.NATURAL_LANGUAGE: 1, RuleKind.CLASSIFIER: 2}

_TRANSFORMING = (VerdictAction.REDACT, VerdictAction.WARN, VerdictAction.ESCALATE)


def action_rank(action: VerdictAction) -> int:
    return _ACTION_RANK[action]


def combine_actions(a: VerdictAction, b: VerdictAction) -> VerdictAction:
    return a if _ACTION_RANK[a] >= _ACTION_RANK[b] else b


@dataclass(frozen=True)
class Policy:
    id: str
    direction: Direction
    rules: tuple[RuleSpec, ...]
    ethical_vector: EthicalVector
    order_mode: OrderMode = OrderMode.DEFAULT
    weight: float = 1.0
    priority: int = 0
    context_tags: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.id:
            raise GuardgateError("policy id must be non-empty")
        if self.weight <= 0:
            raise GuardgateError(f"policy {self.id!r}: weight must be positive")
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise GuardgateError(f"policy {self.id!r}: rule ids must be unique")

    def effective_rule_order(self) -> tuple[RuleSpec, ...]:
        """Default order: static, then natural-language, then classifier
        (stable within each kind). Custom keeps the configured order."""
        if self.order_mode is OrderMode.CUSTOM:
            return self.rules
        return tuple(sorted(self.rules, key=lambda r: _KIND_RANK[r.kind]))


@dataclass(frozen=True)
class TraceEntry:
    rule_id: str
    evaluated: bool
    outcome: str  # "triggered:<action>", "clean", or "skipped"


@dataclass(frozen=True)
class Verdict:
    action: VerdictAction
    findings: tuple[Finding, ...] = ()
    transformed_text: Optional[str] = None
    trace: tuple[TraceEntry, ...] = ()

    @property
    def triggered_rule_ids(self) -> tuple[str, ...]:
        return tuple(f.rule_id for f in self.findings if f.triggered)

    @property
    def redaction_spans(self) -> tuple[MatchSpan, ...]:
        out = []
        for entry in self.trace:
            if entry.outcome == "triggered:redact":
                for f in self.findings:
                    if f.rule_id == entry.rule_id:
                        out.extend(f.spans)
        return tuple(out)


@dataclass(frozen=True)
class CompiledPolicy:
    policy: Policy
    compiled_rules: tuple[CompiledRule, ...]  # already in effective order

    @property
    def id(self) -> str:
        return self.policy.id


def compile_policy(policy: Policy, resources: Resources = EMPTY_RESOURCES) -> CompiledPolicy:
    compiled = tuple(
        compile_rule(spec, resources) for spec in policy.effective_rule_order()
    )
    return CompiledPolicy(policy=policy, compiled_rules=compiled)


def _rule_verdict_action(rule: CompiledRule) -> VerdictAction:
    return VerdictAction(rule.action.value)


def evaluate_policy(
    policy: Policy | CompiledPolicy,
    text: str,
    context: frozenset[str] = frozenset(),
    resources: Resources = EMPTY_RESOURCES,
) -> Verdict:
    """Evaluate one policy against one text.

    Pure function of its inputs; the context is carried for symmetry with
    assistant-side evaluation (individual rules do not consult it).
    """
    del context  # rules are context-free; activation happens a level up
    compiled = policy if isinstance(policy, CompiledPolicy) else compile_policy(policy, resources)

    findings: list[Finding] = []
    trace: list[TraceEntry] = []
    spans: list[MatchSpan] = []
    action = VerdictAction.ALLOW
    blocked = False

    for rule in compiled.compiled_rules:
        if blocked:
            trace.append(TraceEntry(rule_id=rule.id, evaluated=False, outcome="skipped"))
            continue
        finding = rule.evaluate(text)
        findings.append(finding)
        if not finding.triggered:
            trace.append(TraceEntry(rule_id=rule.id, evaluated=True, outcome="clean"))
            continue
        rule_action = _rule_verdict_action(rule)
        trace.append(
            TraceEntry(
                rule_id=rule.id, evaluated=True, outcome=f"triggered:{rule_action.value}"
            )
        )
        action = combine_actions(action, rule_action)
        if rule_action is VerdictAction.REDACT:
            spans.extend(finding.spans)
        if rule_action is VerdictAction.BLOCK:
            blocked = True

    transformed = redact(text, spans) if action in _TRANSFORMING else None
    return Verdict(
        action=action,
        findings=tuple(findings),
        transformed_text=transformed,
        trace=tuple(trace),
    )


@dataclass(frozen=True)
class SideEvaluation:
    """Merged verdict for one message side plus per-policy detail."""

    merged: Verdict
    per_policy: tuple[tuple[str, Optional[Verdict]], ...]  # None = skipped after a block


def evaluate_policies(
    policies: Sequence[Policy | CompiledPolicy],
    text: str,
    context: frozenset[str] = frozenset(),
    resources: Resources = EMPTY_RESOURCES,
) -> SideEvaluation:
    """Evaluate several same-direction policies and merge their verdicts.

    Policies run in priority order (lower number first). Verdicts merge
    through the action lattice; redaction spans union across policies. A
    block from any policy is final: later policies are recorded in the
    trace with evaluated=false.
    """
    materialized = [
        p if isinstance(p, CompiledPolicy) else compile_policy(p, resources)
        for p in policies
    ]
    directions = {cp.policy.direction for cp in materialized}
    if len(directions) > 1:
        raise MixedDirections(f"policies mix directions: {sorted(d.value for d in directions)}")

    ordered = sorted(materialized, key=lambda cp: cp.policy.priority)
    merged_action = VerdictAction.ALLOW
    findings: list[Finding] = []
    trace: list[TraceEntry] = []
    spans: list[MatchSpan] = []
    per_policy: list[tuple[str, Optional[Verdict]]] = []
    blocked = False

    for cp in ordered:
        if blocked:
            for rule in cp.compiled_rules:
                trace.append(TraceEntry(rule_id=rule.id, evaluated=False, outcome="skipped"))
            per_policy.append((cp.id, None))
            continue
        verdict = evaluate_policy(cp, text)
        per_policy.append((cp.id, verdict))
        merged_action = combine_actions(merged_action, verdict.action)
        findings.extend(verdict.findings)
        trace.extend(verdict.trace)
        spans.extend(verdict.redaction_spans)
        if verdict.action is VerdictAction.BLOCK:
            blocked = True

    transformed = redact(text, spans) if merged_action in _TRANSFORMING else None
    merged = Verdict(
        action=merged_action,
        findings=tuple(findings),
        transformed_text=transformed,
        trace=tuple(trace),
    )
    return SideEvaluation(merged=merged, per_policy=tuple(per_policy))


def evaluate_assistant_side(
    policies: Sequence[Policy | CompiledPolicy],
    text: str,
    context: frozenset[str] = frozenset(),
    resources: Resources = EMPTY_RESOURCES,
) -> Verdict:
    """Merged verdict over all policies guarding one side of an exchange."""
    if not policies:
        return Verdict(action=VerdictAction.ALLOW)
    return evaluate_policies(policies, text, context, resources).merged


# --------------------------------------------------------------------------
# actions & repeat-violation tracking
# --------------------------------------------------------------------------

class RestrictionKind(str, Enum):
    TEMP_BLOCK = "temp-block"
    HUMAN_REVIEW = "human-review"


@dataclass(frozen=True)
class BlockConfig:
    message: str = "This request was blocked by policy {policy_id}."
    notify: bool = True
    log: bool = True


@dataclass(frozen=True)
class EscalationConfig:
    enabled: bool = True
    repeat_threshold: int = 3  # K violations ...
    window_seconds: float = 300.0  # ... within W seconds
    restriction: RestrictionKind = RestrictionKind.TEMP_BLOCK

    def __post_init__(self):
        if self.repeat_threshold < 1:
            raise GuardgateError("repeat threshold must be >= 1")
        if self.window_seconds < 1:
            raise GuardgateError("window must be >= 1 second")


@dataclass(frozen=True)
class ActionConfig:
    on_warn: str = "Warning: this message violated policy {policy_id}."
    on_block: BlockConfig = field(default_factory=BlockConfig)
    escalation: EscalationConfig = field(default_factory=EscalationConfig)


class ViolationTracker:
    """Sliding-window repeat-violation counter, one window per session.

    Verdicts at warn severity or above count as violations. Once a session
    accumulates K of them within W seconds it is restricted (temp-block or
    human-review per config) until the window drains. The clock is
    injectable so tests can drive time.
    """

    def __init__(self, config: EscalationConfig, clock: Callable[[], float]):
        self._config = config
        self._clock = clock
        self._lock = threading.Lock()
        self._windows: dict[str, deque[float]] = {}

    def _drain(self, window: deque[float], now: float) -> None:
        horizon = now - self._config.window_seconds
        while window and window[0] <= horizon:
            window.popleft()

    def record(self, session_id: str, action: VerdictAction) -> Optional[RestrictionKind]:
        """Record one verdict; returns the restriction it triggers, if any."""
        if not self._config.enabled:
            return None
        if _ACTION_RANK[action] < _ACTION_RANK[VerdictAction.WARN]:
            return None
        now = self._clock()
        with self._lock:
            window = self._windows.setdefault(session_id, deque())
            self._drain(window, now)
            window.append(now)
            if len(window) >= self._config.repeat_threshold:
                return self._config.restriction
        return None

    def active_restriction(self, session_id: str) -> Optional[RestrictionKind]:
        """Restriction currently in force for a session, if any."""
        if not self._config.enabled:
            return None
        now = self._clock()
        with self._lock:
            window = self._windows.get(session_id)
            if not window:
                return None
            self._drain(window, now)
            if len(window) >= self._config.repeat_threshold:
                return self._config.restriction
        return None

    def clear(self, session_id: str) -> None:
        with self._lock:
            self._windows.pop(session_id, None)
