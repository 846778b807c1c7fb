"""Conflict classification and resolution between guardrails.

Two guardrails conflict when their ethical vectors point against each
other. Classification is by the dot products of their context-effective
vectors over a set of contexts:

* Case 1 — complete, permanent opposition: dot <= -1+eps in every context.
* Case 2 — permanent but limited disagreement: dot in (-1+eps, theta]
  everywhere (the classic example is a dot of -0.9).
* Case 3 — conditional complete opposition: dot <= -1+eps only in some
  contexts.
* Case 4 — conditional limited disagreement: dot dips to (-1+eps, theta]
  only in some contexts.

For complete oppositions (Cases 1 and 3) the damage depends on what else
is active: Variant I (the opposed pair is alone), Variant II (other
guardrails still give direction), Variant III (every active guardrail is
locked in mutual negation and the weighted aggregate vanishes - the
"ethically blind" state).

Resolution strategies: weighted averaging, strict precedence, hybrid
(weighted averaging falling back to precedence with an alert when mutual
negation is detected), contextual triggering (activation masks), and
escalation to a human operator.

Defaults: eps = 1e-6, theta = -0.8, blind-norm delta = 1e-6, all
overridable per deployment. Threshold comparisons carry a 1e-9 guard to
absorb renormalization round-off.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .errors import DuplicatePriority, GuardgateError
from .vectors import AxisSpace, EthicalVector, dot

_BOUNDARY_GUARD = 1e-9


@dataclass(frozen=True)
class ConflictThresholds:
    """Deployment-tunable conflict constants."""

    epsilon: float = 1e-6   # dot <= -1 + epsilon counts as complete opposition
    theta: float = -0.8     # dot <= theta counts as (at least) limited disagreement
    delta: float = 1e-6     # aggregate norm < delta counts as ethically blind

    @property
    def opposed_cutoff(self) -> float:
        return -1.0 + self.epsilon


DEFAULT_THRESHOLDS = ConflictThresholds()


@dataclass(frozen=True)
class GuardrailHandle:
    """A policy seen as a guardrail: its vector, weight, priority, contexts."""

    policy_id: str
    base_vector: EthicalVector
    weight: float = 1.0
    priority: int = 0
    context_tags: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.weight <= 0:
            raise GuardgateError(f"guardrail {self.policy_id!r}: weight must be positive")


@dataclass(frozen=True)
class ActiveGuardrail:
    """A guardrail active in some context, with its context-effective vector."""

    handle: GuardrailHandle
    vector: EthicalVector


class CaseKind(str, Enum):
    NO_CONFLICT = "no-conflict"
    CASE1 = "case1"
    CASE2 = "case2"
    CASE3 = "case3"
    CASE4 = "case4"


class Variant(str, Enum):
    I = "I"
    II = "II"
    III = "III"


@dataclass(frozen=True)
class ConflictCase:
    """Pairwise classification result. ``dot`` is the worst (lowest) dot seen."""

    kind: CaseKind
    variant: Optional[Variant] = None
    dot: Optional[float] = None
    contexts_where_opposed: frozenset[str] = frozenset()


class ResolutionMethod(str, Enum):
    WEIGHTED_AVERAGE = "weighted-average"
    PRECEDENCE = "precedence"
    HYBRID = "hybrid"
    CONTEXTUAL = "contextual"
    HUMAN = "human"


class ResolutionOutcome(str, Enum):
    DIRECTION = "direction"
    WINNER = "winner"
    ETHICALLY_BLIND = "ethically-blind"
    PENDING_HUMAN = "pending-human"


@dataclass(frozen=True)
class Resolution:
    method: ResolutionMethod
    outcome: ResolutionOutcome
    direction: Optional[EthicalVector] = None
    winner_policy_id: Optional[str] = None
    review_id: Optional[str] = None
    alert: Optional[str] = None

    def __post_init__(self):
        if (
            self.method is ResolutionMethod.HYBRID
            and self.outcome is ResolutionOutcome.WINNER
            and not self.alert
        ):
            raise GuardgateError("hybrid precedence fallback must carry an alert")


# --------------------------------------------------------------------------
# contextual activation
# --------------------------------------------------------------------------

def contextual_activation(
    context: frozenset[str],
    guardrails: Sequence[GuardrailHandle],
    axis_space: AxisSpace,
) -> list[ActiveGuardrail]:
    """Guardrails active in ``context`` with their masked, renormalized vectors.

    A guardrail is active when it has no context tags (always-on) or shares
    a tag with the context. Axes whose declared tags are absent from the
    context are zeroed out; a guardrail whose masked vector vanishes is
    inactive for this context.
    """
    mask = axis_space.activation_mask(context)
    active = []
    for handle in guardrails:
        if handle.context_tags and not (handle.context_tags & context):
            continue
        vector = handle.base_vector.masked(mask)
        if vector is None:
            continue
        active.append(ActiveGuardrail(handle=handle, vector=vector))
    return active


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------

def classify_pair(
    a: GuardrailHandle,
    b: GuardrailHandle,
    contexts: Sequence[frozenset[str]],
    axis_space: AxisSpace,
    thresholds: ConflictThresholds = DEFAULT_THRESHOLDS,
) -> ConflictCase:
    """Classify the conflict between two guardrails over a context universe.

    Only contexts where both guardrails are active contribute a dot. The
    result's ``contexts_where_opposed`` is the union of tags of the
    contexts where the pair crosses the relevant cutoff (complete
    opposition for Cases 1/3, limited disagreement for Cases 2/4).
    """
    if not contexts:
        raise GuardgateError("contexts must be non-empty (include the universal context)")
    dots: list[tuple[frozenset[str], float]] = []
    for context in contexts:
        active = contextual_activation(context, [a, b], axis_space)
        if len(active) != 2:
            continue
        dots.append((context, dot(active[0].vector, active[1].vector)))
    if not dots:
        return ConflictCase(kind=CaseKind.NO_CONFLICT)

    values = [d for _, d in dots]
    lo, hi = min(values), max(values)
    opposed = thresholds.opposed_cutoff + _BOUNDARY_GUARD
    limited = thresholds.theta + _BOUNDARY_GUARD

    if hi <= opposed:
        kind = CaseKind.CASE1
    elif lo <= opposed:
        kind = CaseKind.CASE3
    elif hi <= limited:
        kind = CaseKind.CASE2
    elif lo <= limited:
        kind = CaseKind.CASE4
    else:
        kind = CaseKind.NO_CONFLICT

    if kind in (CaseKind.CASE1, CaseKind.CASE3):
        cutoff = opposed
    elif kind in (CaseKind.CASE2, CaseKind.CASE4):
        cutoff = limited
    else:
        cutoff = None
    where: set[str] = set()
    if cutoff is not None:
        for context, d in dots:
            if d <= cutoff:
                where |= context
    return ConflictCase(kind=kind, dot=lo, contexts_where_opposed=frozenset(where))


def detect_variant(
    active: Sequence[ActiveGuardrail],
    thresholds: ConflictThresholds = DEFAULT_THRESHOLDS,
) -> Optional[Variant]:
    """Variant of a complete-opposition situation for an active guardrail set.

    Returns None when no pair in the set is completely opposed. Variant I:
    the set is exactly the opposed pair. Variant III: the weighted
    aggregate vanishes and every member sits in at least one opposed pair.
    Variant II: anything else.
    """
    opposed_members: set[int] = set()
    cutoff = thresholds.opposed_cutoff + _BOUNDARY_GUARD
    for i in range(len(active)):
        for j in range(i + 1, len(active)):
            if dot(active[i].vector, active[j].vector) <= cutoff:
                opposed_members.add(i)
                opposed_members.add(j)
    if not opposed_members:
        return None
    if len(active) == 2:
        return Variant.I
    if len(opposed_members) == len(active) and _aggregate_norm(active) < thresholds.delta:
        return Variant.III
    return Variant.II


def _aggregate(active: Sequence[ActiveGuardrail]) -> list[float]:
    dim = len(active[0].vector.values)
    total = [0.0] * dim
    for ag in active:
        if len(ag.vector.values) != dim:
            raise GuardgateError("active guardrails disagree on dimension")
        for i, v in enumerate(ag.vector.values):
            total[i] += ag.handle.weight * v
    return total


def _aggregate_norm(active: Sequence[ActiveGuardrail]) -> float:
    return math.sqrt(sum(v * v for v in _aggregate(active)))


def as_active(guardrails: Sequence[GuardrailHandle]) -> list[ActiveGuardrail]:
    """Wrap handles with their base vectors (no context masking)."""
    return [ActiveGuardrail(handle=g, vector=g.base_vector) for g in guardrails]


# --------------------------------------------------------------------------
# resolution strategies
# --------------------------------------------------------------------------

def weighted_average(
    active: Sequence[ActiveGuardrail],
    thresholds: ConflictThresholds = DEFAULT_THRESHOLDS,
    method: ResolutionMethod = ResolutionMethod.WEIGHTED_AVERAGE,
) -> Resolution:
    """Normalized weighted vector sum; ethically blind when it vanishes."""
    if not active:
        raise GuardgateError("weighted_average needs at least one guardrail")
    total = _aggregate(active)
    norm = math.sqrt(sum(v * v for v in total))
    if norm < thresholds.delta:
        return Resolution(method=method, outcome=ResolutionOutcome.ETHICALLY_BLIND)
    axes = active[0].vector.axes
    direction = EthicalVector(axes=axes, values=tuple(v / norm for v in total))
    return Resolution(
        method=method, outcome=ResolutionOutcome.DIRECTION, direction=direction
    )


def precedence_resolve(
    active: Sequence[ActiveGuardrail],
    method: ResolutionMethod = ResolutionMethod.PRECEDENCE,
    alert: Optional[str] = None,
) -> Resolution:
    """Winner is the guardrail with the lowest priority number."""
    if not active:
        raise GuardgateError("precedence_resolve needs at least one guardrail")
    priorities = [ag.handle.priority for ag in active]
    if len(set(priorities)) != len(priorities):
        dupes = sorted({p for p in priorities if priorities.count(p) > 1})
        raise DuplicatePriority(f"duplicate priorities: {dupes}")
    winner = min(active, key=lambda ag: ag.handle.priority)
    return Resolution(
        method=method,
        outcome=ResolutionOutcome.WINNER,
        winner_policy_id=winner.handle.policy_id,
        alert=alert,
    )


CONSTRAINED_GUIDANCE_ALERT = (
    "mutual negation detected between guardrails {ids}: "
    "the system is operating under constrained ethical guidance; "
    "falling back to strict precedence"
)


def hybrid_resolve(
    active: Sequence[ActiveGuardrail],
    thresholds: ConflictThresholds = DEFAULT_THRESHOLDS,
) -> Resolution:
    """Weighted averaging by default, precedence with an alert on mutual negation."""
    averaged = weighted_average(active, thresholds, method=ResolutionMethod.HYBRID)
    if averaged.outcome is ResolutionOutcome.DIRECTION:
        return averaged
    ids = ", ".join(sorted(ag.handle.policy_id for ag in active))
    return precedence_resolve(
        active,
        method=ResolutionMethod.HYBRID,
        alert=CONSTRAINED_GUIDANCE_ALERT.format(ids=ids),
    )


def governing_policy_id(
    resolution: Resolution, active: Sequence[ActiveGuardrail]
) -> Optional[str]:
    """Map a resolution to the policy whose verdict governs.

    Winner resolutions govern directly. Direction resolutions pick the
    active policy whose effective vector is most aligned with the
    direction, ties broken by priority. This mapping is a gateway
    convention, not part of the conflict calculus.
    """
    if resolution.outcome is ResolutionOutcome.WINNER:
        return resolution.winner_policy_id
    if resolution.outcome is ResolutionOutcome.DIRECTION and active:
        best = max(
            active,
            key=lambda ag: (dot(ag.vector, resolution.direction), -ag.handle.priority),
        )
        return best.handle.policy_id
    return None


# --------------------------------------------------------------------------
# static analysis
# --------------------------------------------------------------------------

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"
SEVERITY_INFO = "info"

_CASE_SEVERITY = {
    CaseKind.CASE1: SEVERITY_ERROR,
    CaseKind.CASE3: SEVERITY_WARNING,
    CaseKind.CASE2: SEVERITY_INFO,
    CaseKind.CASE4: SEVERITY_INFO,
}


@dataclass(frozen=True)
class ConflictFinding:
    severity: str
    case: ConflictCase
    policy_a: str
    policy_b: str
    message: str

    def to_dict(self) -> dict:
        return {
            "severity": self.severity,
            "case": self.case.kind.value,
            "variant": self.case.variant.value if self.case.variant else None,
            "policyA": self.policy_a,
            "policyB": self.policy_b,
            "dot": self.case.dot,
            "contexts": sorted(self.case.contexts_where_opposed),
            "message": self.message,
        }


@dataclass(frozen=True)
class ScenarioEntry:
    """Predicted variant for the guardrails active under one context."""

    context: frozenset[str]
    active_policies: tuple[str, ...]
    variant: Optional[Variant]

    def to_dict(self) -> dict:
        return {
            "context": sorted(self.context),
            "active": list(self.active_policies),
            "variant": self.variant.value if self.variant else None,
        }


@dataclass(frozen=True)
class ConflictReport:
    findings: tuple[ConflictFinding, ...] = ()
    scenarios: tuple[ScenarioEntry, ...] = ()

    @property
    def blocking(self) -> bool:
        return any(f.severity == SEVERITY_ERROR for f in self.findings)

    @property
    def has_warnings(self) -> bool:
        return any(f.severity == SEVERITY_WARNING for f in self.findings)

    def exit_status(self) -> int:
        """0 clean, 1 warnings only, 2 blocking findings."""
        if self.blocking:
            return 2
        if self.has_warnings:
            return 1
        return 0

    def to_dict(self) -> dict:
        return {
            "blocking": self.blocking,
            "exitStatus": self.exit_status(),
            "findings": [f.to_dict() for f in self.findings],
            "scenarios": [s.to_dict() for s in self.scenarios],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def static_conflict_analysis(
    guardrails: Sequence[GuardrailHandle],
    axis_space: AxisSpace,
    contexts: Sequence[frozenset[str]],
    thresholds: ConflictThresholds = DEFAULT_THRESHOLDS,
) -> ConflictReport:
    """Pre-deployment pass: classify every unordered guardrail pair.

    Case 1 pairs come back as deployment-blocking errors, Case 3 as
    warnings, Cases 2 and 4 as informational entries. Each analysis
    context also yields a variant prediction for its active set, so an
    ethically-blind combination is visible before it ever runs.
    """
    findings = []
    for i in range(len(guardrails)):
        for j in range(i + 1, len(guardrails)):
            a, b = guardrails[i], guardrails[j]
            case = classify_pair(a, b, contexts, axis_space, thresholds)
            if case.kind is CaseKind.NO_CONFLICT:
                continue
            severity = _CASE_SEVERITY[case.kind]
            message = (
                f"{case.kind.value}: {a.policy_id!r} vs {b.policy_id!r} "
                f"(worst dot {case.dot:.4f})"
            )
            findings.append(
                ConflictFinding(
                    severity=severity,
                    case=case,
                    policy_a=a.policy_id,
                    policy_b=b.policy_id,
                    message=message,
                )
            )

    scenarios = []
    for context in contexts:
        active = contextual_activation(context, guardrails, axis_space)
        if len(active) < 2:
            continue
        variant = detect_variant(active, thresholds)
        if variant is not None:
            scenarios.append(
                ScenarioEntry(
                    context=context,
                    active_policies=tuple(ag.handle.policy_id for ag in active),
                    variant=variant,
                )
            )
    return ConflictReport(findings=tuple(findings), scenarios=tuple(scenarios))
