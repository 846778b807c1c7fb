"""Deployment configuration: one JSON document describing axes, resources,
and assistants.

Top-level schema (see README for the full field table)::

    {
      "schemaVersion": 1,                     // mandatory
      "axes": [{"name": "privacy", "tags": ["sensitive-personal-info"]}, ...],
      "analysisContexts": [[], ["medical"]],  // optional, defaults derived
      "thresholds": {"epsilon": 1e-6, "theta": -0.8, "delta": 1e-6},
      "lexicons": {"name": "path.lex"},       // term<TAB>weight files
      "models": {"name": "path.model"},       // trained classifier files
      "assistants": [ ... ]
    }

Each assistant bundles input policies, output policies, a system prompt,
an action configuration, a conflict strategy, and an upstream. Loading
compiles every rule and runs static conflict analysis; a Case 1 (complete
permanent opposition) pair blocks the load unless the assistant sets
``allowCompleteOpposition``.

Validation never stops at the first problem: it accumulates findings
(dicts with severity/path/message) and raises ValidationFailed carrying
all of them when any is an error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from .classifier import load_model
from .conflicts import (
    ConflictReport,
    ConflictThresholds,
    GuardrailHandle,
    static_conflict_analysis,
)
from .errors import GuardgateError, ValidationFailed
from .lexicon import load_lexicon
from .policy import (
    ActionConfig,
    BlockConfig,
    CompiledPolicy,
    Direction,
    EscalationConfig,
    OrderMode,
    Policy,
    RestrictionKind,
    compile_policy,
)
from .rules import Resources, RuleAction, RuleKind, RuleSpec
from .vectors import Axis, AxisSpace, EthicalVector

SCHEMA_VERSION = 1


class ConflictStrategy(str, Enum):
    WEIGHTED_AVERAGE = "weighted-average"
    PRECEDENCE = "precedence"
    HYBRID = "hybrid"
    CONTEXTUAL = "contextual"
    HUMAN = "human"


class UpstreamMode(str, Enum):
    LIVE = "live"
    MOCK = "mock"


@dataclass(frozen=True)
class UpstreamConfig:
    base_url: str = ""
    mode: UpstreamMode = UpstreamMode.MOCK
    timeout_ms: int = 10000
    auth_token_ref: Optional[str] = None  # env var NAME, never the secret itself

    def __post_init__(self):
        if self.timeout_ms < 1:
            raise GuardgateError("upstream timeout must be >= 1 ms")


@dataclass
class Assistant:
    id: str
    system_prompt: str
    input_policies: list[Policy]
    output_policies: list[Policy]
    action_config: ActionConfig
    conflict_strategy: ConflictStrategy
    upstream: UpstreamConfig
    allow_complete_opposition: bool = False
    compiled_input: list[CompiledPolicy] = field(default_factory=list)
    compiled_output: list[CompiledPolicy] = field(default_factory=list)
    analysis: Optional[ConflictReport] = None

    def policies(self) -> list[Policy]:
        return self.input_policies + self.output_policies

    def guardrail_handles(self, direction: Optional[Direction] = None) -> list[GuardrailHandle]:
        policies = (
            self.policies()
            if direction is None
            else (self.input_policies if direction is Direction.INPUT else self.output_policies)
        )
        return [
            GuardrailHandle(
                policy_id=p.id,
                base_vector=p.ethical_vector,
                weight=p.weight,
                priority=p.priority,
                context_tags=p.context_tags,
            )
            for p in policies
        ]


@dataclass
class Deployment:
    schema_version: int
    axis_space: AxisSpace
    analysis_contexts: list[frozenset[str]]
    thresholds: ConflictThresholds
    resources: Resources
    assistants: dict[str, Assistant]
    raw: dict  # document as loaded, for lossless round-trips


def _finding(severity: str, path: str, message: str) -> dict:
    return {"severity": severity, "path": path, "message": message}


class _Collector:
    def __init__(self):
        self.findings: list[dict] = []

    def error(self, path, message):
        self.findings.append(_finding("error", path, message))

    def warning(self, path, message):
        self.findings.append(_finding("warning", path, message))

    def note(self, path, message):
        self.findings.append(_finding("note", path, message))

    @property
    def has_errors(self):
        return any(f["severity"] == "error" for f in self.findings)


def _parse_rule(doc: dict, path: str, out: _Collector) -> Optional[RuleSpec]:
    try:
        kind = RuleKind(doc.get("kind", ""))
    except ValueError:
        out.error(path, f"unknown rule kind {doc.get('kind')!r}")
        return None
    try:
        action = RuleAction(doc.get("action", ""))
    except ValueError:
        out.error(path, f"unknown rule action {doc.get('action')!r}")
        return None
    try:
        return RuleSpec(
            id=doc.get("id", ""),
            kind=kind,
            action=action,
            severity=int(doc.get("severity", 5)),
            builtin=doc.get("builtin"),
            pattern=doc.get("pattern"),
            description=doc.get("description", ""),
            keywords=tuple(doc.get("keywords", ())),
            lexicon=doc.get("lexicon"),
            threshold=float(doc.get("threshold", 0.5)),
            mode=doc.get("mode", "avoid"),
            model=doc.get("model"),
        )
    except (GuardgateError, TypeError, ValueError) as exc:
        out.error(path, str(exc))
        return None


def _parse_policy(
    doc: dict, slot: Direction, space: AxisSpace, path: str, out: _Collector
) -> Optional[Policy]:
    direction_str = doc.get("direction", slot.value)
    try:
        direction = Direction(direction_str)
    except ValueError:
        out.error(path, f"unknown direction {direction_str!r}")
        return None
    if direction is not slot:
        out.error(path, f"policy direction {direction.value!r} does not match its {slot.value} slot")
        return None

    vector_doc = doc.get("ethicalVector")
    if not isinstance(vector_doc, dict) or not vector_doc:
        out.error(path, "ethicalVector must be a non-empty axis->coordinate object")
        return None
    try:
        vector = EthicalVector.from_mapping(space, {k: float(v) for k, v in vector_doc.items()})
    except (GuardgateError, TypeError, ValueError) as exc:
        out.error(path, f"ethicalVector: {exc}")
        return None

    rules = []
    for i, rule_doc in enumerate(doc.get("rules", ())):
        rule = _parse_rule(rule_doc, f"{path}.rules[{i}]", out)
        if rule is not None:
            rules.append(rule)
            if rule.mode == "encourage":
                out.note(
                    f"{path}.rules[{i}]",
                    f"rule {rule.id!r} is an encouragement rule: recorded but non-enforcing",
                )

    try:
        order_mode = OrderMode(doc.get("orderMode", "default"))
    except ValueError:
        out.error(path, f"unknown orderMode {doc.get('orderMode')!r}")
        return None

    try:
        return Policy(
            id=doc.get("id", ""),
            direction=direction,
            rules=tuple(rules),
            ethical_vector=vector,
            order_mode=order_mode,
            weight=float(doc.get("weight", 1.0)),
            priority=int(doc.get("priority", 0)),
            context_tags=frozenset(doc.get("contextTags", ())),
        )
    except (GuardgateError, TypeError, ValueError) as exc:
        out.error(path, str(exc))
        return None


def _parse_action_config(doc: dict, path: str, out: _Collector) -> ActionConfig:
    block_doc = doc.get("onBlock", {})
    escalation_doc = doc.get("escalation", {})
    try:
        restriction = RestrictionKind(escalation_doc.get("restriction", "temp-block"))
    except ValueError:
        out.error(f"{path}.escalation", f"unknown restriction {escalation_doc.get('restriction')!r}")
        restriction = RestrictionKind.TEMP_BLOCK
    try:
        escalation = EscalationConfig(
            enabled=bool(escalation_doc.get("enabled", True)),
            repeat_threshold=int(escalation_doc.get("repeatThreshold", 3)),
            window_seconds=float(escalation_doc.get("windowSeconds", 300)),
            restriction=restriction,
        )
    except (GuardgateError, TypeError, ValueError) as exc:
        out.error(f"{path}.escalation", str(exc))
        escalation = EscalationConfig()
    return ActionConfig(
        on_warn=doc.get("onWarn", ActionConfig().on_warn),
        on_block=BlockConfig(
            message=block_doc.get("message", BlockConfig().message),
            notify=bool(block_doc.get("notify", True)),
            log=bool(block_doc.get("log", True)),
        ),
        escalation=escalation,
    )


def _parse_upstream(doc: dict, path: str, out: _Collector) -> UpstreamConfig:
    try:
        mode = UpstreamMode(doc.get("mode", "mock"))
    except ValueError:
        out.error(path, f"unknown upstream mode {doc.get('mode')!r}")
        mode = UpstreamMode.MOCK
    if mode is UpstreamMode.LIVE and not doc.get("baseUrl"):
        out.error(path, "live upstream needs a baseUrl")
    try:
        return UpstreamConfig(
            base_url=doc.get("baseUrl", ""),
            mode=mode,
            timeout_ms=int(doc.get("timeoutMs", 10000)),
            auth_token_ref=doc.get("authTokenRef"),
        )
    except (GuardgateError, TypeError, ValueError) as exc:
        out.error(path, str(exc))
        return UpstreamConfig()


def _parse_assistant(
    doc: dict,
    space: AxisSpace,
    resources: Resources,
    contexts: list[frozenset[str]],
    thresholds: ConflictThresholds,
    path: str,
    out: _Collector,
) -> Optional[Assistant]:
    assistant_id = doc.get("id", "")
    if not assistant_id:
        out.error(path, "assistant id must be non-empty")
        return None

    try:
        strategy = ConflictStrategy(doc.get("conflictStrategy", "hybrid"))
    except ValueError:
        out.error(path, f"unknown conflictStrategy {doc.get('conflictStrategy')!r}")
        return None

    input_policies = []
    for i, pdoc in enumerate(doc.get("inputPolicies", ())):
        policy = _parse_policy(pdoc, Direction.INPUT, space, f"{path}.inputPolicies[{i}]", out)
        if policy is not None:
            input_policies.append(policy)
    output_policies = []
    for i, pdoc in enumerate(doc.get("outputPolicies", ())):
        policy = _parse_policy(pdoc, Direction.OUTPUT, space, f"{path}.outputPolicies[{i}]", out)
        if policy is not None:
            output_policies.append(policy)

    all_policies = input_policies + output_policies
    ids = [p.id for p in all_policies]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        out.error(path, f"duplicate policy ids: {dupes}")
    priorities = [p.priority for p in all_policies]
    if len(set(priorities)) != len(priorities):
        dupes = sorted({p for p in priorities if priorities.count(p) > 1})
        out.error(path, f"policy priorities must be unique within an assistant, duplicates: {dupes}")

    assistant = Assistant(
        id=assistant_id,
        system_prompt=doc.get("systemPrompt", ""),
        input_policies=input_policies,
        output_policies=output_policies,
        action_config=_parse_action_config(doc.get("actions", {}), f"{path}.actions", out),
        conflict_strategy=strategy,
        upstream=_parse_upstream(doc.get("upstream", {}), f"{path}.upstream", out),
        allow_complete_opposition=bool(doc.get("allowCompleteOpposition", False)),
    )

    # compile every rule now so bad patterns or dangling references fail the load
    try:
        assistant.compiled_input = [compile_policy(p, resources) for p in input_policies]
        assistant.compiled_output = [compile_policy(p, resources) for p in output_policies]
    except GuardgateError as exc:
        out.error(path, f"rule compilation failed: {exc}")
        return None

    report = static_conflict_analysis(
        assistant.guardrail_handles(), space, contexts, thresholds
    )
    assistant.analysis = report
    for conflict_finding in report.findings:
        doc_path = f"{path}.conflicts"
        message = conflict_finding.message
        if conflict_finding.severity == "error":
            if assistant.allow_complete_opposition:
                out.warning(doc_path, f"{message} (overridden by allowCompleteOpposition)")
            else:
                out.error(doc_path, message)
        elif conflict_finding.severity == "warning":
            out.warning(doc_path, message)
        else:
            out.note(doc_path, message)
    return assistant


def default_analysis_contexts(space: AxisSpace, assistants_tags: set[str]) -> list[frozenset[str]]:
    """Universal context plus one singleton context per declared tag."""
    tags: set[str] = set(assistants_tags)
    for axis in space.axes:
        tags |= axis.tags
    return [frozenset()] + [frozenset({t}) for t in sorted(tags)]


def parse_deployment(
    doc: Any, base_dir: Optional[Path] = None
) -> tuple[Optional[Deployment], list[dict]]:
    """Parse and validate a deployment document.

    Returns (deployment, findings); the deployment is None when any finding
    is an error. File references in lexicons/models resolve relative to
    ``base_dir``.
    """
    out = _Collector()
    if not isinstance(doc, dict):
        out.error("$", "configuration must be a JSON object")
        return None, out.findings

    version = doc.get("schemaVersion")
    if version != SCHEMA_VERSION:
        out.error("$.schemaVersion", f"schemaVersion must be {SCHEMA_VERSION}, got {version!r}")
        return None, out.findings

    axes_doc = doc.get("axes")
    if not isinstance(axes_doc, list) or len(axes_doc) < 2:
        out.error("$.axes", "at least two axes are required")
        return None, out.findings
    try:
        space = AxisSpace(
            axes=tuple(
                Axis(name=a["name"], tags=frozenset(a.get("tags", ()))) for a in axes_doc
            )
        )
    except (GuardgateError, KeyError, TypeError) as exc:
        out.error("$.axes", str(exc))
        return None, out.findings

    thresholds_doc = doc.get("thresholds", {})
    try:
        thresholds = ConflictThresholds(
            epsilon=float(thresholds_doc.get("epsilon", 1e-6)),
            theta=float(thresholds_doc.get("theta", -0.8)),
            delta=float(thresholds_doc.get("delta", 1e-6)),
        )
    except (TypeError, ValueError) as exc:
        out.error("$.thresholds", str(exc))
        thresholds = ConflictThresholds()

    resources = Resources()
    base = base_dir or Path(".")
    for name, rel in doc.get("lexicons", {}).items():
        try:
            resources.lexicons[name] = load_lexicon(base / rel)
        except (OSError, GuardgateError) as exc:
            out.error(f"$.lexicons.{name}", str(exc))
    for name, rel in doc.get("models", {}).items():
        try:
            resources.models[name] = load_model(base / rel)
        except (OSError, GuardgateError) as exc:
            out.error(f"$.models.{name}", str(exc))

    policy_tags: set[str] = set()
    for adoc in doc.get("assistants", ()):
        for pdoc in list(adoc.get("inputPolicies", ())) + list(adoc.get("outputPolicies", ())):
            policy_tags |= set(pdoc.get("contextTags", ()))

    contexts_doc = doc.get("analysisContexts")
    if contexts_doc is None:
        contexts = default_analysis_contexts(space, policy_tags)
    else:
        contexts = [frozenset(c) for c in contexts_doc]
        if frozenset() not in contexts:
            contexts = [frozenset()] + contexts  # universal context is always included

    assistants: dict[str, Assistant] = {}
    assistants_doc = doc.get("assistants")
    if not isinstance(assistants_doc, list) or not assistants_doc:
        out.error("$.assistants", "at least one assistant is required")
    else:
        for i, adoc in enumerate(assistants_doc):
            assistant = _parse_assistant(
                adoc, space, resources, contexts, thresholds, f"$.assistants[{i}]", out
            )
            if assistant is not None:
                if assistant.id in assistants:
                    out.error(f"$.assistants[{i}]", f"duplicate assistant id {assistant.id!r}")
                else:
                    assistants[assistant.id] = assistant

    if out.has_errors:
        return None, out.findings
    deployment = Deployment(
        schema_version=version,
        axis_space=space,
        analysis_contexts=contexts,
        thresholds=thresholds,
        resources=resources,
        assistants=assistants,
        raw=doc,
    )
    return deployment, out.findings


def load_deployment(path: str | Path) -> Deployment:
    """Load a deployment from a JSON file; raises ValidationFailed on errors."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text("utf-8"))
    except OSError as exc:
        raise ValidationFailed(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationFailed(f"config is not valid JSON: {exc}") from exc
    deployment, findings = parse_deployment(doc, base_dir=p.parent)
    if deployment is None:
        errors = [f for f in findings if f["severity"] == "error"]
        raise ValidationFailed(
            f"configuration invalid ({len(errors)} error(s))", findings=findings
        )
    return deployment
