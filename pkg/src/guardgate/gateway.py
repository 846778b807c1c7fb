"""HTTP gateway: proxies chat completions through an assistant's policies.

Request pipeline::

    restriction gate -> input policies -> upstream -> output policies

A blocking verdict stops the interaction before the upstream call; redact
verdicts rewrite the forwarded text so sensitive spans never leave the
gateway; escalations hold the interaction in memory until a human
resolves the review item (or a TTL expires it as a block). Every
evaluated message side lands in the append-only audit log.

Conflicts between the policies active for a request are resolved by the
assistant's configured strategy; when the strategy yields a single
governing policy, only that policy's verdict applies to the message.

Endpoints (see README for payloads):

* POST /v1/chat/completions  - guarded proxy
* GET  /admin/config         - full deployment document
* GET  /admin/assistants     - assistant summaries
* GET  /admin/assistants/{id}
* POST /admin/assistants     - replace deployment (validated)
* POST /admin/assistants/validate
* POST /admin/assistants/{id}/analyze
* GET  /admin/audit?session=...
* GET  /admin/reviews?status=...
* GET  /admin/reviews/{id}
* POST /admin/reviews/{id}/resolve

Environment: GG_CONFIG, GG_UPSTREAM_URL, GG_UPSTREAM_MODE, GG_AUDIT_PATH,
GG_LISTEN_ADDR.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .audit import AuditLog
from .config import (
    Assistant,
    ConflictStrategy,
    Deployment,
    UpstreamMode,
    load_deployment,
    parse_deployment,
)
from .conflicts import (
    ActiveGuardrail,
    contextual_activation,
    detect_variant,
    governing_policy_id,
    hybrid_resolve,
    precedence_resolve,
    weighted_average,
)
from .errors import AlreadyResolved, UnknownReview, UpstreamTimeout, ValidationFailed
from .policy import (
    CompiledPolicy,
    Direction,
    RestrictionKind,
    VerdictAction,
    ViolationTracker,
    action_rank,
    evaluate_policies,
)
from .reviews import ReviewQueue, ReviewStatus
from .upstream import build_upstream, reply_payload
from .vectors import dot

SESSION_HEADER = "x-session-id"
CONTEXT_HEADER = "x-context-tags"
DEFAULT_SESSION = "default"
HOLD_TTL_SECONDS = 15 * 60.0

_BOUNDARY_GUARD = 1e-9


@dataclass
class HeldInteraction:
    """A chat exchange parked while a review item is pending."""

    review_id: str
    session_id: str
    assistant_id: str
    direction: Direction
    context: frozenset[str]
    model: str
    user_texts: list[str]            # original user contents (input holds)
    forward_messages: list[dict]     # ready-to-forward payload messages (input holds)
    reply_content: str = ""          # original upstream reply (output holds)
    released_content: str = ""       # transformed reply to release on allow
    evaluated: bool = True           # False when a conflict parked the text unevaluated
    created_at: float = 0.0
    expires_at: float = 0.0


@dataclass
class SideOutcome:
    kind: str  # "proceed" | "block" | "escalate"
    action: VerdictAction
    transformed_texts: list[str]
    triggered_rule_ids: tuple[str, ...] = ()
    redaction_count: int = 0
    alerts: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    governed_by: Optional[str] = None
    blocking_policy_id: Optional[str] = None
    conflict_snapshot: Optional[dict] = None


class _SafeDict(dict):
    def __missing__(self, key):
        return "{" + key + "}"


def _fill(template: str, **values) -> str:
    return template.format_map(_SafeDict(values))


class GatewayState:
    """Everything mutable behind the endpoints. Config swaps atomically."""

    def __init__(
        self,
        deployment: Deployment,
        audit_path: str | Path,
        clock=time.time,
        hold_ttl: float = HOLD_TTL_SECONDS,
        mock_responder=None,
    ):
        self.clock = clock
        self.audit = AuditLog(audit_path, clock=clock)
        self.reviews = ReviewQueue(clock=clock)
        self.hold_ttl = hold_ttl
        self._mock_responder = mock_responder
        self._lock = threading.Lock()
        self.holds: dict[str, HeldInteraction] = {}
        self.deployment: Deployment = None  # type: ignore[assignment]
        self.upstreams: dict[str, object] = {}
        self.trackers: dict[str, ViolationTracker] = {}
        self.install(deployment)

    def install(self, deployment: Deployment) -> None:
        upstreams = {
            a.id: build_upstream(a.upstream, responder=self._mock_responder)
            for a in deployment.assistants.values()
        }
        trackers = {
            a.id: ViolationTracker(a.action_config.escalation, clock=self.clock)
            for a in deployment.assistants.values()
        }
        with self._lock:
            self.deployment = deployment
            self.upstreams = upstreams
            self.trackers = trackers

    def assistant_for_model(self, model: str) -> Assistant:
        assistants = self.deployment.assistants
        if model in assistants:
            return assistants[model]
        if len(assistants) == 1:
            return next(iter(assistants.values()))
        raise HTTPException(status_code=404, detail=f"no assistant for model {model!r}")

    # ---- held interactions -------------------------------------------------

    def park(self, hold: HeldInteraction) -> None:
        with self._lock:
            self.holds[hold.review_id] = hold

    def take_hold(self, review_id: str) -> Optional[HeldInteraction]:
        with self._lock:
            return self.holds.pop(review_id, None)

    def expire_holds(self) -> None:
        """TTL sweep: expired holds resolve as Block."""
        now = self.clock()
        with self._lock:
            expired = [h for h in self.holds.values() if h.expires_at <= now]
            for hold in expired:
                del self.holds[hold.review_id]
        for hold in expired:
            try:
                item = self.reviews.resolve(
                    hold.review_id, ReviewStatus.RESOLVED_BLOCK, "system:ttl"
                )
                item.outcome = _refusal_payload(
                    self.deployment.assistants[hold.assistant_id], hold.model, "hold-expired"
                )
            except (AlreadyResolved, UnknownReview):
                pass


# --------------------------------------------------------------------------
# conflict-aware policy selection
# --------------------------------------------------------------------------

def _runtime_conflict(active: list[ActiveGuardrail], theta: float) -> Optional[float]:
    """Lowest pairwise dot at or below theta, if any pair conflicts."""
    worst = None
    for i in range(len(active)):
        for j in range(i + 1, len(active)):
            d = dot(active[i].vector, active[j].vector)
            if d <= theta + _BOUNDARY_GUARD and (worst is None or d < worst):
                worst = d
    return worst


def _conflict_snapshot(
    assistant: Assistant,
    direction: Direction,
    context: frozenset[str],
    active: list[ActiveGuardrail],
    worst_dot: float,
    reason: str,
    thresholds,
) -> dict:
    variant = detect_variant(active, thresholds)
    return {
        "type": "guardrail-conflict",
        "direction": direction.value,
        "strategy": assistant.conflict_strategy.value,
        "reason": reason,
        "context": sorted(context),
        "policies": sorted(ag.handle.policy_id for ag in active),
        "worstDot": round(worst_dot, 6),
        "variant": variant.value if variant else None,
    }


def select_policies(
    state: GatewayState,
    assistant: Assistant,
    direction: Direction,
    context: frozenset[str],
) -> tuple[list[CompiledPolicy], list[str], Optional[dict], Optional[str]]:
    """Pick the policies whose verdicts govern this message side.

    Returns (policies, alerts, conflict_snapshot, governed_by). When the
    active set conflicts (some pairwise dot <= theta) the assistant's
    strategy resolves it to a single governing policy; an unresolvable
    conflict (ethically blind, or strategy=human) returns a snapshot for
    escalation instead.
    """
    deployment = state.deployment
    thresholds = deployment.thresholds
    handles = assistant.guardrail_handles(direction)
    active = contextual_activation(context, handles, deployment.axis_space)
    compiled = (
        assistant.compiled_input if direction is Direction.INPUT else assistant.compiled_output
    )
    by_id = {cp.id: cp for cp in compiled}
    active_policies = [by_id[ag.handle.policy_id] for ag in active]

    if len(active) < 2:
        return active_policies, [], None, None
    worst = _runtime_conflict(active, thresholds.theta)
    if worst is None:
        return active_policies, [], None, None

    strategy = assistant.conflict_strategy
    if strategy is ConflictStrategy.HUMAN:
        snapshot = _conflict_snapshot(
            assistant, direction, context, active, worst, "strategy=human", thresholds
        )
        return active_policies, [], snapshot, None

    if strategy is ConflictStrategy.CONTEXTUAL:
        # activation masking already narrowed the set; a surviving conflict
        # has no automatic answer under this strategy
        snapshot = _conflict_snapshot(
            assistant,
            direction,
            context,
            active,
            worst,
            "conflict survives contextual masking",
            thresholds,
        )
        return active_policies, [], snapshot, None

    if strategy is ConflictStrategy.WEIGHTED_AVERAGE:
        resolution = weighted_average(active, thresholds)
    elif strategy is ConflictStrategy.PRECEDENCE:
        resolution = precedence_resolve(active)
    else:
        resolution = hybrid_resolve(active, thresholds)

    alerts = [resolution.alert] if resolution.alert else []
    governed = governing_policy_id(resolution, active)
    if governed is None:  # ethically blind and no precedence fallback
        snapshot = _conflict_snapshot(
            assistant, direction, context, active, worst, "ethically blind", thresholds
        )
        return active_policies, alerts, snapshot, None
    return [by_id[governed]], alerts, None, governed


# --------------------------------------------------------------------------
# side evaluation
# --------------------------------------------------------------------------

def guard_side(
    state: GatewayState,
    assistant: Assistant,
    direction: Direction,
    texts: list[str],
    context: frozenset[str],
) -> SideOutcome:
    """Run one side (all user messages, or the reply) through its policies."""
    policies, alerts, conflict_snapshot, governed = select_policies(
        state, assistant, direction, context
    )
    if conflict_snapshot is not None:
        return SideOutcome(
            kind="escalate",
            action=VerdictAction.ESCALATE,
            transformed_texts=list(texts),
            alerts=alerts,
            conflict_snapshot=conflict_snapshot,
        )

    merged_action = VerdictAction.ALLOW
    transformed: list[str] = []
    rule_ids: list[str] = []
    redactions = 0
    warnings: list[str] = []
    blocking_policy: Optional[str] = None

    for text in texts:
        if not policies:
            transformed.append(text)
            continue
        evaluation = evaluate_policies(policies, text, context, state.deployment.resources)
        verdict = evaluation.merged
        merged_action = (
            verdict.action
            if action_rank(verdict.action) > action_rank(merged_action)
            else merged_action
        )
        rule_ids.extend(verdict.triggered_rule_ids)
        redactions += len(verdict.redaction_spans)
        transformed.append(
            verdict.transformed_text if verdict.transformed_text is not None else text
        )
        if verdict.action is VerdictAction.BLOCK and blocking_policy is None:
            blocking_policy = _policy_of_block(evaluation.per_policy)
        if verdict.action is VerdictAction.WARN:
            warnings.append(
                _fill(
                    assistant.action_config.on_warn,
                    policy_id=_policy_of_action(evaluation.per_policy, VerdictAction.WARN),
                    rule_ids=", ".join(verdict.triggered_rule_ids),
                )
            )

    if merged_action is VerdictAction.BLOCK:
        kind = "block"
    elif merged_action is VerdictAction.ESCALATE:
        kind = "escalate"
    else:
        kind = "proceed"
    snapshot = None
    if kind == "escalate":
        snapshot = {
            "type": "rule-escalation",
            "direction": direction.value,
            "ruleIds": sorted(set(rule_ids)),
        }
    return SideOutcome(
        kind=kind,
        action=merged_action,
        transformed_texts=transformed,
        triggered_rule_ids=tuple(dict.fromkeys(rule_ids)),
        redaction_count=redactions,
        alerts=alerts,
        warnings=warnings,
        governed_by=governed,
        blocking_policy_id=blocking_policy,
        conflict_snapshot=snapshot,
    )


def _policy_of_block(per_policy) -> Optional[str]:
    for policy_id, verdict in per_policy:
        if verdict is not None and verdict.action is VerdictAction.BLOCK:
            return policy_id
    return None


def _policy_of_action(per_policy, action: VerdictAction) -> str:
    for policy_id, verdict in per_policy:
        if verdict is not None and verdict.action is action:
            return policy_id
    return "policy"


def _refusal_payload(assistant: Assistant, model: str, policy_id: Optional[str]) -> dict:
    message = _fill(
        assistant.action_config.on_block.message, policy_id=policy_id or "policy"
    )
    payload = reply_payload(model, message)
    payload["guardrails"] = {"action": "block", "policyId": policy_id}
    return payload


# --------------------------------------------------------------------------
# app factory
# --------------------------------------------------------------------------

class ResolveRequest(BaseModel):
    decision: str  # "allow" | "block" | "precedence"
    policyId: Optional[str] = None
    operatorId: str = "operator"


_DECISION_STATUS = {
    "allow": ReviewStatus.RESOLVED_ALLOW,
    "block": ReviewStatus.RESOLVED_BLOCK,
    "precedence": ReviewStatus.RESOLVED_PRECEDENCE,
}


def create_app(
    deployment: Deployment,
    audit_path: str | Path = "audit.jsonl",
    clock=time.time,
    hold_ttl: float = HOLD_TTL_SECONDS,
    mock_responder=None,
) -> FastAPI:
    state = GatewayState(
        deployment,
        audit_path=audit_path,
        clock=clock,
        hold_ttl=hold_ttl,
        mock_responder=mock_responder,
    )
    app = FastAPI(title="guardgate", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.gateway = state

    def _audit(
        session_id: str,
        direction: Direction,
        assistant: Assistant,
        outcome: SideOutcome,
        upstream_called: bool,
        review_id: Optional[str] = None,
    ) -> None:
        state.audit.log(
            session_id=session_id,
            direction=direction.value,
            assistant_id=assistant.id,
            verdict_action=outcome.action.value,
            triggered_rule_ids=outcome.triggered_rule_ids,
            redaction_count=outcome.redaction_count,
            upstream_called=upstream_called,
            review_id=review_id,
        )

    def _record_violation(
        assistant: Assistant, session_id: str, action: VerdictAction
    ) -> None:
        tracker = state.trackers[assistant.id]
        restriction = tracker.record(session_id, action)
        if restriction is RestrictionKind.HUMAN_REVIEW:
            state.reviews.escalate(
                {
                    "type": "repeat-violations",
                    "threshold": assistant.action_config.escalation.repeat_threshold,
                    "windowSeconds": assistant.action_config.escalation.window_seconds,
                },
                session_id,
            )

    def _escalate_and_hold(
        assistant: Assistant,
        session_id: str,
        outcome: SideOutcome,
        hold: HeldInteraction,
    ) -> JSONResponse:
        item, created = state.reviews.escalate(outcome.conflict_snapshot, session_id)
        hold.review_id = item.id
        now = state.clock()
        hold.created_at = now
        hold.expires_at = now + state.hold_ttl
        if created:
            state.park(hold)
        _audit(session_id, hold.direction, assistant, outcome, False, review_id=item.id)
        if (outcome.conflict_snapshot or {}).get("type") == "rule-escalation":
            _record_violation(assistant, session_id, outcome.action)
        return JSONResponse(
            status_code=202,
            content={
                "object": "guardgate.held",
                "reviewId": item.id,
                "sessionId": session_id,
                "guardrails": {
                    "action": "escalate",
                    "conflict": outcome.conflict_snapshot,
                    "alerts": outcome.alerts,
                },
            },
        )

    def _forward_messages(
        assistant: Assistant, body: dict, transformed_user: list[str]
    ) -> list[dict]:
        """Client messages with user contents replaced and the configured
        system prompt prepended (client-supplied system messages dropped)."""
        out = []
        if assistant.system_prompt:
            out.append({"role": "system", "content": assistant.system_prompt})
        it = iter(transformed_user)
        for message in body.get("messages", []):
            role = message.get("role")
            if role == "system":
                continue
            if role == "user":
                out.append({"role": "user", "content": next(it)})
            else:
                out.append(dict(message))
        return out

    def _call_upstream_and_guard_output(
        assistant: Assistant,
        session_id: str,
        context: frozenset[str],
        model: str,
        forward_messages: list[dict],
        input_outcome: Optional[SideOutcome],
    ):
        """Forward to the provider, then run output policies on the reply."""
        upstream = state.upstreams[assistant.id]
        payload = {"model": model, "messages": forward_messages}
        try:
            reply = upstream.chat(payload)
        except UpstreamTimeout as exc:
            return JSONResponse(
                status_code=502,
                content={"error": {"type": "upstream-timeout", "message": str(exc)}},
            )
        try:
            content = reply["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            content = ""

        outcome = guard_side(state, assistant, Direction.OUTPUT, [content], context)
        if outcome.kind == "escalate":
            hold = HeldInteraction(
                review_id="",
                session_id=session_id,
                assistant_id=assistant.id,
                direction=Direction.OUTPUT,
                context=context,
                model=model,
                user_texts=[],
                forward_messages=forward_messages,
                reply_content=content,
                released_content=outcome.transformed_texts[0],
                evaluated=outcome.conflict_snapshot.get("type") == "rule-escalation",
            )
            return _escalate_and_hold(assistant, session_id, outcome, hold)

        _audit(session_id, Direction.OUTPUT, assistant, outcome, True)
        _record_violation(assistant, session_id, outcome.action)

        if outcome.kind == "block":
            refusal = _refusal_payload(assistant, model, outcome.blocking_policy_id)
            refusal["guardrails"]["direction"] = "output"
            return JSONResponse(content=refusal)

        final = dict(reply)
        final["choices"] = [dict(reply["choices"][0])]
        final["choices"][0]["message"] = {
            "role": "assistant",
            "content": outcome.transformed_texts[0],
        }
        guardrails = {
            "action": outcome.action.value,
            "warnings": outcome.warnings + ((input_outcome.warnings if input_outcome else [])),
            "alerts": outcome.alerts + ((input_outcome.alerts if input_outcome else [])),
            "redactions": {
                "input": input_outcome.redaction_count if input_outcome else 0,
                "output": outcome.redaction_count,
            },
        }
        if input_outcome is not None:
            guardrails["inputAction"] = input_outcome.action.value
        final["guardrails"] = guardrails
        return JSONResponse(content=final)

    # ---- endpoints ---------------------------------------------------------

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "assistants": sorted(state.deployment.assistants)}

    @app.post("/v1/chat/completions")
    async def chat_completions(request: Request):
        body = await request.json()
        if not isinstance(body, dict) or not isinstance(body.get("messages"), list):
            raise HTTPException(status_code=422, detail="body must carry a messages list")
        model = body.get("model", "")
        assistant = state.assistant_for_model(model)
        session_id = request.headers.get(SESSION_HEADER, DEFAULT_SESSION)
        raw_tags = request.headers.get(CONTEXT_HEADER, "")
        context = frozenset(t.strip() for t in raw_tags.split(",") if t.strip())

        state.expire_holds()

        pending = state.reviews.pending_for_session(session_id)
        if pending:
            return JSONResponse(
                status_code=409,
                content={
                    "error": {
                        "type": "review-pending",
                        "message": "session has a pending human review",
                        "reviewId": pending[0].id,
                    }
                },
            )

        restriction = state.trackers[assistant.id].active_restriction(session_id)
        if restriction is not None:
            return JSONResponse(
                status_code=429,
                content={
                    "error": {
                        "type": "session-restricted",
                        "restriction": restriction.value,
                        "message": "session temporarily blocked after repeated violations",
                    }
                },
            )

        user_texts = [
            m.get("content", "") for m in body["messages"] if m.get("role") == "user"
        ]
        outcome = guard_side(state, assistant, Direction.INPUT, user_texts, context)

        if outcome.kind == "escalate":
            hold = HeldInteraction(
                review_id="",
                session_id=session_id,
                assistant_id=assistant.id,
                direction=Direction.INPUT,
                context=context,
                model=model,
                user_texts=user_texts,
                forward_messages=_forward_messages(assistant, body, outcome.transformed_texts),
                evaluated=outcome.conflict_snapshot.get("type") == "rule-escalation",
            )
            return _escalate_and_hold(assistant, session_id, outcome, hold)

        if outcome.kind == "block":
            _audit(session_id, Direction.INPUT, assistant, outcome, False)
            _record_violation(assistant, session_id, outcome.action)
            refusal = _refusal_payload(assistant, model, outcome.blocking_policy_id)
            refusal["guardrails"]["direction"] = "input"
            return JSONResponse(content=refusal)

        _audit(session_id, Direction.INPUT, assistant, outcome, True)
        _record_violation(assistant, session_id, outcome.action)
        forward = _forward_messages(assistant, body, outcome.transformed_texts)
        return _call_upstream_and_guard_output(
            assistant, session_id, context, model, forward, outcome
        )

    # ---- admin -------------------------------------------------------------

    @app.get("/admin/config")
    def get_config():
        return state.deployment.raw

    @app.get("/admin/assistants")
    def list_assistants():
        out = []
        for assistant in state.deployment.assistants.values():
            out.append(
                {
                    "id": assistant.id,
                    "conflictStrategy": assistant.conflict_strategy.value,
                    "inputPolicies": [p.id for p in assistant.input_policies],
                    "outputPolicies": [p.id for p in assistant.output_policies],
                    "upstreamMode": assistant.upstream.mode.value,
                    "blockingConflicts": assistant.analysis.blocking
                    if assistant.analysis
                    else False,
                }
            )
        return out

    @app.get("/admin/assistants/{assistant_id}")
    def get_assistant(assistant_id: str):
        for adoc in state.deployment.raw.get("assistants", []):
            if adoc.get("id") == assistant_id:
                return adoc
        raise HTTPException(status_code=404, detail=f"no assistant {assistant_id!r}")

    @app.post("/admin/assistants")
    async def replace_deployment(request: Request):
        doc = await request.json()
        deployment, findings = parse_deployment(doc)
        if deployment is None:
            return JSONResponse(
                status_code=422,
                content={"error": {"type": "validation-failed"}, "findings": findings},
            )
        state.install(deployment)
        return {"status": "loaded", "assistants": sorted(deployment.assistants), "findings": findings}

    @app.post("/admin/assistants/validate")
    async def validate_deployment(request: Request):
        doc = await request.json()
        deployment, findings = parse_deployment(doc)
        return {"valid": deployment is not None, "findings": findings}

    @app.post("/admin/assistants/{assistant_id}/analyze")
    def analyze_assistant(assistant_id: str):
        assistant = state.deployment.assistants.get(assistant_id)
        if assistant is None:
            raise HTTPException(status_code=404, detail=f"no assistant {assistant_id!r}")
        report = assistant.analysis
        return report.to_dict() if report else {"findings": [], "scenarios": []}

    @app.get("/admin/audit")
    def list_audit(session: Optional[str] = None, limit: Optional[int] = None):
        records = state.audit.read(session_id=session, limit=limit)
        return [r.to_dict() for r in records]

    @app.get("/admin/reviews")
    def list_reviews(status: Optional[str] = None):
        state.expire_holds()
        parsed = None
        if status is not None:
            try:
                parsed = ReviewStatus(status.lower())
            except ValueError:
                raise HTTPException(status_code=422, detail=f"unknown status {status!r}")
        return [item.to_dict() for item in state.reviews.list(parsed)]

    @app.get("/admin/reviews/{review_id}")
    def get_review(review_id: str):
        state.expire_holds()
        try:
            return state.reviews.get(review_id).to_dict()
        except UnknownReview as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/admin/reviews/{review_id}/resolve")
    def resolve_review(review_id: str, body: ResolveRequest):
        state.expire_holds()
        status = _DECISION_STATUS.get(body.decision)
        if status is None:
            raise HTTPException(
                status_code=422, detail=f"decision must be one of {sorted(_DECISION_STATUS)}"
            )
        if status is ReviewStatus.RESOLVED_PRECEDENCE and not body.policyId:
            raise HTTPException(status_code=422, detail="precedence decision needs policyId")
        try:
            item = state.reviews.resolve(
                review_id, status, body.operatorId, policy_id=body.policyId
            )
        except UnknownReview as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except AlreadyResolved as exc:
            raise HTTPException(status_code=409, detail=str(exc))

        hold = state.take_hold(review_id)
        outcome_payload: dict
        if hold is None:
            # repeat-violation reviews have no parked exchange
            cleared = False
            if item.conflict.get("type") == "repeat-violations" and status is ReviewStatus.RESOLVED_ALLOW:
                for tracker in state.trackers.values():
                    tracker.clear(item.session_id)
                cleared = True
            outcome_payload = {"resumed": False, "restrictionCleared": cleared}
        else:
            assistant = state.deployment.assistants[hold.assistant_id]
            outcome_payload = _resume_hold(assistant, hold, item, status, body.policyId)
        item.outcome = outcome_payload
        return {"review": item.to_dict(), "outcome": outcome_payload}

    def _active_compiled(
        assistant: Assistant, direction: Direction, context: frozenset[str]
    ) -> list[CompiledPolicy]:
        handles = assistant.guardrail_handles(direction)
        active = contextual_activation(context, handles, state.deployment.axis_space)
        compiled = (
            assistant.compiled_input
            if direction is Direction.INPUT
            else assistant.compiled_output
        )
        by_id = {cp.id: cp for cp in compiled}
        return [by_id[ag.handle.policy_id] for ag in active]

    def _evaluate_texts(
        policies: list[CompiledPolicy], texts: list[str], context: frozenset[str]
    ) -> tuple[bool, list[str]]:
        """(blocked, transformed texts) under the given policies. Escalate
        verdicts proceed with their transform: the operator's decision stands
        in for a second review."""
        blocked = False
        transformed = []
        for text in texts:
            if not policies:
                transformed.append(text)
                continue
            verdict = evaluate_policies(
                policies, text, context, state.deployment.resources
            ).merged
            if verdict.action is VerdictAction.BLOCK:
                blocked = True
            transformed.append(
                verdict.transformed_text if verdict.transformed_text is not None else text
            )
        return blocked, transformed

    def _resume_hold(
        assistant: Assistant,
        hold: HeldInteraction,
        item,
        status: ReviewStatus,
        policy_id: Optional[str],
    ) -> dict:
        if status is ReviewStatus.RESOLVED_BLOCK:
            return _refusal_payload(assistant, hold.model, "human-review")

        if status is ReviewStatus.RESOLVED_PRECEDENCE:
            chosen = _compiled_policy(assistant, policy_id)
            if chosen is None:
                raise HTTPException(
                    status_code=422, detail=f"assistant has no policy {policy_id!r}"
                )
            policies = [chosen]
        elif hold.evaluated:
            policies = []  # the parked text already carries its redactions
        else:
            # conflict holds parked unevaluated text: an allow decision still
            # runs every active policy (conservative merge) before forwarding
            policies = _active_compiled(assistant, hold.direction, hold.context)

        if hold.direction is Direction.INPUT:
            blocked, transformed = _evaluate_texts(policies, hold.user_texts, hold.context)
            if blocked:
                return _refusal_payload(assistant, hold.model, policy_id or "policy")
            forward = (
                _substitute_user_contents(hold.forward_messages, transformed)
                if policies
                else hold.forward_messages
            )
            response = _call_upstream_and_guard_output(
                assistant, hold.session_id, hold.context, hold.model, forward, None
            )
            return _json_of(response)

        # output hold: release, or re-evaluate the parked reply first
        if policies:
            blocked, transformed = _evaluate_texts(policies, [hold.reply_content], hold.context)
            if blocked:
                return _refusal_payload(assistant, hold.model, policy_id or "policy")
            return reply_payload(hold.model, transformed[0])
        return reply_payload(hold.model, hold.released_content)

    def _compiled_policy(assistant: Assistant, policy_id: Optional[str]):
        for cp in assistant.compiled_input + assistant.compiled_output:
            if cp.id == policy_id:
                return cp
        return None

    def _substitute_user_contents(messages: list[dict], contents: list[str]) -> list[dict]:
        out = []
        it = iter(contents)
        for message in messages:
            if message.get("role") == "user":
                out.append({"role": "user", "content": next(it)})
            else:
                out.append(dict(message))
        return out

    def _json_of(response) -> dict:
        if isinstance(response, JSONResponse):
            return json.loads(response.body)
        return response

    return app


def create_app_from_env() -> FastAPI:
    config_path = os.environ.get("GG_CONFIG")
    if not config_path:
        raise ValidationFailed("GG_CONFIG must point at a deployment config file")
    deployment = load_deployment(config_path)
    mode = os.environ.get("GG_UPSTREAM_MODE")
    url = os.environ.get("GG_UPSTREAM_URL")
    if mode or url:
        for assistant in deployment.assistants.values():
            new_mode = UpstreamMode(mode) if mode else assistant.upstream.mode
            assistant.upstream = type(assistant.upstream)(
                base_url=url or assistant.upstream.base_url,
                mode=new_mode,
                timeout_ms=assistant.upstream.timeout_ms,
                auth_token_ref=assistant.upstream.auth_token_ref,
            )
    audit_path = os.environ.get("GG_AUDIT_PATH", "audit.jsonl")
    return create_app(deployment, audit_path=audit_path)


def main() -> None:
    import uvicorn

    app = create_app_from_env()
    listen = os.environ.get("GG_LISTEN_ADDR", "127.0.0.1:8080")
    host, _, port = listen.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080), log_level="warning")


if __name__ == "__main__":
    main()
