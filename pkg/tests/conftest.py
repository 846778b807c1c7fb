"""Shared fixtures: deployment documents and gateway test clients."""

import copy

import pytest
from fastapi.testclient import TestClient

from guardgate.config import parse_deployment
from guardgate.gateway import create_app


BASE_DOC = {
    "schemaVersion": 1,
    "axes": [
        {"name": "privacy", "tags": ["sensitive-personal-info"]},
        {"name": "transparency", "tags": ["public-accountability"]},
    ],
    "assistants": [
        {
            "id": "helper",
            "systemPrompt": "You are a helpful assistant.",
            "conflictStrategy": "hybrid",
            "upstream": {"mode": "mock", "timeoutMs": 5000},
            "actions": {
                "onWarn": "Warning: policy {policy_id} flagged this message.",
                "onBlock": {"message": "This request was blocked by policy {policy_id}."},
                "escalation": {
                    "enabled": True,
                    "repeatThreshold": 3,
                    "windowSeconds": 60,
                    "restriction": "temp-block",
                },
            },
            "inputPolicies": [
                {
                    "id": "pii-input",
                    "direction": "input",
                    "ethicalVector": {"privacy": 1.0},
                    "priority": 1,
                    "rules": [
                        {"id": "pii.ssn", "kind": "static", "action": "redact", "builtin": "ssn"},
                        {"id": "pii.email", "kind": "static", "action": "redact", "builtin": "email"},
                        {"id": "pii.phone", "kind": "static", "action": "redact", "builtin": "phone"},
                        {"id": "input.block", "kind": "static", "action": "block",
                         "pattern": "\\bforbidden\\b"},
                        {"id": "input.warn", "kind": "natural-language", "action": "warn",
                         "keywords": ["warnword"]},
                        {"id": "input.escalate", "kind": "natural-language", "action": "escalate",
                         "keywords": ["human review"]},
                    ],
                },
            ],
            "outputPolicies": [
                {
                    "id": "output-guard",
                    "direction": "output",
                    "ethicalVector": {"transparency": 1.0},
                    "priority": 2,
                    "rules": [
                        {"id": "out.ssn", "kind": "static", "action": "redact", "builtin": "ssn"},
                        {"id": "out.block", "kind": "static", "action": "block",
                         "pattern": "\\btoxic\\b"},
                    ],
                },
            ],
        }
    ],
}


def make_doc(**overrides):
    doc = copy.deepcopy(BASE_DOC)
    doc.update(overrides)
    return doc


def conflicted_doc(strategy="hybrid", dot=-1.0, allow_opposition=True):
    """Two opposed input policies (privacy vs transparency vector).

    Axes are untagged here so the configured dot holds in every context
    (tagged axes would renormalize partial opposition to -1 in narrow
    contexts).
    """
    doc = copy.deepcopy(BASE_DOC)
    doc["axes"] = [{"name": "privacy"}, {"name": "transparency"}]
    assistant = doc["assistants"][0]
    assistant["conflictStrategy"] = strategy
    assistant["allowCompleteOpposition"] = allow_opposition
    import math

    second = {
        "id": "transparency-input",
        "direction": "input",
        "ethicalVector": {
            "privacy": dot,
            "transparency": math.sqrt(max(0.0, 1.0 - dot * dot)),
        },
        "priority": 3,
        "rules": [
            {"id": "t.keep", "kind": "natural-language", "action": "warn",
             "keywords": ["audit trail"]},
        ],
    }
    assistant["inputPolicies"].append(second)
    return doc


class FakeClock:
    def __init__(self, start=1_000_000.0):
        self.now = start

    def advance(self, seconds):
        self.now += seconds

    def __call__(self):
        return self.now


@pytest.fixture
def fake_clock():
    return FakeClock()


def build_client(doc, tmp_path, clock=None, hold_ttl=900.0, mock_responder=None):
    deployment, findings = parse_deployment(doc)
    assert deployment is not None, findings
    app = create_app(
        deployment,
        audit_path=tmp_path / "audit.jsonl",
        clock=clock or FakeClock(),
        hold_ttl=hold_ttl,
        mock_responder=mock_responder,
    )
    return TestClient(app)


@pytest.fixture
def client(tmp_path, fake_clock):
    return build_client(make_doc(), tmp_path, clock=fake_clock)


def chat(client, content, session="s1", model="helper", context=None, messages=None):
    headers = {"X-Session-Id": session}
    if context:
        headers["X-Context-Tags"] = ",".join(context)
    body = {"model": model, "messages": messages or [{"role": "user", "content": content}]}
    return client.post("/v1/chat/completions", json=body, headers=headers)


def upstream_of(client, assistant_id="helper"):
    return client.app.state.gateway.upstreams[assistant_id]


_CRITERION_TITLES = {
    "test_criterion_1_conflict_case_matrix": "1. conflict-case matrix (eps=1e-6, theta=-0.8)",
    "test_criterion_2_variant_detection": "2. variant detection (I/II/III)",
    "test_criterion_3_hybrid_equivalence": "3. hybrid equivalence (>=1000 randomized sets)",
    "test_criterion_4_privacy_end_to_end": "4. privacy end-to-end (100 sessions, 0 leaks)",
    "test_criterion_5_block_isolation": "5. block isolation (0 upstream calls)",
    "test_criterion_6_ordering_and_short_circuit": "6. ordering & short-circuit",
    "test_criterion_7_classifier": "7. classifier determinism & correctness",
    "test_criterion_8_static_analysis_gate": "8. static analysis gate (exit 2 / exit 0)",
    "test_criterion_9_repeat_violation_restriction": "9. repeat-violation restriction (K=3, W=60s)",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, ()):
            name = getattr(report, "nodeid", "").split("::")[-1]
            if name in _CRITERION_TITLES:
                lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, status in sorted(lines):
        terminalreporter.write_line(f"{status}  {_CRITERION_TITLES[name]}")
