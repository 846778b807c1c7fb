"""Upstream chat-completion providers: a recording mock and a live HTTP client.

The mock is the default for tests and offline runs: it records every
payload it receives (so tests can prove sensitive data never reached it)
and echoes the last user message back. A ``responder`` hook swaps in
custom reply content.
"""

from __future__ import annotations

import copy
import os
import threading
from typing import Callable, Optional

import httpx

from .config import UpstreamConfig, UpstreamMode
from .errors import GuardgateError, UpstreamTimeout


def _last_user_content(payload: dict) -> str:
    for message in reversed(payload.get("messages", [])):
        if message.get("role") == "user":
            return message.get("content", "")
    return ""


def reply_payload(model: str, content: str) -> dict:
    return {
        "id": "chatcmpl-mock",
        "object": "chat.completion",
        "model": model,
        "choices": [
            {
                "index": 0,
                "message": {"role": "assistant", "content": content},
                "finish_reason": "stop",
            }
        ],
    }


class MockUpstream:
    """In-process provider that records payloads and echoes user content."""

    def __init__(self, responder: Optional[Callable[[dict], str]] = None):
        self._responder = responder
        self._lock = threading.Lock()
        self.recorded: list[dict] = []

    def chat(self, payload: dict) -> dict:
        with self._lock:
            self.recorded.append(copy.deepcopy(payload))
        if self._responder is not None:
            content = self._responder(payload)
        else:
            content = f"Echo: {_last_user_content(payload)}"
        return reply_payload(payload.get("model", "mock"), content)

    @property
    def call_count(self) -> int:
        with self._lock:
            return len(self.recorded)


class LiveUpstream:
    """HTTP client for a chat-completions-compatible provider."""

    def __init__(self, config: UpstreamConfig):
        if config.mode is not UpstreamMode.LIVE:
            raise GuardgateError("LiveUpstream requires mode=live")
        self._config = config
        self._client = httpx.Client(timeout=config.timeout_ms / 1000.0)
        self.call_count = 0

    def chat(self, payload: dict) -> dict:
        url = self._config.base_url.rstrip("/") + "/chat/completions"
        headers = {}
        if self._config.auth_token_ref:
            token = os.environ.get(self._config.auth_token_ref, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        self.call_count += 1
        try:
            response = self._client.post(url, json=payload, headers=headers)
        except httpx.TimeoutException as exc:
            raise UpstreamTimeout(f"upstream did not answer within {self._config.timeout_ms} ms") from exc
        response.raise_for_status()
        return response.json()


def build_upstream(config: UpstreamConfig, responder=None):
    if config.mode is UpstreamMode.MOCK:
        return MockUpstream(responder=responder)
    return LiveUpstream(config)
