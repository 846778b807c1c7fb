"""Append-only audit log, one JSON object per line.

Every evaluated message side produces exactly one record. Appends are
serialized through a single writer and fsynced, timestamps are forced
strictly increasing so per-session ordering is total.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class AuditRecord:
    timestamp: float
    session_id: str
    direction: str  # "input" | "output"
    assistant_id: str
    verdict_action: str
    triggered_rule_ids: tuple[str, ...] = ()
    redaction_count: int = 0
    upstream_called: bool = False
    review_id: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "sessionId": self.session_id,
            "direction": self.direction,
            "assistantId": self.assistant_id,
            "verdictAction": self.verdict_action,
            "triggeredRuleIds": list(self.triggered_rule_ids),
            "redactionCount": self.redaction_count,
            "upstreamCalled": self.upstream_called,
            "reviewId": self.review_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> AuditRecord:
        return cls(
            timestamp=d["timestamp"],
            session_id=d["sessionId"],
            direction=d["direction"],
            assistant_id=d["assistantId"],
            verdict_action=d["verdictAction"],
            triggered_rule_ids=tuple(d.get("triggeredRuleIds", ())),
            redaction_count=d.get("redactionCount", 0),
            upstream_called=d.get("upstreamCalled", False),
            review_id=d.get("reviewId"),
        )


class AuditLog:
    """JSON-lines audit sink with fsync-on-write."""

    def __init__(self, path: str | Path, clock=time.time):
        self.path = Path(path)
        self._clock = clock
        self._lock = threading.Lock()
        self._last_ts = 0.0
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def stamp(self) -> float:
        """Strictly increasing timestamp (bumped past the last one issued)."""
        now = self._clock()
        with self._lock:
            if now <= self._last_ts:
                now = self._last_ts + 1e-6
            self._last_ts = now
        return now

    def append(self, record: AuditRecord) -> None:
        line = json.dumps(record.to_dict(), sort_keys=True) + "\n"
        with self._lock:
            self._write(line)

    def log(self, **fields) -> AuditRecord:
        """Stamp and append atomically, so file order equals timestamp order."""
        with self._lock:
            now = self._clock()
            if now <= self._last_ts:
                now = self._last_ts + 1e-6
            self._last_ts = now
            record = AuditRecord(timestamp=now, **fields)
            self._write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
        return record

    def _write(self, line: str) -> None:
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(line)
            f.flush()
            os.fsync(f.fileno())

    def read(
        self, session_id: Optional[str] = None, limit: Optional[int] = None
    ) -> list[AuditRecord]:
        """Records in append order, optionally filtered by session."""
        if not self.path.exists():
            return []
        records = []
        with open(self.path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                record = AuditRecord.from_dict(json.loads(line))
                if session_id is not None and record.session_id != session_id:
                    continue
                records.append(record)
        if limit is not None:
            records = records[-limit:]
        return records
