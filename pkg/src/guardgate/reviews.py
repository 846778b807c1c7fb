"""Human-in-the-loop review queue.

Unresolved conflicts, rule-driven escalations, and repeat-violation
reviews all land here as ReviewItems. Creation is idempotent per
(session, conflict fingerprint) while an item is pending, so retried
requests do not fan out duplicate work for the operator. Status moves
once: Pending -> ResolvedAllow | ResolvedBlock | ResolvedPrecedence.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import AlreadyResolved, GuardgateError, QueueUnavailable, UnknownReview


class ReviewStatus(str, Enum):
    PENDING = "pending"
    RESOLVED_ALLOW = "resolved-allow"
    RESOLVED_BLOCK = "resolved-block"
    RESOLVED_PRECEDENCE = "resolved-precedence"


@dataclass
class ReviewItem:
    id: str
    session_id: str
    conflict: dict
    created_at: float
    status: ReviewStatus = ReviewStatus.PENDING
    resolved_by: Optional[str] = None
    resolution_policy_id: Optional[str] = None
    outcome: Optional[dict] = None  # final chat payload once the session resumed

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "sessionId": self.session_id,
            "conflict": self.conflict,
            "createdAt": self.created_at,
            "status": self.status.value,
            "resolvedBy": self.resolved_by,
            "resolutionPolicyId": self.resolution_policy_id,
            "outcome": self.outcome,
        }


def conflict_fingerprint(session_id: str, conflict: dict) -> str:
    payload = json.dumps({"session": session_id, "conflict": conflict}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ReviewQueue:
    """Shared mutable review state behind one lock."""

    def __init__(self, clock=time.time):
        self._clock = clock
        self._lock = threading.Lock()
        self._items: dict[str, ReviewItem] = {}
        self._pending_by_fp: dict[str, str] = {}
        self._counter = 0
        self._closed = False

    def escalate(self, conflict: dict, session_id: str) -> tuple[ReviewItem, bool]:
        """Create (or return the pending duplicate of) a review item.

        Returns (item, created). Raises QueueUnavailable after close().
        """
        with self._lock:
            if self._closed:
                raise QueueUnavailable("review queue is shut down")
            fp = conflict_fingerprint(session_id, conflict)
            existing_id = self._pending_by_fp.get(fp)
            if existing_id is not None:
                return self._items[existing_id], False
            self._counter += 1
            item = ReviewItem(
                id=f"review-{self._counter:06d}",
                session_id=session_id,
                conflict=conflict,
                created_at=self._clock(),
            )
            self._items[item.id] = item
            self._pending_by_fp[fp] = item.id
            return item, True

    def get(self, review_id: str) -> ReviewItem:
        with self._lock:
            item = self._items.get(review_id)
            if item is None:
                raise UnknownReview(f"no review item {review_id!r}")
            return item

    def list(self, status: Optional[ReviewStatus] = None) -> list[ReviewItem]:
        with self._lock:
            items = sorted(self._items.values(), key=lambda it: it.id)
            if status is None:
                return items
            return [it for it in items if it.status is status]

    def resolve(
        self,
        review_id: str,
        status: ReviewStatus,
        resolved_by: str,
        policy_id: Optional[str] = None,
    ) -> ReviewItem:
        """Single Pending -> Resolved* transition."""
        if status is ReviewStatus.PENDING:
            raise GuardgateError("cannot resolve to pending")
        if status is ReviewStatus.RESOLVED_PRECEDENCE and not policy_id:
            raise GuardgateError("precedence resolution needs a policy id")
        with self._lock:
            item = self._items.get(review_id)
            if item is None:
                raise UnknownReview(f"no review item {review_id!r}")
            if item.status is not ReviewStatus.PENDING:
                raise AlreadyResolved(
                    f"review {review_id} already {item.status.value} by {item.resolved_by}"
                )
            item.status = status
            item.resolved_by = resolved_by
            item.resolution_policy_id = policy_id
            fp = conflict_fingerprint(item.session_id, item.conflict)
            self._pending_by_fp.pop(fp, None)
            return item

    def pending_for_session(self, session_id: str) -> list[ReviewItem]:
        with self._lock:
            return [
                it
                for it in self._items.values()
                if it.session_id == session_id and it.status is ReviewStatus.PENDING
            ]

    def close(self) -> None:
        with self._lock:
            self._closed = True
