"""Durable session persistence: one append-only JSONL event log per session.

Log-line schema (one JSON object per line, UTF-8, ``\\n``-terminated):

    {"seq": int, "kind": "user_turn"|"assistant_turn"|"retry_marker"|"reset_marker",
     "segments": [segment...], "raw": str|null, "timestamp": float}

    segment = {"kind": "text"|"code", "body": str}
              + "language": str        (code, only when tagged)
              + "raw_open": str        (code, only when the opening run was non-canonical)
              + "closed": false        (code, only for an unclosed block)

Superseded flags are intentionally not persisted: they are derived from
retry markers on replay, which keeps the log strictly append-only and makes
the log itself the replay oracle. The index file maps session ids to their
logs and creation metadata, one JSON object per line.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, IO

from .codec import MessageSegment, SegmentKind
from .persona import PersonaConfig
from .session import EventKind, SessionEvent, SessionState, TokenBudget
from .tokens import DEFAULT_ESTIMATOR, TokenEstimator

INDEX_FILENAME = "index.jsonl"


class LogCorruptionError(Exception):
    def __init__(self, path: Path, line_number: int, reason: str):
        super().__init__(f"{path}:{line_number}: {reason}")
        self.path = path
        self.line_number = line_number
        self.reason = reason


@dataclass(frozen=True)
class SessionRecord:
    session_id: str
    persona_name: str
    budget: TokenBudget
    created_at: float
    log_path: Path


def segment_to_dict(segment: MessageSegment) -> dict[str, Any]:
    doc: dict[str, Any] = {"kind": segment.kind.value, "body": segment.body}
    if segment.language is not None:
        doc["language"] = segment.language
    if segment.raw_open is not None:
        doc["raw_open"] = segment.raw_open
    if not segment.closed:
        doc["closed"] = False
    return doc


def segment_from_dict(doc: dict[str, Any]) -> MessageSegment:
    return MessageSegment(
        kind=SegmentKind(doc["kind"]),
        body=doc["body"],
        language=doc.get("language"),
        raw_open=doc.get("raw_open"),
        closed=doc.get("closed", True),
    )


def event_to_dict(event: SessionEvent) -> dict[str, Any]:
    return {
        "seq": event.seq,
        "kind": event.kind.value,
        "segments": [segment_to_dict(s) for s in event.segments],
        "raw": event.raw,
        "timestamp": event.timestamp,
    }


def event_from_dict(doc: dict[str, Any]) -> SessionEvent:
    return SessionEvent(
        seq=doc["seq"],
        kind=EventKind(doc["kind"]),
        segments=tuple(segment_from_dict(s) for s in doc["segments"]),
        raw=doc.get("raw"),
        timestamp=doc["timestamp"],
    )


class SessionStore:
    """Filesystem store rooted at one directory; safe for many sessions."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.logs_dir = self.root / "logs"
        self.logs_dir.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / INDEX_FILENAME
        self._lock = threading.Lock()
        self._records: dict[str, SessionRecord] = {}
        self._log_handles: dict[str, IO[str]] = {}
        self._load_index()

    def _load_index(self) -> None:
        if not self._index_path.exists():
            return
        with self._index_path.open(encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                    record = SessionRecord(
                        session_id=doc["session_id"],
                        persona_name=doc["persona_name"],
                        budget=TokenBudget(**doc["budget"]),
                        created_at=doc["created_at"],
                        log_path=self.root / doc["log"],
                    )
                except (ValueError, KeyError, TypeError) as exc:
                    raise LogCorruptionError(self._index_path, line_number, f"bad index line: {exc}")
                self._records[record.session_id] = record

    def create(self, session_id: str, persona_name: str, budget: TokenBudget, created_at: float) -> SessionRecord:
        with self._lock:
            if session_id in self._records:
                raise ValueError(f"session {session_id!r} already exists")
            rel = f"logs/{session_id}.jsonl"
            record = SessionRecord(
                session_id=session_id,
                persona_name=persona_name,
                budget=budget,
                created_at=created_at,
                log_path=self.root / rel,
            )
            record.log_path.touch()
            with self._index_path.open("a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {
                            "session_id": session_id,
                            "persona_name": persona_name,
                            "budget": {
                                "context_limit": budget.context_limit,
                                "generation_reserve": budget.generation_reserve,
                                "safety_margin": budget.safety_margin,
                            },
                            "created_at": created_at,
                            "log": rel,
                        }
                    )
                    + "\n"
                )
                fh.flush()
            self._records[session_id] = record
            return record

    def get(self, session_id: str) -> SessionRecord | None:
        return self._records.get(session_id)

    def list_sessions(self) -> list[SessionRecord]:
        return sorted(self._records.values(), key=lambda r: r.created_at)

    def append_event(self, record: SessionRecord, event: SessionEvent) -> None:
        """Write and flush one event line before the caller answers any client."""
        with self._lock:
            handle = self._log_handles.get(record.session_id)
            if handle is None or handle.closed:
                handle = record.log_path.open("a", encoding="utf-8")
                self._log_handles[record.session_id] = handle
            handle.write(json.dumps(event_to_dict(event)) + "\n")
            handle.flush()

    def close(self) -> None:
        with self._lock:
            for handle in self._log_handles.values():
                handle.close()
            self._log_handles.clear()

    def read_events(self, record: SessionRecord, recover: bool = False) -> list[SessionEvent]:
        """Load the event log; a corrupt line raises with its line number,
        or in recovery mode ends the load with every complete prior line."""
        events: list[SessionEvent] = []
        with record.log_path.open(encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    events.append(event_from_dict(json.loads(line)))
                except (ValueError, KeyError, TypeError) as exc:
                    if recover:
                        break
                    raise LogCorruptionError(record.log_path, line_number, str(exc))
        return events

    def replay(
        self,
        record: SessionRecord,
        persona: PersonaConfig,
        estimator: TokenEstimator = DEFAULT_ESTIMATOR,
        recover: bool = False,
    ) -> SessionState:
        events = self.read_events(record, recover=recover)
        return SessionState.from_events(persona, record.budget, events, estimator)
