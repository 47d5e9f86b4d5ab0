"""Turn-lifecycle orchestration shared by the HTTP service and the CLI lab.

One turn: append the user entry, assemble the prompt, call the backend,
enforce stop sequences, parse the reply into segments, append it, and
persist both events before answering. Per-session operations are serialized
behind a lock; distinct sessions proceed in parallel.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .assembler import (
    AssembledPrompt,
    assemble_prompt,
    build_completion_request,
    postprocess_generation,
    preview_prompt,
)
from .backends import CompletionBackend, GenerationParams
from .codec import MessageSegment, code_segment, parse_segments, text_segment
from .persona import PersonaConfig, Speaker, resolve_persona
from .session import DEFAULT_BUDGET, EventKind, SessionState, TokenBudget
from .store import SessionRecord, SessionStore
from .tokens import DEFAULT_ESTIMATOR, TokenEstimator


class EngineError(Exception):
    pass


class UnknownPersonaError(EngineError):
    pass


class SessionNotFoundError(EngineError):
    pass


class EmptyTurnError(EngineError):
    """A turn needs at least a message or a code selection."""


class TurnConflictError(EngineError):
    """A generation is already in flight, or the last turn is still unanswered."""


class NothingToRetryEngineError(EngineError):
    pass


@dataclass(frozen=True)
class CodeSelection:
    body: str
    language: str | None = None


@dataclass(frozen=True)
class TurnRequest:
    text: str | None = None
    code_selection: CodeSelection | None = None
    params_override: GenerationParams | None = None


@dataclass(frozen=True)
class UsageReport:
    prompt_tokens: int
    completion_tokens: int
    total_tokens: int
    latency: float


@dataclass(frozen=True)
class TurnOutcome:
    assistant_segments: tuple[MessageSegment, ...]
    truncated: bool
    oversized: bool
    usage: UsageReport


@dataclass(frozen=True)
class TranscriptEntry:
    """Display view of one transcript element; the greeting has no seq."""

    kind: str
    speaker: Speaker | None
    segments: tuple[MessageSegment, ...]
    seq: int | None = None
    superseded: bool = False
    timestamp: float | None = None


@dataclass
class _LiveSession:
    record: SessionRecord
    state: SessionState
    persona: PersonaConfig
    lock: threading.Lock = field(default_factory=threading.Lock)


def compose_user_segments(request: TurnRequest) -> tuple[MessageSegment, ...]:
    """Turn a request into prompt segments, selection first.

    An attached editor selection is written with the same delimiter
    convention as assistant code, starting on its own line after the
    speaker label; the newline glue lives in the segment data so the
    transcript is exactly what the prompt carries.
    """
    text = request.text or ""
    segments: list[MessageSegment] = []
    if request.code_selection is not None:
        segments.append(text_segment("\n"))
        segments.append(code_segment(request.code_selection.body, request.code_selection.language))
        if text:
            segments.extend(parse_segments("\n" + text))
    elif text:
        segments.extend(parse_segments(text))
    if not segments:
        raise EmptyTurnError("turn must include a message or a code selection")
    return tuple(segments)


class AssistantEngine:
    def __init__(
        self,
        backend: CompletionBackend,
        store: SessionStore,
        persona_dir: Path | None = None,
        extra_personas: dict[str, PersonaConfig] | None = None,
        default_budget: TokenBudget = DEFAULT_BUDGET,
        default_params: GenerationParams | None = None,
        estimator: TokenEstimator = DEFAULT_ESTIMATOR,
    ):
        self.backend = backend
        self.store = store
        self.persona_dir = persona_dir
        self.extra_personas = dict(extra_personas or {})
        self.default_budget = default_budget
        self.default_params = default_params or GenerationParams()
        self.estimator = estimator
        self._sessions: dict[str, _LiveSession] = {}
        self._registry_lock = threading.Lock()

    # -- session access ------------------------------------------------------

    def _persona(self, name: str) -> PersonaConfig:
        if name in self.extra_personas:
            return self.extra_personas[name]
        try:
            return resolve_persona(name, self.persona_dir)
        except Exception as exc:
            raise UnknownPersonaError(str(exc))

    def create_session(self, persona_name: str, budget: TokenBudget | None = None) -> SessionRecord:
        persona = self._persona(persona_name)
        budget = budget or self.default_budget
        session_id = uuid.uuid4().hex
        state = SessionState(persona, budget, self.estimator)
        record = self.store.create(session_id, persona_name, budget, created_at=time.time())
        with self._registry_lock:
            self._sessions[session_id] = _LiveSession(record=record, state=state, persona=persona)
        return record

    def _session(self, session_id: str) -> _LiveSession:
        with self._registry_lock:
            live = self._sessions.get(session_id)
            if live is not None:
                return live
            record = self.store.get(session_id)
            if record is None:
                raise SessionNotFoundError(f"unknown session {session_id!r}")
            # Engine restart: rebuild the session from its event log.
            persona = self._persona(record.persona_name)
            state = self.store.replay(record, persona, self.estimator)
            live = _LiveSession(record=record, state=state, persona=persona)
            self._sessions[session_id] = live
            return live

    # -- operations ------------------------------------------------------------

    def post_turn(self, session_id: str, request: TurnRequest) -> TurnOutcome:
        segments = compose_user_segments(request)
        live = self._session(session_id)
        if not live.lock.acquire(blocking=False):
            raise TurnConflictError("a generation is already in flight for this session")
        try:
            tail = live.state.live_events()
            if tail and tail[-1].kind is EventKind.USER_TURN:
                raise TurnConflictError("previous turn is unanswered; retry to regenerate")
            event = live.state.append_user_turn(segments)
            self.store.append_event(live.record, event)
            return self._generate(live, request.params_override)
        finally:
            live.lock.release()

    def retry(self, session_id: str, params_override: GenerationParams | None = None) -> TurnOutcome:
        live = self._session(session_id)
        if not live.lock.acquire(blocking=False):
            raise TurnConflictError("a generation is already in flight for this session")
        try:
            tail = live.state.live_events()
            if not tail:
                raise NothingToRetryEngineError("nothing to retry")
            if tail[-1].kind is EventKind.ASSISTANT_TURN:
                marker = live.state.try_again()
                self.store.append_event(live.record, marker)
            # A trailing unanswered user turn (failed generation) regenerates as-is.
            return self._generate(live, params_override)
        finally:
            live.lock.release()

    def _generate(self, live: _LiveSession, params_override: GenerationParams | None) -> TurnOutcome:
        prompt = assemble_prompt(live.persona, live.state)
        params = params_override or self.default_params
        request = build_completion_request(prompt, params, live.persona, live.state.budget)
        result = self.backend.complete(request)
        reply = postprocess_generation(result.text, live.persona)
        event = live.state.append_assistant_turn(reply)
        self.store.append_event(live.record, event)
        completion_tokens = self.estimator.estimate(reply)
        return TurnOutcome(
            assistant_segments=event.segments,
            truncated=prompt.truncated,
            oversized=prompt.oversized,
            usage=UsageReport(
                prompt_tokens=prompt.estimated_tokens,
                completion_tokens=completion_tokens,
                total_tokens=prompt.estimated_tokens + completion_tokens,
                latency=result.latency,
            ),
        )

    def reset(self, session_id: str) -> int:
        live = self._session(session_id)
        with live.lock:
            marker = live.state.start_over()
            self.store.append_event(live.record, marker)
            return marker.seq

    def transcript(self, session_id: str) -> list[TranscriptEntry]:
        """Display events: the greeting line, then every turn and marker."""
        live = self._session(session_id)
        with live.lock:
            entries = [
                TranscriptEntry(
                    kind="greeting",
                    speaker=Speaker.ASSISTANT,
                    segments=(text_segment(live.persona.greeting),),
                )
            ]
            for event in live.state.events:
                entries.append(
                    TranscriptEntry(
                        kind=event.kind.value,
                        speaker=event.speaker,
                        segments=event.segments,
                        seq=event.seq,
                        superseded=event.superseded,
                        timestamp=event.timestamp,
                    )
                )
            return entries

    def prompt_debug(self, session_id: str) -> AssembledPrompt:
        live = self._session(session_id)
        with live.lock:
            return preview_prompt(live.persona, live.state)

    def session_state(self, session_id: str) -> SessionState:
        return self._session(session_id).state

    def session_persona(self, session_id: str) -> PersonaConfig:
        return self._session(session_id).persona
