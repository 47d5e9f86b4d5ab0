"""Session state: the append-only transcript and its token-budgeted window.

The transcript is the session's short-term memory. Every turn is appended;
nothing is ever rewritten except the one allowed flip of an assistant turn's
``superseded`` flag when the user asks for another attempt. The prompt sent
to the model is a derived view: the static persona prefix plus the newest
dialogue that fits the token budget, dropping whole user/assistant exchange
pairs oldest-first (a dangling question without its answer would teach the
model a broken script pattern).

Retry and reset edit the *prompt context* only; the displayed transcript
keeps everything, including superseded attempts and markers.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

from .codec import MessageSegment, parse_segments
from .persona import PersonaConfig, Speaker, render_static_prefix, render_turn_line
from .tokens import DEFAULT_ESTIMATOR, TokenEstimator


class SessionError(ValueError):
    pass


class AlternationError(SessionError):
    """An assistant turn was appended with nothing to answer."""


class NothingToRetryError(SessionError):
    """try_again called when no live assistant turn exists."""


class BudgetError(SessionError):
    pass


class EventKind(str, Enum):
    USER_TURN = "user_turn"
    ASSISTANT_TURN = "assistant_turn"
    RETRY_MARKER = "retry_marker"
    RESET_MARKER = "reset_marker"


@dataclass
class SessionEvent:
    """Transcript entry. ``raw`` keeps assistant output verbatim, pre-parse.

    The timestamp is audit metadata only and never affects behavior.
    """

    seq: int
    kind: EventKind
    segments: tuple[MessageSegment, ...] = ()
    raw: str | None = None
    superseded: bool = False
    timestamp: float = field(default_factory=time.time)

    @property
    def speaker(self) -> Speaker | None:
        if self.kind is EventKind.USER_TURN:
            return Speaker.USER
        if self.kind is EventKind.ASSISTANT_TURN:
            return Speaker.ASSISTANT
        return None


@dataclass(frozen=True)
class TokenBudget:
    """Prompt-size arithmetic for the backing model.

    ``generation_reserve`` is withheld for the reply; ``safety_margin``
    absorbs estimator error.
    """

    context_limit: int
    generation_reserve: int
    safety_margin: int

    def __post_init__(self) -> None:
        if self.generation_reserve + self.safety_margin <= 0:
            raise BudgetError("generation_reserve + safety_margin must be positive")
        if self.context_limit <= self.generation_reserve + self.safety_margin:
            raise BudgetError(
                "context_limit must exceed generation_reserve + safety_margin "
                f"({self.context_limit} <= {self.generation_reserve} + {self.safety_margin})"
            )

    @property
    def available_for_prompt(self) -> int:
        return self.context_limit - self.generation_reserve - self.safety_margin


DEFAULT_BUDGET = TokenBudget(context_limit=4096, generation_reserve=512, safety_margin=128)


@dataclass(frozen=True)
class PromptWindow:
    """The live events that fit the budget, plus what was cut to get there."""

    events: tuple[SessionEvent, ...]
    dropped_seqs: tuple[int, ...]
    oversized: bool

    @property
    def truncated(self) -> bool:
        return bool(self.dropped_seqs)


class SessionState:
    """Single-writer session: persona, budget, and the append-only event list."""

    def __init__(
        self,
        persona: PersonaConfig,
        budget: TokenBudget = DEFAULT_BUDGET,
        estimator: TokenEstimator = DEFAULT_ESTIMATOR,
    ):
        self.persona = persona
        self.budget = budget
        self.estimator = estimator
        self._static_prefix = render_static_prefix(persona)
        prefix_tokens = estimator.estimate(self._static_prefix)
        if prefix_tokens > budget.available_for_prompt:
            raise BudgetError(
                f"static prefix needs {prefix_tokens} tokens but only "
                f"{budget.available_for_prompt} are available for the prompt"
            )
        self.events: list[SessionEvent] = []

    @property
    def static_prefix(self) -> str:
        return self._static_prefix

    # -- appends -----------------------------------------------------------

    def _next_seq(self) -> int:
        return len(self.events)

    def append_user_turn(self, segments: list[MessageSegment] | tuple[MessageSegment, ...]) -> SessionEvent:
        if not segments:
            raise SessionError("user turn must have at least one segment")
        event = SessionEvent(seq=self._next_seq(), kind=EventKind.USER_TURN, segments=tuple(segments))
        self.events.append(event)
        return event

    def append_assistant_turn(self, raw: str) -> SessionEvent:
        live = self.live_events()
        if not live or live[-1].kind is not EventKind.USER_TURN:
            raise AlternationError("assistant turn must answer a pending user turn")
        event = SessionEvent(
            seq=self._next_seq(),
            kind=EventKind.ASSISTANT_TURN,
            segments=tuple(parse_segments(raw)),
            raw=raw,
        )
        self.events.append(event)
        return event

    def try_again(self) -> SessionEvent:
        """Retire the latest live assistant turn and mark the retry.

        The turn stays in the transcript for display; the prompt context now
        ends at the preceding user turn, ready for regeneration.
        """
        live = self.live_events()
        if not live or live[-1].kind is not EventKind.ASSISTANT_TURN:
            raise NothingToRetryError("no assistant turn to retry")
        live[-1].superseded = True
        marker = SessionEvent(seq=self._next_seq(), kind=EventKind.RETRY_MARKER)
        self.events.append(marker)
        return marker

    def start_over(self) -> SessionEvent:
        """Reset the prompt context; all prior events stay visible."""
        marker = SessionEvent(seq=self._next_seq(), kind=EventKind.RESET_MARKER)
        self.events.append(marker)
        return marker

    # -- derived views -----------------------------------------------------

    def live_events(self) -> list[SessionEvent]:
        """Turns after the last reset, with markers and superseded turns removed."""
        start = 0
        for i, event in enumerate(self.events):
            if event.kind is EventKind.RESET_MARKER:
                start = i + 1
        return [
            e
            for e in self.events[start:]
            if e.kind in (EventKind.USER_TURN, EventKind.ASSISTANT_TURN) and not e.superseded
        ]

    def _exchanges(self) -> list[list[SessionEvent]]:
        """Group live events into whole exchanges: user turn(s) plus the answer."""
        groups: list[list[SessionEvent]] = []
        for event in self.live_events():
            if event.kind is EventKind.USER_TURN:
                if groups and groups[-1][-1].kind is EventKind.USER_TURN:
                    groups[-1].append(event)
                else:
                    groups.append([event])
            else:
                if groups and groups[-1][-1].kind is EventKind.USER_TURN:
                    groups[-1].append(event)
                else:  # pragma: no cover - excluded by the alternation invariant
                    groups.append([event])
        return groups

    def render_event(self, event: SessionEvent) -> str:
        speaker = event.speaker
        assert speaker is not None, "markers are never rendered into prompts"
        return render_turn_line(self.persona, speaker, event.segments)

    def prompt_window(self) -> PromptWindow:
        """Newest window of whole exchanges that fits the prompt budget.

        When even the newest exchange alone exceeds the budget it is kept
        anyway and flagged oversized: refusing would deadlock the dialogue,
        and the backend may still accept or fail on its own terms.
        """
        groups = self._exchanges()
        suffix = self.persona.assistant_label + self.persona.label_separator

        def fits(candidate: list[list[SessionEvent]]) -> bool:
            rendered = "".join(self.render_event(e) for g in candidate for e in g)
            total = self.estimator.estimate(self._static_prefix + rendered + suffix)
            return total <= self.budget.available_for_prompt

        kept = list(groups)
        dropped: list[SessionEvent] = []
        while len(kept) > 1 and not fits(kept):
            dropped.extend(kept.pop(0))
        oversized = not fits(kept)
        events = tuple(e for g in kept for e in g)
        return PromptWindow(
            events=events,
            dropped_seqs=tuple(e.seq for e in dropped),
            oversized=oversized,
        )

    def active_window(self) -> list[SessionEvent]:
        return list(self.prompt_window().events)

    # -- reconstruction ----------------------------------------------------

    @classmethod
    def from_events(
        cls,
        persona: PersonaConfig,
        budget: TokenBudget,
        events: list[SessionEvent],
        estimator: TokenEstimator = DEFAULT_ESTIMATOR,
    ) -> "SessionState":
        """Deterministically rebuild a session from its persisted event log.

        Superseded flags are not stored in the log; they are re-derived here
        from retry markers, so the log itself stays strictly append-only.
        """
        state = cls(persona, budget, estimator)
        for event in events:
            if event.seq != state._next_seq():
                raise SessionError(f"event log gap: expected seq {state._next_seq()}, got {event.seq}")
            if event.kind is EventKind.RETRY_MARKER:
                live = state.live_events()
                if not live or live[-1].kind is not EventKind.ASSISTANT_TURN:
                    raise SessionError(f"retry marker at seq {event.seq} has no assistant turn to retire")
                live[-1].superseded = True
            event.superseded = False
            state.events.append(event)
        return state


def new_session(
    persona: PersonaConfig,
    budget: TokenBudget = DEFAULT_BUDGET,
    estimator: TokenEstimator = DEFAULT_ESTIMATOR,
) -> SessionState:
    """Fresh session; fails fast if the static prefix alone exceeds the budget."""
    return SessionState(persona, budget, estimator)
