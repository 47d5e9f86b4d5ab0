"""Deterministic composition of the text sent to the model each turn.

The prompt is always: static persona prefix, the windowed dialogue (one
newline-terminated line block per turn), then the assistant label and
separator left trailing so the model generates the assistant's next line.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backends import CompletionRequest, GenerationParams
from .persona import PersonaConfig
from .session import EventKind, SessionState, TokenBudget


class NoPendingUserTurnError(ValueError):
    """assemble_prompt called with nothing to answer."""


@dataclass(frozen=True)
class AssembledPrompt:
    text: str
    included_seqs: tuple[int, ...]
    estimated_tokens: int
    truncated: bool
    oversized: bool = False


def _compose(state: SessionState, with_suffix: bool) -> AssembledPrompt:
    window = state.prompt_window()
    persona = state.persona
    parts = [state.static_prefix]
    parts.extend(state.render_event(e) for e in window.events)
    if with_suffix:
        parts.append(persona.assistant_label + persona.label_separator)
    text = "".join(parts)
    return AssembledPrompt(
        text=text,
        included_seqs=tuple(e.seq for e in window.events),
        estimated_tokens=state.estimator.estimate(text),
        truncated=window.truncated,
        oversized=window.oversized,
    )


def assemble_prompt(persona: PersonaConfig, state: SessionState) -> AssembledPrompt:
    """The exact generation prompt; requires a pending user turn to answer."""
    if persona is not state.persona and persona != state.persona:
        raise ValueError("persona does not match the session's persona")
    live = state.live_events()
    if not live or live[-1].kind is not EventKind.USER_TURN:
        raise NoPendingUserTurnError("no pending user turn to answer")
    return _compose(state, with_suffix=True)


def preview_prompt(persona: PersonaConfig, state: SessionState) -> AssembledPrompt:
    """Debug view of the next prompt.

    The trailing assistant-label suffix appears only when a user turn is
    actually awaiting generation; a fresh session previews as the bare
    static prefix.
    """
    if persona is not state.persona and persona != state.persona:
        raise ValueError("persona does not match the session's persona")
    live = state.live_events()
    pending = bool(live) and live[-1].kind is EventKind.USER_TURN
    return _compose(state, with_suffix=pending)


def build_completion_request(
    prompt: AssembledPrompt,
    params: GenerationParams,
    persona: PersonaConfig,
    budget: TokenBudget,
) -> CompletionRequest:
    """Attach stop sequences and sampling parameters to an assembled prompt."""
    if params.max_tokens > budget.generation_reserve:
        raise ValueError(
            f"max_tokens {params.max_tokens} exceeds the generation reserve {budget.generation_reserve}"
        )
    return CompletionRequest(prompt=prompt.text, stop=persona.stop_sequences, params=params)


def postprocess_generation(raw: str, persona: PersonaConfig) -> str:
    """Defensive client-side stop enforcement; idempotent.

    Conforming backends already stop at the stop sequence. This guards the
    ones that do not: cut at the first occurrence of any stop sequence, then
    trim leading spaces/tabs the model may emit after the assistant label.
    """
    cut = len(raw)
    for stop in persona.stop_sequences:
        at = raw.find(stop)
        if at != -1 and at < cut:
            cut = at
    return raw[:cut].lstrip(" \t")
