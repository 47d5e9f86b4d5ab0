"""Persona workbench: run scripted conversations headlessly and diff outcomes.

Persona revisions are cheap to make and hard to judge by eyeball. The lab
makes the comparison repeatable: the same scripted conversation is driven
through the full engine under different personas, and the resulting
transcripts (plus the rendered static prefixes) are diffed turn by turn.
"""

from __future__ import annotations

import difflib
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .backends import (
    CompletionBackend,
    GenerationParams,
    HttpBackendConfig,
    HttpCompletionsBackend,
    Script,
    ScriptedBackend,
    load_script,
)
from .codec import render_segments
from .engine import AssistantEngine, CodeSelection, TurnRequest
from .persona import PersonaConfig, render_static_prefix, resolve_persona
from .session import DEFAULT_BUDGET, TokenBudget
from .store import SessionStore


@dataclass(frozen=True)
class TurnReport:
    index: int
    user_text: str | None
    code_selection: Mapping[str, Any] | None
    assistant_text: str
    prompt_tokens: int
    completion_tokens: int
    truncated: bool
    oversized: bool


@dataclass(frozen=True)
class RunReport:
    persona_name: str
    script_name: str
    static_prefix: str
    turns: tuple[TurnReport, ...]

    @property
    def total_prompt_tokens(self) -> int:
        return sum(t.prompt_tokens for t in self.turns)

    @property
    def total_completion_tokens(self) -> int:
        return sum(t.completion_tokens for t in self.turns)

    @property
    def truncated_turns(self) -> tuple[int, ...]:
        return tuple(t.index for t in self.turns if t.truncated)

    def to_dict(self) -> dict[str, Any]:
        return {
            "persona": self.persona_name,
            "script": self.script_name,
            "static_prefix": self.static_prefix,
            "turns": [
                {
                    "index": t.index,
                    "user_text": t.user_text,
                    "code_selection": dict(t.code_selection) if t.code_selection else None,
                    "assistant_text": t.assistant_text,
                    "prompt_tokens": t.prompt_tokens,
                    "completion_tokens": t.completion_tokens,
                    "truncated": t.truncated,
                    "oversized": t.oversized,
                }
                for t in self.turns
            ],
            "usage": {
                "total_prompt_tokens": self.total_prompt_tokens,
                "total_completion_tokens": self.total_completion_tokens,
                "total_tokens": self.total_prompt_tokens + self.total_completion_tokens,
                "truncated_turns": list(self.truncated_turns),
            },
        }

    def to_text(self) -> str:
        lines = [f"persona: {self.persona_name}", f"script: {self.script_name}", ""]
        for t in self.turns:
            if t.code_selection:
                lines.append(f"[{t.index}] User: <selection:{t.code_selection.get('language') or 'untagged'}>")
                if t.user_text:
                    lines.append(f"          {t.user_text}")
            else:
                lines.append(f"[{t.index}] User: {t.user_text}")
            for reply_line in t.assistant_text.splitlines() or [""]:
                lines.append(f"    Assistant: {reply_line}")
            flags = []
            if t.truncated:
                flags.append("truncated")
            if t.oversized:
                flags.append("oversized")
            suffix = f" [{', '.join(flags)}]" if flags else ""
            lines.append(f"    (prompt {t.prompt_tokens} tok, reply {t.completion_tokens} tok){suffix}")
        lines.append("")
        lines.append(
            f"usage: prompt {self.total_prompt_tokens} tok + replies "
            f"{self.total_completion_tokens} tok = "
            f"{self.total_prompt_tokens + self.total_completion_tokens} tok"
        )
        if self.truncated_turns:
            lines.append(f"truncation events at turns: {list(self.truncated_turns)}")
        return "\n".join(lines) + "\n"


def _turn_request(turn, index: int) -> TurnRequest:
    selection = None
    if turn.code_selection:
        selection = CodeSelection(
            body=turn.code_selection["body"],
            language=turn.code_selection.get("language"),
        )
    if not turn.user and selection is None:
        raise ValueError(f"script turn {index} has neither user text nor a code selection")
    return TurnRequest(text=turn.user, code_selection=selection)


def run(
    persona: str | Path | PersonaConfig,
    script: str | Path | Script,
    backend: CompletionBackend | None = None,
    budget: TokenBudget = DEFAULT_BUDGET,
    params: GenerationParams | None = None,
    store_dir: str | Path | None = None,
) -> RunReport:
    """Drive the whole engine over a script; deterministic with a scripted backend."""
    persona_config = persona if isinstance(persona, PersonaConfig) else resolve_persona(persona)
    script_doc = script if isinstance(script, Script) else load_script(script)
    if backend is None:
        backend = ScriptedBackend(script_doc)

    with tempfile.TemporaryDirectory() as scratch:
        store = SessionStore(Path(store_dir) if store_dir else Path(scratch))
        engine = AssistantEngine(
            backend=backend,
            store=store,
            extra_personas={persona_config.name: persona_config},
            default_budget=budget,
            default_params=params or GenerationParams(),
        )
        record = engine.create_session(persona_config.name, budget)
        turns: list[TurnReport] = []
        for i, turn in enumerate(script_doc.turns):
            outcome = engine.post_turn(record.session_id, _turn_request(turn, i))
            turns.append(
                TurnReport(
                    index=i,
                    user_text=turn.user,
                    code_selection=turn.code_selection,
                    assistant_text=render_segments(outcome.assistant_segments),
                    prompt_tokens=outcome.usage.prompt_tokens,
                    completion_tokens=outcome.usage.completion_tokens,
                    truncated=outcome.truncated,
                    oversized=outcome.oversized,
                )
            )
        store.close()
    return RunReport(
        persona_name=persona_config.name,
        script_name=script_doc.name,
        static_prefix=render_static_prefix(persona_config),
        turns=tuple(turns),
    )


# -- transcript diffing --------------------------------------------------------


@dataclass(frozen=True)
class TurnDiff:
    index: int
    lines: tuple[str, ...]


@dataclass(frozen=True)
class DiffReport:
    differing_turns: int
    turn_diffs: tuple[TurnDiff, ...]
    prefix_diff: tuple[str, ...]
    left_only_turns: int
    right_only_turns: int

    @property
    def identical(self) -> bool:
        return (
            self.differing_turns == 0
            and not self.prefix_diff
            and self.left_only_turns == 0
            and self.right_only_turns == 0
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "identical": self.identical,
            "differing_turns": self.differing_turns,
            "turn_diffs": [{"index": d.index, "lines": list(d.lines)} for d in self.turn_diffs],
            "prefix_diff": list(self.prefix_diff),
            "left_only_turns": self.left_only_turns,
            "right_only_turns": self.right_only_turns,
        }

    def to_text(self) -> str:
        if self.identical:
            return "transcripts are identical\n"
        lines = [f"differing turns: {self.differing_turns}"]
        if self.left_only_turns or self.right_only_turns:
            lines.append(
                f"unpaired turns: {self.left_only_turns} only-left, {self.right_only_turns} only-right"
            )
        if self.prefix_diff:
            lines.append("")
            lines.append("static prefix diff:")
            lines.extend(self.prefix_diff)
        for diff in self.turn_diffs:
            lines.append("")
            lines.append(f"turn {diff.index}:")
            lines.extend(diff.lines)
        return "\n".join(lines) + "\n"


def _turn_text(turn: Mapping[str, Any]) -> str:
    user = turn.get("user_text") or ""
    selection = turn.get("code_selection") or {}
    selection_body = selection.get("body", "") if selection else ""
    return f"User: {user}\n{selection_body}Assistant: {turn.get('assistant_text', '')}"


def diff(left: Mapping[str, Any], right: Mapping[str, Any]) -> DiffReport:
    """Aligned per-turn textual diff of two transcript documents."""
    prefix_diff = tuple(
        line.rstrip("\n")
        for line in difflib.unified_diff(
            str(left.get("static_prefix", "")).splitlines(),
            str(right.get("static_prefix", "")).splitlines(),
            fromfile=str(left.get("persona", "left")),
            tofile=str(right.get("persona", "right")),
            lineterm="",
        )
    )
    left_turns = list(left.get("turns", []))
    right_turns = list(right.get("turns", []))
    turn_diffs: list[TurnDiff] = []
    paired = min(len(left_turns), len(right_turns))
    for i in range(paired):
        a, b = _turn_text(left_turns[i]), _turn_text(right_turns[i])
        if a != b:
            lines = tuple(
                line.rstrip("\n")
                for line in difflib.unified_diff(
                    a.splitlines(), b.splitlines(), fromfile="left", tofile="right", lineterm=""
                )
            )
            turn_diffs.append(TurnDiff(index=i, lines=lines))
    return DiffReport(
        differing_turns=len(turn_diffs) + abs(len(left_turns) - len(right_turns)),
        turn_diffs=tuple(turn_diffs),
        prefix_diff=prefix_diff,
        left_only_turns=max(0, len(left_turns) - paired),
        right_only_turns=max(0, len(right_turns) - paired),
    )


def build_http_backend(
    base_url: str,
    api_key: str | None = None,
    model: str | None = None,
    timeout: float = 30.0,
) -> HttpCompletionsBackend:
    return HttpCompletionsBackend(
        HttpBackendConfig(base_url=base_url, api_key=api_key, model=model, timeout=timeout)
    )
