"""Persona configuration: the static prompt prefix and its conventions.

A persona is a hand-edited YAML document holding the prologue that sets the
scene, the speaker labels, the greeting, and a few-shot script of example
exchanges. Examples embed code with the same ``<CODE>`` delimiters used for
live messages, so the prefix is rendered and re-parsed by the one codec.

Rendering is deterministic: equal configs produce byte-identical prefixes,
and the prefix never changes during a session.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .codec import CLOSE_TAG, MessageSegment, parse_segments, render_segments, text_segment

CODE_OPEN_TEMPLATE = '<CODE lang="{language}">'
CODE_CLOSE = CLOSE_TAG


class PersonaError(ValueError):
    """Malformed or invalid persona document; message names the field path."""


class Speaker(str, Enum):
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ExampleExchange:
    speaker: Speaker
    segments: tuple[MessageSegment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise PersonaError("example exchange must have at least one segment")


@dataclass(frozen=True)
class PersonaConfig:
    name: str
    prologue: str
    assistant_label: str
    user_label: str
    label_separator: str
    greeting: str
    examples: tuple[ExampleExchange, ...] = ()
    stop_sequences: tuple[str, ...] = ()
    code_open_template: str = CODE_OPEN_TEMPLATE
    code_close: str = CODE_CLOSE

    def __post_init__(self) -> None:
        if not self.stop_sequences:
            object.__setattr__(
                self, "stop_sequences", (default_stop_sequence(self.user_label, self.label_separator),)
            )
        _validate_persona(self)

    def label_for(self, speaker: Speaker) -> str:
        return self.assistant_label if speaker is Speaker.ASSISTANT else self.user_label


def default_stop_sequence(user_label: str, label_separator: str) -> str:
    """Newline, the user label, and the separator up to any trailing whitespace."""
    return "\n" + user_label + label_separator.rstrip()


def _validate_persona(p: PersonaConfig) -> None:
    if not p.name:
        raise PersonaError("name: must be non-empty")
    if not p.prologue:
        raise PersonaError("prologue: must be non-empty")
    for fieldname, label in (("assistant_label", p.assistant_label), ("user_label", p.user_label)):
        if not label:
            raise PersonaError(f"{fieldname}: must be non-empty")
        if "\n" in label:
            raise PersonaError(f"{fieldname}: must not contain a newline")
    if p.assistant_label == p.user_label:
        raise PersonaError("assistant_label/user_label: speaker labels must differ")
    for i, stop in enumerate(p.stop_sequences):
        if not stop:
            raise PersonaError(f"stop_sequences[{i}]: must be non-empty")
    # The parser's delimiter grammar is fixed; a persona declaring another
    # convention would render prompts the engine cannot read back.
    if p.code_open_template != CODE_OPEN_TEMPLATE:
        raise PersonaError(
            f"code_open_template: engine supports only {CODE_OPEN_TEMPLATE!r}"
        )
    if p.code_close != CODE_CLOSE:
        raise PersonaError(f"code_close: engine supports only {CODE_CLOSE!r}")


def _require(doc: Mapping[str, Any], key: str) -> Any:
    if key not in doc:
        raise PersonaError(f"{key}: missing required field")
    return doc[key]


def _require_str(doc: Mapping[str, Any], key: str) -> str:
    value = _require(doc, key)
    if not isinstance(value, str):
        raise PersonaError(f"{key}: expected text, got {type(value).__name__}")
    return value


def _parse_examples(raw_examples: Any) -> tuple[ExampleExchange, ...]:
    if raw_examples is None:
        return ()
    if not isinstance(raw_examples, list):
        raise PersonaError(f"examples: expected a list, got {type(raw_examples).__name__}")
    exchanges: list[ExampleExchange] = []
    for i, entry in enumerate(raw_examples):
        if not isinstance(entry, Mapping):
            raise PersonaError(f"examples[{i}]: expected a mapping")
        speaker_raw = _require(entry, "speaker")
        try:
            speaker = Speaker(speaker_raw)
        except ValueError:
            raise PersonaError(f"examples[{i}].speaker: must be 'user' or 'assistant', got {speaker_raw!r}")
        text = entry.get("text")
        if not isinstance(text, str) or not text:
            raise PersonaError(f"examples[{i}].text: expected non-empty text")
        try:
            segments = tuple(parse_segments(text))
        except ValueError as exc:  # pragma: no cover - parse is total
            raise PersonaError(f"examples[{i}].text: {exc}")
        exchanges.append(ExampleExchange(speaker=speaker, segments=segments))
    return tuple(exchanges)


def load_persona(source: str | Path | Mapping[str, Any]) -> PersonaConfig:
    """Load and validate a persona from a YAML file path or a parsed mapping."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            doc = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise PersonaError(f"{path}: malformed YAML: {exc}")
        if not isinstance(doc, Mapping):
            raise PersonaError(f"{path}: expected a mapping at top level")
    else:
        doc = source
    stop_raw = doc.get("stop_sequences")
    stops: tuple[str, ...] = ()
    if stop_raw is not None:
        if not isinstance(stop_raw, list) or not all(isinstance(s, str) for s in stop_raw):
            raise PersonaError("stop_sequences: expected a list of text")
        stops = tuple(stop_raw)
    try:
        return PersonaConfig(
            name=_require_str(doc, "name"),
            prologue=_require_str(doc, "prologue"),
            assistant_label=_require_str(doc, "assistant_label"),
            user_label=_require_str(doc, "user_label"),
            label_separator=_require_str(doc, "label_separator"),
            greeting=_require_str(doc, "greeting"),
            examples=_parse_examples(doc.get("examples")),
            stop_sequences=stops,
            code_open_template=doc.get("code_open_template", CODE_OPEN_TEMPLATE),
            code_close=doc.get("code_close", CODE_CLOSE),
        )
    except PersonaError:
        raise
    except ValueError as exc:
        raise PersonaError(str(exc))


def render_turn_line(
    persona: PersonaConfig,
    speaker: Speaker,
    segments: tuple[MessageSegment, ...] | list[MessageSegment],
) -> str:
    """One dialogue line block: label, separator, content, one newline."""
    return persona.label_for(speaker) + persona.label_separator + render_segments(segments) + "\n"


def render_static_prefix(persona: PersonaConfig) -> str:
    """The full static prefix: prologue, blank line, greeting, example script.

    Each exchange (the greeting included) ends with exactly one newline, so
    live dialogue turns append directly after the final example.
    """
    parts = [persona.prologue, "\n\n"]
    parts.append(render_turn_line(persona, Speaker.ASSISTANT, (text_segment(persona.greeting),)))
    for exchange in persona.examples:
        parts.append(render_turn_line(persona, exchange.speaker, exchange.segments))
    return "".join(parts)


def bundled_persona_dir() -> Path:
    return Path(str(resources.files("scriptchat") / "personas"))


def list_bundled_personas() -> list[str]:
    return sorted(p.stem for p in bundled_persona_dir().glob("*.yaml"))


def resolve_persona(name_or_path: str | Path, persona_dir: Path | None = None) -> PersonaConfig:
    """Find a persona by explicit path, by name in persona_dir, or bundled."""
    candidate = Path(name_or_path)
    if candidate.suffix in (".yaml", ".yml") and candidate.exists():
        return load_persona(candidate)
    searched: list[Path] = []
    for base in ([persona_dir] if persona_dir else []) + [bundled_persona_dir()]:
        path = base / f"{name_or_path}.yaml"
        searched.append(path)
        if path.exists():
            return load_persona(path)
    raise PersonaError(f"unknown persona {str(name_or_path)!r} (searched {', '.join(map(str, searched))})")
