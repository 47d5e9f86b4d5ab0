"""Message codec for chat turns that embed code blocks.

A turn is a flat sequence of segments: plain text and code blocks wrapped
in ``<CODE>`` / ``</CODE>`` delimiters, optionally tagged with a language
(``<CODE lang="python">``). Delimiters are recognized only at the start of
a line; a tag mentioned mid-sentence is literal text. Matching is
case-sensitive. An opening tag inside a code block is literal code; only
the first line-anchored closing delimiter ends a block. A block that never
closes runs to end of input (generation may be cut off mid-block).

The codec is total and lossless in both directions:
``render_segments(parse_segments(raw)) == raw`` for any input whatsoever,
and parsing a rendered canonical segment list gives the list back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

OPEN_TAG_RE = re.compile(r'<CODE(?: [^>\n]*)?>')
LANG_ATTR_RE = re.compile(r'^<CODE lang="([A-Za-z0-9+#-]+)">$')
LANGUAGE_RE = re.compile(r'^[a-z0-9+#-]+$')
CLOSE_TAG = "</CODE>"


class SegmentKind(str, Enum):
    TEXT = "text"
    CODE = "code"


def canonical_open(language: str | None) -> str:
    """Canonical opening delimiter, language attribute only when present."""
    if language is None:
        return "<CODE>\n"
    return f'<CODE lang="{language}">\n'


@dataclass(frozen=True)
class MessageSegment:
    """One parsed unit of a turn.

    ``raw_open`` preserves a non-canonical opening run (odd attributes,
    mixed-case language, missing newline after the tag) so serialization
    reproduces the source bytes exactly. ``closed`` is False for a block
    that ran to end of input without a line-anchored closing delimiter.
    """

    kind: SegmentKind
    body: str
    language: str | None = None
    raw_open: str | None = None
    closed: bool = True

    def __post_init__(self) -> None:
        if self.kind is SegmentKind.TEXT:
            if self.language is not None or self.raw_open is not None or not self.closed:
                raise ValueError("text segments carry no code-block attributes")
            if not self.body:
                raise ValueError("text segments must be non-empty")
            for match in OPEN_TAG_RE.finditer(self.body):
                if match.start() > 0 and self.body[match.start() - 1] == "\n":
                    raise ValueError("text segment contains a line-anchored opening delimiter")
        else:
            if self.language is not None and not LANGUAGE_RE.match(self.language):
                raise ValueError(f"language must be a lowercase identifier, got {self.language!r}")
            if self.raw_open is not None:
                m = OPEN_TAG_RE.match(self.raw_open)
                if m is None or self.raw_open not in (m.group(0), m.group(0) + "\n"):
                    raise ValueError("raw_open must be an opening delimiter, optionally newline-terminated")
            if "\n" + CLOSE_TAG in self.body:
                raise ValueError("code body must not contain a line-anchored closing delimiter")
            opening = self.raw_open if self.raw_open is not None else canonical_open(self.language)
            if opening.endswith("\n") and self.body.startswith(CLOSE_TAG):
                raise ValueError("code body must not begin with the closing delimiter")
            if self.closed and not (
                self.body.endswith("\n") or (self.body == "" and opening.endswith("\n"))
            ):
                raise ValueError("a closed block needs its closing delimiter at a line start")


def text_segment(body: str) -> MessageSegment:
    return MessageSegment(kind=SegmentKind.TEXT, body=body)


def code_segment(body: str, language: str | None = None) -> MessageSegment:
    """Build a closed code block; the body is newline-terminated if it isn't."""
    if body and not body.endswith("\n"):
        body += "\n"
    return MessageSegment(kind=SegmentKind.CODE, body=body, language=language)


def _next_open(raw: str, pos: int) -> re.Match[str] | None:
    while True:
        match = OPEN_TAG_RE.search(raw, pos)
        if match is None:
            return None
        if match.start() == 0 or raw[match.start() - 1] == "\n":
            return match
        pos = match.start() + 1


def _find_close(raw: str, pos: int) -> int:
    while True:
        at = raw.find(CLOSE_TAG, pos)
        if at < 0 or raw[at - 1] == "\n":
            return at
        pos = at + 1


def parse_segments(raw: str) -> list[MessageSegment]:
    """Split raw turn text into maximal text runs and code blocks.

    Never fails; concatenating the rendered segments reproduces ``raw``
    byte for byte.
    """
    segments: list[MessageSegment] = []
    pos = 0
    while True:
        match = _next_open(raw, pos)
        if match is None:
            break
        if match.start() > pos:
            segments.append(text_segment(raw[pos:match.start()]))
        tag = match.group(0)
        lang_match = LANG_ATTR_RE.match(tag)
        language = lang_match.group(1).lower() if lang_match else None
        opening = tag
        body_start = match.end()
        if body_start < len(raw) and raw[body_start] == "\n":
            opening += "\n"
            body_start += 1
        close_at = _find_close(raw, body_start)
        if close_at < 0:
            body, closed, pos = raw[body_start:], False, len(raw)
        else:
            body, closed, pos = raw[body_start:close_at], True, close_at + len(CLOSE_TAG)
        raw_open = None if opening == canonical_open(language) else opening
        segments.append(
            MessageSegment(
                kind=SegmentKind.CODE,
                body=body,
                language=language,
                raw_open=raw_open,
                closed=closed,
            )
        )
    if pos < len(raw):
        segments.append(text_segment(raw[pos:]))
    return segments


def render_segments(segments: list[MessageSegment] | tuple[MessageSegment, ...]) -> str:
    """Serialize segments back to wire text; exact inverse of parse_segments.

    A valid list alternates maximally (no two adjacent text runs, never two
    adjacent code blocks) and any text preceding a code block ends with a
    newline, so every delimiter lands at a line start. Lists produced by
    parse_segments satisfy this by construction.
    """
    parts: list[str] = []
    for segment in segments:
        if segment.kind is SegmentKind.TEXT:
            parts.append(segment.body)
        else:
            opening = segment.raw_open if segment.raw_open is not None else canonical_open(segment.language)
            parts.append(opening)
            parts.append(segment.body)
            if segment.closed:
                parts.append(CLOSE_TAG)
    return "".join(parts)


def extract_code_blocks(
    segments: list[MessageSegment] | tuple[MessageSegment, ...],
) -> list[MessageSegment]:
    """Code segments in source order; the input is left untouched."""
    return [s for s in segments if s.kind is SegmentKind.CODE]
