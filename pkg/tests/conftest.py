"""Shared test fixtures: data paths and randomized generators.

The generators build *canonical* segment lists (maximal text runs, closed
blocks except optionally the last) so that parse(render(s)) == s is a fair
property, and raw-text soups that stress every delimiter edge the parser
must survive.
"""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from scriptchat.codec import MessageSegment, SegmentKind, code_segment, text_segment

DATA_DIR = Path(__file__).parent / "data"

TEXT_TOKENS = [
    "Sure.",
    "Here is the loop:",
    "x = 1",
    "\n",
    " ",
    "</CODE>",
    "< CODE",
    "<code>",
    "print(i)",
    "a>b",
    "répété 🙂",
    "done\n",
]

CODE_TOKENS = [
    "def f():\n    pass\n",
    "x = [1, 2]\n",
    "\n",
    "while True:\n  break\n",
    '<CODE lang="x">\n',
    "s = 'hi'\n",
    "   indented\n",
]

RAW_TOKENS = [
    "<CODE>",
    "</CODE>",
    '<CODE lang="python">',
    '<CODE lang="PyThOn">',
    "<CODE foo=bar>",
    "<CODE >",
    "<code>",
    "plain text",
    "\n",
    " ",
    "x=1",
    "<CODE",
    "CODE>",
    "</code>",
    '<CODE lang="">',
    "🙂",
    "ümlaut",
]

LANGUAGES = [None, "python", "c++", "c#", "js-2", "rust"]


def random_text_body(rng: random.Random) -> str:
    return "".join(rng.choice(TEXT_TOKENS) for _ in range(rng.randint(1, 4)))


def random_code_body(rng: random.Random) -> str:
    return "".join(rng.choice(CODE_TOKENS) for _ in range(rng.randint(0, 3)))


def random_canonical_segments(
    rng: random.Random,
    max_segments: int = 6,
    allow_unclosed_tail: bool = True,
) -> list[MessageSegment]:
    """Alternating text/code list in the codec's canonical form.

    Text that precedes a code block is newline-terminated so the opening
    delimiter lands at a line start, mirroring what the parser produces.
    """
    kinds: list[SegmentKind] = []
    kind = rng.choice([SegmentKind.TEXT, SegmentKind.CODE])
    for _ in range(rng.randint(1, max_segments)):
        kinds.append(kind)
        kind = SegmentKind.CODE if kind is SegmentKind.TEXT else SegmentKind.TEXT

    segments: list[MessageSegment] = []
    for i, k in enumerate(kinds):
        if k is SegmentKind.TEXT:
            body = random_text_body(rng)
            next_is_code = i + 1 < len(kinds)
            if next_is_code and not body.endswith("\n"):
                body += "\n"
            segments.append(text_segment(body))
        else:
            segments.append(code_segment(random_code_body(rng), rng.choice(LANGUAGES)))
    if (
        allow_unclosed_tail
        and segments[-1].kind is SegmentKind.CODE
        and rng.random() < 0.2
    ):
        tail = segments.pop()
        segments.append(
            MessageSegment(kind=SegmentKind.CODE, body=tail.body, language=tail.language, closed=False)
        )
    return segments


def random_raw_text(rng: random.Random, max_tokens: int = 12) -> str:
    return "".join(rng.choice(RAW_TOKENS) for _ in range(rng.randint(0, max_tokens)))


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0DE)


@pytest.fixture(scope="session")
def prefix_v1() -> str:
    return (DATA_DIR / "prefix_socrates_v1.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def prefix_final() -> str:
    return (DATA_DIR / "prefix_socrates_final.txt").read_text(encoding="utf-8")
