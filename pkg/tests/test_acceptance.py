"""Acceptance suite: every release criterion, offline, one pass line each.

Run with ``pytest tests/test_acceptance.py -v -s``. Each test enforces its
own wall-clock ceiling, prints ``ACCEPTANCE <criterion>: PASS`` on success,
and uses independent oracles (delimiter scans, brute-force window
recomputes, frozen fixture texts) rather than the code paths under test.
"""

from __future__ import annotations

import random
import time

from scriptchat.assembler import assemble_prompt, postprocess_generation, preview_prompt
from scriptchat.backends import FinishReason, ScriptedBackend, load_script
from scriptchat.codec import (
    extract_code_blocks,
    parse_segments,
    render_segments,
    text_segment,
)
from scriptchat.engine import AssistantEngine, TurnRequest
from scriptchat.persona import render_static_prefix, resolve_persona
from scriptchat.session import EventKind, new_session
from scriptchat.store import SessionStore

from conftest import DATA_DIR, random_canonical_segments, random_raw_text
from test_codec import count_blocks_by_scan
from test_session import (
    assert_core_invariants,
    budget_with_available,
    make_persona,
    random_session_walk,
    split_exchanges_by_boundary,
)

SCRIPTS_DIR = "src/scriptchat/scripts"
QUEUE_SCRIPT = f"{SCRIPTS_DIR}/queue-session.yaml"
PROBE_SCRIPT = f"{SCRIPTS_DIR}/language-probe.yaml"


class Deadline:
    def __init__(self, name: str, limit_seconds: float):
        self.name = name
        self.limit = limit_seconds
        self.started = time.perf_counter()

    def check(self) -> None:
        elapsed = time.perf_counter() - self.started
        assert elapsed < self.limit, f"{self.name} took {elapsed:.2f}s (limit {self.limit}s)"
        print(f"ACCEPTANCE {self.name}: PASS ({elapsed:.2f}s)")


def test_prompt_fidelity(prefix_v1: str, prefix_final: str) -> None:
    deadline = Deadline("prompt-fidelity", 1.0)

    assert render_static_prefix(resolve_persona("socrates-v1")) == prefix_v1
    assert render_static_prefix(resolve_persona("socrates-final")) == prefix_final

    for name, prefix in (("socrates-v1", prefix_v1), ("socrates-final", prefix_final)):
        persona = resolve_persona(name)
        state = new_session(persona)
        # fresh session previews as the bare prefix
        assert preview_prompt(persona, state).text == prefix
        state.append_user_turn([text_segment("Please show me how to reverse a string.")])
        prompt = assemble_prompt(persona, state)
        assert prompt.text.startswith(prefix)
        assert prompt.text.endswith(persona.assistant_label + persona.label_separator)

    deadline.check()


def test_codec_round_trip() -> None:
    deadline = Deadline("codec-round-trip", 5.0)
    rng = random.Random(2024)

    for _ in range(1000):
        segments = random_canonical_segments(rng)
        assert parse_segments(render_segments(segments)) == segments
    for _ in range(1000):
        raw = random_raw_text(rng)
        assert render_segments(parse_segments(raw)) == raw
    adversarial = [
        "<CODE>\nunclosed until the very end",
        "<CODE>\nouter <CODE lang=\"x\">\n nested </CODE> tail",
        "text </CODE> stray close <code> wrong case",
        "<CODE lang=\"PyThOn\">no newline</CODE><CODE>",
    ]
    for raw in adversarial:
        assert render_segments(parse_segments(raw)) == raw

    # code-block counts frozen from the fixture texts via the scan oracle
    v1 = (DATA_DIR / "prefix_socrates_v1.txt").read_text(encoding="utf-8")
    final = (DATA_DIR / "prefix_socrates_final.txt").read_text(encoding="utf-8")
    queue_replies = "\n".join(t.reply for t in load_script(QUEUE_SCRIPT).turns)
    for raw, expected in ((v1, 2), (final, 4), (queue_replies, 3)):
        assert count_blocks_by_scan(raw) == expected
        assert len(extract_code_blocks(parse_segments(raw))) == expected

    deadline.check()


def test_window_invariants() -> None:
    deadline = Deadline("window-invariants", 10.0)
    truncation_seen = 0
    for seed in range(200):
        state = random_session_walk(seed, assert_core_invariants)
        prefix = state.static_prefix
        window = state.prompt_window()
        if window.truncated:
            truncation_seen += 1
        live = state.live_events()
        if live and live[-1].kind is EventKind.USER_TURN:
            prompt = assemble_prompt(state.persona, state)
            assert prompt.text.startswith(prefix)
            if not prompt.oversized:
                assert prompt.estimated_tokens <= state.budget.available_for_prompt
    assert truncation_seen > 50, "budgets were meant to force truncation"
    deadline.check()


def test_retry_reset_semantics() -> None:
    deadline = Deadline("retry-reset-semantics", 5.0)
    for seed in range(120):
        rng = random.Random(seed)
        persona = make_persona()
        state = new_session(persona, budget_with_available(persona, rng.randint(20, 120)))
        snapshots: list[tuple[int, EventKind, tuple, str | None]] = []
        lengths = [0]
        replies = 0
        for _ in range(25):
            live = state.live_events()
            pending = bool(live) and live[-1].kind is EventKind.USER_TURN
            answered = bool(live) and live[-1].kind is EventKind.ASSISTANT_TURN
            roll = rng.random()
            if pending:
                replies += 1
                state.append_assistant_turn(f"reply {replies}")
            elif answered and roll < 0.35:
                state.try_again()
            elif roll < 0.15:
                state.start_over()
            else:
                state.append_user_turn([text_segment(f"ask {len(state.events)}")])
            lengths.append(len(state.events))
            for seq, kind, segments, raw in snapshots:
                event = state.events[seq]
                assert (event.seq, event.kind, event.segments, event.raw) == (seq, kind, segments, raw)
            snapshots = [(e.seq, e.kind, e.segments, e.raw) for e in state.events]
            # at most one live answer per exchange; none superseded in window
            for group in split_exchanges_by_boundary(state.live_events()):
                assert sum(1 for e in group if e.kind is EventKind.ASSISTANT_TURN) <= 1
            last_reset = max(
                (e.seq for e in state.events if e.kind is EventKind.RESET_MARKER), default=-1
            )
            for event in state.prompt_window().events:
                assert not event.superseded
                assert event.seq > last_reset
        assert lengths == sorted(lengths) and len(set(lengths)) == len(lengths)
    deadline.check()


def test_replay_equivalence(tmp_path) -> None:
    deadline = Deadline("replay-equivalence", 10.0)
    persona = make_persona()
    corruption_checked = 0
    for seed in range(150):
        rng = random.Random(seed)
        store = SessionStore(tmp_path / str(seed))
        budget = budget_with_available(persona, rng.randint(20, 120))
        record = store.create(f"s{seed}", persona.name, budget, created_at=time.time())
        state = new_session(persona, budget)
        replies = 0
        for _ in range(rng.randint(2, 20)):
            live = state.live_events()
            if live and live[-1].kind is EventKind.USER_TURN:
                replies += 1
                event = state.append_assistant_turn(f"reply {replies} " + "r" * rng.randint(0, 120))
            elif live and rng.random() < 0.25:
                event = state.try_again()
            elif rng.random() < 0.15:
                event = state.start_over()
            else:
                event = state.append_user_turn([text_segment("ask " + "q" * rng.randint(1, 120))])
            store.append_event(record, event)

        replayed = store.replay(record, persona)
        assert replayed.events == state.events
        assert preview_prompt(persona, replayed).text == preview_prompt(persona, state).text

        if seed % 10 == 0 and len(state.events) >= 2:
            raw = record.log_path.read_bytes()
            record.log_path.write_bytes(raw[:-7])  # chop the final line mid-record
            recovered = store.replay(record, persona, recover=True)
            assert [e.seq for e in recovered.events] == [e.seq for e in state.events[:-1]]
            assert [e.raw for e in recovered.events] == [e.raw for e in state.events[:-1]]
            corruption_checked += 1
        store.close()
    assert corruption_checked >= 10
    deadline.check()


def test_end_to_end_fixture(tmp_path) -> None:
    deadline = Deadline("end-to-end-fixture", 2.0)

    queue_script = load_script(QUEUE_SCRIPT)
    engine = AssistantEngine(
        backend=ScriptedBackend(queue_script), store=SessionStore(tmp_path / "queue")
    )
    record = engine.create_session("socrates-final")
    replies = [
        render_segments(
            engine.post_turn(record.session_id, TurnRequest(text=turn.user)).assistant_segments
        )
        for turn in queue_script.turns
    ]
    assert replies == [t.reply for t in queue_script.turns]
    assert replies[1].startswith("I am sorry. Here is the corrected version.")
    assert "def peek(self):" in replies[1]
    assert replies[3].startswith("I think we can.")
    assert 'raise IndexError("Queue is empty")' in replies[3]
    assert replies[-1] == "You're welcome."

    state = engine.session_state(record.session_id)
    answers = [e for e in state.events if e.kind is EventKind.ASSISTANT_TURN]
    blocks = [b for e in answers for b in extract_code_blocks(e.segments)]
    assert len(blocks) == 3

    probe_script = load_script(PROBE_SCRIPT)
    probe_engine = AssistantEngine(
        backend=ScriptedBackend(probe_script), store=SessionStore(tmp_path / "probe")
    )
    probe = probe_engine.create_session("socrates-final")
    last = None
    for turn in probe_script.turns:
        last = probe_engine.post_turn(probe.session_id, TurnRequest(text=turn.user))
    assert probe_script.turns[-1].user == "Wo bist du?"
    assert render_segments(last.assistant_segments) == (
        "Hallo. Ich bin Socrates. Wie kann ich Ihnen helfen?"
    )

    deadline.check()


def test_stop_sequence_defense(tmp_path) -> None:
    deadline = Deadline("stop-sequence-defense", 2.0)

    sloppy = load_script({"turns": [{"reply": "A clean answer.\nUser: hi"}]})
    backend = ScriptedBackend(sloppy)
    engine = AssistantEngine(backend=backend, store=SessionStore(tmp_path))
    record = engine.create_session("socrates-v1")
    outcome = engine.post_turn(record.session_id, TurnRequest(text="q"))
    stored = engine.session_state(record.session_id).events[-1]
    assert stored.raw == "A clean answer."
    assert render_segments(outcome.assistant_segments) == "A clean answer."

    persona = resolve_persona("socrates-v1")
    rng = random.Random(7)
    pieces = ["Hello", "\nUser:", " ", "\t", "\n", "User:", "<CODE>", "Socrates:", "done"]
    for _ in range(1000):
        raw = "".join(rng.choice(pieces) for _ in range(rng.randint(0, 12)))
        once = postprocess_generation(raw, persona)
        assert postprocess_generation(once, persona) == once
        assert all(stop not in once for stop in persona.stop_sequences)

    deadline.check()
