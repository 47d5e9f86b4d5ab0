"""
A first conversation
====================

The engine turns a plain text-completion model into a chat assistant by
growing a script-shaped prompt. This demo runs entirely offline against a
scripted backend, so you can watch the mechanics without an API key.
"""

from pathlib import Path

from scriptchat import (
    AssistantEngine,
    ScriptedBackend,
    SessionStore,
    TurnRequest,
    extract_code_blocks,
    load_script,
    render_segments,
    resolve_persona,
    render_static_prefix,
)

SCRIPTS = Path(__file__).parent.parent / "src" / "scriptchat" / "scripts"

# Every session starts from a static prefix: a prologue that sets the scene
# plus a few example exchanges that teach the interaction pattern.
persona = resolve_persona("socrates-final")
prefix = render_static_prefix(persona)
print("=== static prefix (first 5 lines) ===")
print("\n".join(prefix.splitlines()[:5]))
print(f"... ({len(prefix)} chars total)\n")

# The scripted backend replays canned replies in order, standing in for a
# live model. The same file also drives the user side of the conversation.
script = load_script(SCRIPTS / "queue-session.yaml")
engine = AssistantEngine(
    backend=ScriptedBackend(script),
    store=SessionStore("./demo-data"),
)
record = engine.create_session("socrates-final")

for turn in script.turns:
    outcome = engine.post_turn(record.session_id, TurnRequest(text=turn.user))
    print(f"User: {turn.user}")
    reply = render_segments(outcome.assistant_segments)
    first_line = reply.splitlines()[0]
    blocks = extract_code_blocks(outcome.assistant_segments)
    suffix = f"  [+{len(blocks)} code block(s)]" if blocks else ""
    print(f"Assistant: {first_line}{suffix}")
    print(f"  (prompt {outcome.usage.prompt_tokens} tokens)\n")

# The prompt grew with each exchange; the transcript keeps it all.
debug = engine.prompt_debug(record.session_id)
print(f"final prompt estimate: {debug.estimated_tokens} tokens")
print(f"events in transcript: {len(engine.transcript(record.session_id)) - 1}")
