"""
Short-term memory and steering
==============================

The prompt cannot grow forever: old exchanges are dropped, whole pairs at a
time, once the token budget fills. When an answer is bad, try-again retires
it from the prompt context (but not from the transcript), and start-over
resets the context entirely. This demo uses a deliberately tiny budget so
truncation happens within a few turns.
"""

from scriptchat import (
    TokenBudget,
    assemble_prompt,
    estimate_tokens,
    new_session,
    render_static_prefix,
    resolve_persona,
    text_segment,
)

persona = resolve_persona("socrates-v1")
prefix_tokens = estimate_tokens(render_static_prefix(persona))

# Leave room for roughly two mid-sized exchanges beyond the prefix.
budget = TokenBudget(
    context_limit=prefix_tokens + 260 + 256 + 64,
    generation_reserve=256,
    safety_margin=64,
)
state = new_session(persona, budget)
print(f"prefix: {prefix_tokens} tokens, prompt allowance: {budget.available_for_prompt}\n")

for i in range(6):
    state.append_user_turn([text_segment(f"Question {i}: " + "details " * 20)])
    prompt = assemble_prompt(persona, state)
    dropped = len(state.live_events()) - len(prompt.included_seqs)
    print(
        f"turn {i}: prompt {prompt.estimated_tokens:>4} tokens, "
        f"{len(prompt.included_seqs)} events in window"
        + (f", {dropped} dropped (oldest first)" if prompt.truncated else "")
    )
    state.append_assistant_turn(f"Answer {i}: " + "insight " * 20)

# try-again: the bad answer stays visible but leaves the prompt context
state.append_user_turn([text_segment("One more question.")])
state.append_assistant_turn("A bad answer.")
state.try_again()
regenerated = assemble_prompt(persona, state)
print("\nafter try-again the prompt ends with the unanswered question:")
print("  ..." + repr(regenerated.text[-60:]))
print(f"  superseded turns kept in transcript: "
      f"{sum(1 for e in state.events if e.superseded)}")

# start-over: the context resets to the bare prefix, history stays
state.start_over()
state.append_user_turn([text_segment("Fresh start?")])
fresh = assemble_prompt(persona, state)
print(f"\nafter start-over the window holds {len(fresh.included_seqs)} event(s); "
      f"transcript still has {len(state.events)}")
