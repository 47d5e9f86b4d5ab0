"""
Comparing persona revisions
===========================

Persona engineering is iterative: tweak the prologue or an example, rerun
the same conversation, compare. The lab makes that a repeatable experiment.
The equivalent CLI is::

    persona-lab run --persona socrates-v1 --script <script> --format json --out a.json
    persona-lab run --persona socrates-final --script <script> --format json --out b.json
    persona-lab diff a.json b.json
"""

from pathlib import Path

from scriptchat.lab import diff, run

SCRIPTS = Path(__file__).parent.parent / "src" / "scriptchat" / "scripts"
script = SCRIPTS / "queue-session.yaml"

original = run("socrates-v1", script)
evolved = run("socrates-final", script)

print(f"{original.persona_name}: {original.total_prompt_tokens} prompt tokens over "
      f"{len(original.turns)} turns")
print(f"{evolved.persona_name}: {evolved.total_prompt_tokens} prompt tokens over "
      f"{len(evolved.turns)} turns\n")

report = diff(original.to_dict(), evolved.to_dict())
print(f"differing turns: {report.differing_turns}")
print("prologue lines that changed between revisions:")
for line in report.prefix_diff:
    if line.startswith(("+", "-")) and not line.startswith(("+++", "---")):
        print(f"  {line}")
