"""persona-lab command line: run scripted conversations and diff transcripts."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .backends import BackendError, GenerationParams, ScriptError, load_script
from .lab import build_http_backend, diff as diff_transcripts, run as run_script
from .persona import PersonaError, resolve_persona
from .session import DEFAULT_BUDGET, TokenBudget


@click.group()
def main() -> None:
    """Workbench for persona experiments against scripted or live backends."""


@main.command("run")
@click.option("--persona", "persona_ref", required=True, help="Persona name or path to a persona YAML.")
@click.option("--script", "script_path", required=True, type=click.Path(exists=True), help="Conversation script YAML.")
@click.option("--backend", "backend_kind", type=click.Choice(["scripted", "http"]), default="scripted", show_default=True)
@click.option("--base-url", default="http://localhost:8000/v1", show_default=True, help="Completions endpoint for --backend http.")
@click.option("--api-key", envvar="SCRIPTCHAT_API_KEY", default=None, help="Bearer token for --backend http (env SCRIPTCHAT_API_KEY).")
@click.option("--model", default=None, help="Model name passed through to the endpoint.")
@click.option("--context-limit", type=int, default=DEFAULT_BUDGET.context_limit, show_default=True)
@click.option("--generation-reserve", type=int, default=DEFAULT_BUDGET.generation_reserve, show_default=True)
@click.option("--safety-margin", type=int, default=DEFAULT_BUDGET.safety_margin, show_default=True)
@click.option("--max-tokens", type=int, default=256, show_default=True)
@click.option("--temperature", type=float, default=0.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write the transcript here instead of stdout.")
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text", show_default=True)
def run_command(
    persona_ref: str,
    script_path: str,
    backend_kind: str,
    base_url: str,
    api_key: str | None,
    model: str | None,
    context_limit: int,
    generation_reserve: int,
    safety_margin: int,
    max_tokens: int,
    temperature: float,
    out_path: str | None,
    output_format: str,
) -> None:
    """Drive one scripted conversation through the engine and report usage."""
    try:
        persona = resolve_persona(persona_ref)
        script = load_script(script_path)
        backend = None
        if backend_kind == "http":
            backend = build_http_backend(base_url, api_key=api_key, model=model)
        report = run_script(
            persona,
            script,
            backend=backend,
            budget=TokenBudget(context_limit, generation_reserve, safety_margin),
            params=GenerationParams(max_tokens=max_tokens, temperature=temperature),
        )
    except (BackendError, ScriptError, PersonaError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    rendered = (
        json.dumps(report.to_dict(), indent=2) + "\n" if output_format == "json" else report.to_text()
    )
    if out_path:
        Path(out_path).write_text(rendered, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(rendered, nl=False)


@main.command("diff")
@click.argument("transcript_a", type=click.Path(exists=True))
@click.argument("transcript_b", type=click.Path(exists=True))
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text", show_default=True)
def diff_command(transcript_a: str, transcript_b: str, output_format: str) -> None:
    """Compare two JSON transcripts; exits 1 when they differ."""
    try:
        left = json.loads(Path(transcript_a).read_text(encoding="utf-8"))
        right = json.loads(Path(transcript_b).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    report = diff_transcripts(left, right)
    if output_format == "json":
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        click.echo(report.to_text(), nl=False)
    sys.exit(0 if report.identical else 1)


if __name__ == "__main__":
    main()
