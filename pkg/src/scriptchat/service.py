"""HTTP+JSON API over the engine.

Routes:
    POST /sessions                      create a session for a persona
    POST /sessions/{id}/turns           post a user turn, get the reply
    POST /sessions/{id}/retry           regenerate the last answer
    POST /sessions/{id}/reset           start the prompt context over
    GET  /sessions/{id}/transcript      display transcript (greeting, turns, markers)
    GET  /sessions/{id}/prompt          exact next prompt text and included seqs

Configuration comes from a YAML file and/or SCRIPTCHAT_* environment
variables (environment wins). With ``auth_token`` set, every route requires
``Authorization: Bearer <token>``.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml
from fastapi import Depends, FastAPI, HTTPException, Request
from pydantic import BaseModel, Field, model_validator

from .backends import (
    BackendError,
    CompletionBackend,
    GenerationParams,
    HttpBackendConfig,
    HttpCompletionsBackend,
    ScriptedBackend,
    load_script,
)
from .codec import MessageSegment
from .engine import (
    AssistantEngine,
    CodeSelection,
    EmptyTurnError,
    NothingToRetryEngineError,
    SessionNotFoundError,
    TurnConflictError,
    TurnOutcome,
    TurnRequest,
    UnknownPersonaError,
)
from .session import DEFAULT_BUDGET, BudgetError, TokenBudget
from .store import SessionStore, segment_to_dict

logger = logging.getLogger(__name__)

ENV_PREFIX = "SCRIPTCHAT_"


@dataclass
class ServiceConfig:
    store_dir: Path = Path("./scriptchat-data")
    persona_dir: Path | None = None
    backend: str = "http"  # "http" | "scripted"
    script_path: Path | None = None
    base_url: str = "http://localhost:8000/v1"
    api_key: str | None = field(default=None, repr=False)
    model: str | None = None
    timeout: float = 30.0
    budget: TokenBudget = DEFAULT_BUDGET
    params: GenerationParams = field(default_factory=GenerationParams)
    auth_token: str | None = field(default=None, repr=False)
    cors_origins: tuple[str, ...] = ()


def load_config(path: str | Path | None = None, env: Mapping[str, str] | None = None) -> ServiceConfig:
    env = os.environ if env is None else env
    doc: dict[str, Any] = {}
    config_path = path or env.get(ENV_PREFIX + "CONFIG")
    if config_path:
        loaded = yaml.safe_load(Path(config_path).read_text(encoding="utf-8"))
        if loaded:
            doc.update(loaded)

    def pick(key: str, default: Any = None) -> Any:
        return env.get(ENV_PREFIX + key.upper(), doc.get(key, default))

    budget_doc = doc.get("budget", {})
    budget = TokenBudget(
        context_limit=int(pick("context_limit", budget_doc.get("context_limit", DEFAULT_BUDGET.context_limit))),
        generation_reserve=int(
            pick("generation_reserve", budget_doc.get("generation_reserve", DEFAULT_BUDGET.generation_reserve))
        ),
        safety_margin=int(pick("safety_margin", budget_doc.get("safety_margin", DEFAULT_BUDGET.safety_margin))),
    )
    params_doc = doc.get("params", {})
    params = GenerationParams(
        max_tokens=int(pick("max_tokens", params_doc.get("max_tokens", 256))),
        temperature=float(pick("temperature", params_doc.get("temperature", 0.0))),
        top_p=float(pick("top_p", params_doc.get("top_p", 1.0))),
    )
    persona_dir = pick("persona_dir")
    script_path = pick("script")
    cors = pick("cors_origins", ())
    if isinstance(cors, str):
        cors = tuple(origin.strip() for origin in cors.split(",") if origin.strip())
    return ServiceConfig(
        store_dir=Path(pick("store_dir", "./scriptchat-data")),
        persona_dir=Path(persona_dir) if persona_dir else None,
        backend=str(pick("backend", "http")),
        script_path=Path(script_path) if script_path else None,
        base_url=str(pick("base_url", "http://localhost:8000/v1")),
        api_key=pick("api_key"),
        model=pick("model"),
        timeout=float(pick("timeout", 30.0)),
        budget=budget,
        params=params,
        auth_token=pick("auth_token"),
        cors_origins=tuple(cors),
    )


def build_backend(config: ServiceConfig) -> CompletionBackend:
    if config.backend == "scripted":
        if config.script_path is None:
            raise ValueError("scripted backend requires a script path")
        return ScriptedBackend(load_script(config.script_path))
    if config.backend == "http":
        return HttpCompletionsBackend(
            HttpBackendConfig(
                base_url=config.base_url,
                api_key=config.api_key,
                model=config.model,
                timeout=config.timeout,
            )
        )
    raise ValueError(f"unknown backend kind {config.backend!r}")


# -- wire models ---------------------------------------------------------------


class BudgetBody(BaseModel):
    context_limit: int
    generation_reserve: int
    safety_margin: int


class CreateSessionBody(BaseModel):
    persona: str
    budget: BudgetBody | None = None


class CodeSelectionBody(BaseModel):
    body: str
    language: str | None = None


class ParamsBody(BaseModel):
    max_tokens: int | None = Field(default=None, gt=0)
    temperature: float | None = Field(default=None, ge=0)
    top_p: float | None = Field(default=None, gt=0, le=1)


class TurnBody(BaseModel):
    text: str | None = None
    code_selection: CodeSelectionBody | None = None
    params_override: ParamsBody | None = None

    @model_validator(mode="after")
    def _not_empty(self) -> "TurnBody":
        if not self.text and self.code_selection is None:
            raise ValueError("turn must include text or a code selection")
        return self


class RetryBody(BaseModel):
    params_override: ParamsBody | None = None


def _merge_params(defaults: GenerationParams, override: ParamsBody | None) -> GenerationParams | None:
    if override is None:
        return None
    return GenerationParams(
        max_tokens=override.max_tokens if override.max_tokens is not None else defaults.max_tokens,
        temperature=override.temperature if override.temperature is not None else defaults.temperature,
        top_p=override.top_p if override.top_p is not None else defaults.top_p,
    )


def _segments_json(segments: tuple[MessageSegment, ...]) -> list[dict[str, Any]]:
    return [segment_to_dict(s) for s in segments]


def _outcome_json(outcome: TurnOutcome) -> dict[str, Any]:
    return {
        "assistant_segments": _segments_json(outcome.assistant_segments),
        "truncated": outcome.truncated,
        "oversized": outcome.oversized,
        "usage": {
            "prompt_tokens": outcome.usage.prompt_tokens,
            "completion_tokens": outcome.usage.completion_tokens,
            "total_tokens": outcome.usage.total_tokens,
            "latency": outcome.usage.latency,
        },
    }


def create_app(config: ServiceConfig | None = None, engine: AssistantEngine | None = None) -> FastAPI:
    """App factory; pass an engine directly to reuse one across apps (tests)."""
    config = config or load_config()
    if engine is None:
        engine = AssistantEngine(
            backend=build_backend(config),
            store=SessionStore(config.store_dir),
            persona_dir=config.persona_dir,
            default_budget=config.budget,
            default_params=config.params,
        )

    async def require_token(request: Request) -> None:
        if config.auth_token is None:
            return
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {config.auth_token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    app = FastAPI(title="scriptchat", version="0.1.0", dependencies=[Depends(require_token)])
    app.state.engine = engine
    if config.cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(BackendError)
    async def backend_error(request: Request, exc: BackendError):
        from fastapi.responses import JSONResponse

        return JSONResponse(
            status_code=502,
            content={"detail": str(exc), "retryable": exc.retryable},
        )

    def _http_error(exc: Exception) -> HTTPException:
        if isinstance(exc, (UnknownPersonaError, SessionNotFoundError)):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, (TurnConflictError, NothingToRetryEngineError)):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, (EmptyTurnError, BudgetError)):
            return HTTPException(status_code=422, detail=str(exc))
        raise exc

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict[str, Any]:
        try:
            budget = None
            if body.budget is not None:
                budget = TokenBudget(
                    context_limit=body.budget.context_limit,
                    generation_reserve=body.budget.generation_reserve,
                    safety_margin=body.budget.safety_margin,
                )
            record = engine.create_session(body.persona, budget)
            persona = engine.session_persona(record.session_id)
        except Exception as exc:
            raise _http_error(exc)
        return {
            "session_id": record.session_id,
            "persona": record.persona_name,
            "greeting": persona.greeting,
            "created_at": record.created_at,
            "budget": {
                "context_limit": record.budget.context_limit,
                "generation_reserve": record.budget.generation_reserve,
                "safety_margin": record.budget.safety_margin,
            },
        }

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: TurnBody) -> dict[str, Any]:
        selection = None
        if body.code_selection is not None:
            selection = CodeSelection(body=body.code_selection.body, language=body.code_selection.language)
        request = TurnRequest(
            text=body.text,
            code_selection=selection,
            params_override=_merge_params(config.params, body.params_override),
        )
        try:
            outcome = engine.post_turn(session_id, request)
        except BackendError:
            raise
        except Exception as exc:
            raise _http_error(exc)
        return _outcome_json(outcome)

    @app.post("/sessions/{session_id}/retry")
    def retry(session_id: str, body: RetryBody | None = None) -> dict[str, Any]:
        override = _merge_params(config.params, body.params_override if body else None)
        try:
            outcome = engine.retry(session_id, override)
        except BackendError:
            raise
        except Exception as exc:
            raise _http_error(exc)
        return _outcome_json(outcome)

    @app.post("/sessions/{session_id}/reset")
    def reset(session_id: str) -> dict[str, Any]:
        try:
            seq = engine.reset(session_id)
        except Exception as exc:
            raise _http_error(exc)
        return {"ok": True, "reset_seq": seq}

    @app.get("/sessions/{session_id}/transcript")
    def transcript(session_id: str) -> dict[str, Any]:
        try:
            entries = engine.transcript(session_id)
            record = engine.store.get(session_id)
        except Exception as exc:
            raise _http_error(exc)
        return {
            "session_id": session_id,
            "persona": record.persona_name if record else None,
            "entries": [
                {
                    "kind": e.kind,
                    "speaker": e.speaker.value if e.speaker else None,
                    "segments": _segments_json(e.segments),
                    "seq": e.seq,
                    "superseded": e.superseded,
                    "timestamp": e.timestamp,
                }
                for e in entries
            ],
        }

    @app.get("/sessions/{session_id}/prompt")
    def prompt_debug(session_id: str) -> dict[str, Any]:
        try:
            prompt = engine.prompt_debug(session_id)
        except Exception as exc:
            raise _http_error(exc)
        return {
            "text": prompt.text,
            "included_seqs": list(prompt.included_seqs),
            "estimated_tokens": prompt.estimated_tokens,
            "truncated": prompt.truncated,
            "oversized": prompt.oversized,
        }

    return app


def main() -> None:
    """Console entry point: run the service with uvicorn."""
    import uvicorn

    logging.basicConfig(level=logging.INFO)
    host = os.environ.get(ENV_PREFIX + "HOST", "127.0.0.1")
    port = int(os.environ.get(ENV_PREFIX + "PORT", "8080"))
    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
