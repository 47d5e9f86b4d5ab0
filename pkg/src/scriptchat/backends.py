"""Generation backends behind one neutral interface.

Two implementations: an HTTP client for OpenAI-compatible legacy
completions endpoints (plain prompt in, single choice out - the engine owns
the chat framing itself), and a scripted backend that replays canned
replies in order for tests, demos, and persona experiments.
"""

from __future__ import annotations

import logging
import math
import random
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Protocol, runtime_checkable

import httpx
import yaml

logger = logging.getLogger(__name__)


class BackendError(Exception):
    """Generation failed; ``retryable`` separates transient from permanent."""

    retryable = False


class BackendTransportError(BackendError):
    retryable = True


class BackendTimeoutError(BackendError):
    retryable = True


class BackendAuthError(BackendError):
    retryable = False


class BackendRequestError(BackendError):
    retryable = False


class BackendRemoteError(BackendError):
    """Remote returned an error status; body is surfaced in the message."""

    def __init__(self, message: str, status_code: int):
        super().__init__(message)
        self.status_code = status_code
        self.retryable = status_code in (408, 429) or status_code >= 500


class ScriptError(ValueError):
    pass


class ScriptExhaustedError(BackendError):
    retryable = False


class ScriptMismatchError(BackendError):
    """The pending user entry does not match the script; fixture drift."""

    retryable = False


class FinishReason(str, Enum):
    STOP_SEQUENCE = "stop_sequence"
    LENGTH = "length"
    BACKEND_OTHER = "backend_other"


@dataclass(frozen=True)
class GenerationParams:
    max_tokens: int = 256
    temperature: float = 0.0
    top_p: float = 1.0
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if not math.isfinite(self.temperature) or self.temperature < 0:
            raise ValueError("temperature must be finite and non-negative")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    stop: tuple[str, ...]
    params: GenerationParams

    def __post_init__(self) -> None:
        if not self.stop:
            raise ValueError("at least one stop sequence is required")


@dataclass(frozen=True)
class CompletionResult:
    """Outcome of one generation call.

    Invariant: ``finish_reason == STOP_SEQUENCE`` implies the text contains
    none of the request's stop sequences; backends downgrade a sloppy
    remote's claim via :func:`_honest_finish` before constructing this.
    """

    text: str
    finish_reason: FinishReason
    latency: float = 0.0


@runtime_checkable
class CompletionBackend(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResult: ...


def complete(backend: CompletionBackend, request: CompletionRequest) -> CompletionResult:
    """Run one generation call; request invariants are validated on construction."""
    return backend.complete(request)


def _honest_finish(text: str, stop: tuple[str, ...], claimed: FinishReason) -> FinishReason:
    if claimed is FinishReason.STOP_SEQUENCE and any(s in text for s in stop):
        return FinishReason.BACKEND_OTHER
    return claimed


# -- scripted backend --------------------------------------------------------


@dataclass(frozen=True)
class ScriptTurn:
    """One scripted exchange.

    ``user`` drives headless runs; ``expect`` (defaulting to ``user``) must
    occur in the prompt when the reply is served, catching fixture drift.
    """

    reply: str
    user: str | None = None
    expect: str | None = None
    code_selection: Mapping[str, Any] | None = None
    finish_reason: FinishReason | None = None

    @property
    def matcher(self) -> str | None:
        return self.expect if self.expect is not None else self.user


@dataclass(frozen=True)
class Script:
    name: str
    turns: tuple[ScriptTurn, ...]


def load_script(source: str | Path | Mapping[str, Any]) -> Script:
    """Load a reply script from a YAML file path or a parsed mapping."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            doc = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ScriptError(f"{path}: malformed YAML: {exc}")
        if not isinstance(doc, Mapping):
            raise ScriptError(f"{path}: expected a mapping at top level")
        default_name = path.stem
    else:
        doc = source
        default_name = "script"
    raw_turns = doc.get("turns")
    if raw_turns is None:
        raise ScriptError("turns: missing required field")
    if not isinstance(raw_turns, list):
        raise ScriptError("turns: expected a list")
    turns: list[ScriptTurn] = []
    for i, entry in enumerate(raw_turns):
        if not isinstance(entry, Mapping):
            raise ScriptError(f"turns[{i}]: expected a mapping")
        reply = entry.get("reply")
        if not isinstance(reply, str):
            raise ScriptError(f"turns[{i}].reply: expected text")
        finish = entry.get("finish_reason")
        turns.append(
            ScriptTurn(
                reply=reply,
                user=entry.get("user"),
                expect=entry.get("expect"),
                code_selection=entry.get("code_selection"),
                finish_reason=FinishReason(finish) if finish is not None else None,
            )
        )
    matchers = [t.matcher for t in turns if t.matcher is not None]
    duplicates = {m for m in matchers if matchers.count(m) > 1}
    if duplicates:
        raise ScriptError(f"duplicate matcher keys: {sorted(duplicates)!r}")
    return Script(name=str(doc.get("name", default_name)), turns=tuple(turns))


class ScriptedBackend:
    """Replays scripted replies in order; deterministic and offline.

    If a scripted reply happens to contain one of the request's stop
    sequences, the finish reason is reported as ``backend_other`` (the
    reply text is served verbatim), which exercises the client-side stop
    defense exactly like a non-conforming remote would.
    """

    def __init__(self, script: Script):
        self.script = script
        self._cursor = 0
        self._lock = threading.Lock()

    @property
    def cursor(self) -> int:
        return self._cursor

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            if self._cursor >= len(self.script.turns):
                raise ScriptExhaustedError(
                    f"script {self.script.name!r} exhausted after {self._cursor} replies"
                )
            turn = self.script.turns[self._cursor]
            if turn.matcher is not None and turn.matcher not in request.prompt:
                raise ScriptMismatchError(
                    f"script {self.script.name!r} turn {self._cursor}: "
                    f"expected the prompt to contain {turn.matcher!r}"
                )
            self._cursor += 1
        claimed = turn.finish_reason if turn.finish_reason is not None else FinishReason.STOP_SEQUENCE
        return CompletionResult(
            text=turn.reply,
            finish_reason=_honest_finish(turn.reply, request.stop, claimed),
            latency=0.0,
        )


# -- HTTP backend ------------------------------------------------------------


_FINISH_MAP = {
    "stop": FinishReason.STOP_SEQUENCE,
    "stop_sequence": FinishReason.STOP_SEQUENCE,
    "length": FinishReason.LENGTH,
}


@dataclass
class HttpBackendConfig:
    """Connection settings; the API key never appears in reprs or logs."""

    base_url: str
    api_key: str | None = field(default=None, repr=False)
    model: str | None = None
    timeout: float = 30.0
    max_retries: int = 1
    retry_jitter: float = 0.25


class HttpCompletionsBackend:
    """Client for OpenAI-compatible ``POST {base_url}/completions``."""

    def __init__(self, config: HttpBackendConfig, client: httpx.Client | None = None):
        self.config = config
        headers = {}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        self._client = client or httpx.Client(
            base_url=config.base_url, headers=headers, timeout=config.timeout
        )

    def close(self) -> None:
        self._client.close()

    def _payload(self, request: CompletionRequest) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "prompt": request.prompt,
            "max_tokens": request.params.max_tokens,
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
            "stop": list(request.stop),
        }
        if self.config.model:
            payload["model"] = self.config.model
        payload.update(request.params.extra)
        return payload

    def _call_once(self, request: CompletionRequest) -> CompletionResult:
        started = time.perf_counter()
        try:
            response = self._client.post("/completions", json=self._payload(request))
        except httpx.TimeoutException as exc:
            raise BackendTimeoutError(f"completion timed out after {self.config.timeout}s") from exc
        except httpx.TransportError as exc:
            raise BackendTransportError(f"transport failure: {exc}") from exc
        latency = time.perf_counter() - started
        if response.status_code in (401, 403):
            raise BackendAuthError(f"authentication rejected ({response.status_code})")
        if response.status_code in (400, 404, 409, 422):
            raise BackendRequestError(f"bad request ({response.status_code}): {response.text}")
        if response.status_code != 200:
            raise BackendRemoteError(
                f"remote error ({response.status_code}): {response.text}", response.status_code
            )
        try:
            body = response.json()
            choice = body["choices"][0]
            text = choice["text"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendRequestError(f"malformed completion response: {response.text[:200]}") from exc
        claimed = _FINISH_MAP.get(choice.get("finish_reason"), FinishReason.BACKEND_OTHER)
        return CompletionResult(
            text=text,
            finish_reason=_honest_finish(text, request.stop, claimed),
            latency=latency,
        )

    def complete(self, request: CompletionRequest) -> CompletionResult:
        attempts = self.config.max_retries + 1
        last: BackendError | None = None
        for attempt in range(attempts):
            try:
                return self._call_once(request)
            except BackendError as exc:
                last = exc
                if not exc.retryable or attempt == attempts - 1:
                    raise
                pause = random.uniform(0, self.config.retry_jitter)
                logger.warning("retryable backend failure (%s); retrying in %.2fs", exc, pause)
                time.sleep(pause)
        raise last  # pragma: no cover - loop always raises or returns
