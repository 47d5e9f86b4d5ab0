"""scriptchat: a conversational programming assistant engine.

Turns a plain text-completion model into a chat assistant by growing a
script-shaped prompt: a static persona prefix plus the recent dialogue,
truncated to a token budget, with a trailing assistant label cueing the
model to write the next line.
"""

from .assembler import (
    AssembledPrompt,
    NoPendingUserTurnError,
    assemble_prompt,
    build_completion_request,
    postprocess_generation,
    preview_prompt,
)
from .backends import (
    BackendError,
    CompletionBackend,
    CompletionRequest,
    CompletionResult,
    FinishReason,
    GenerationParams,
    HttpBackendConfig,
    HttpCompletionsBackend,
    Script,
    ScriptedBackend,
    ScriptError,
    ScriptExhaustedError,
    ScriptMismatchError,
    ScriptTurn,
    complete,
    load_script,
)
from .codec import (
    MessageSegment,
    SegmentKind,
    code_segment,
    extract_code_blocks,
    parse_segments,
    render_segments,
    text_segment,
)
from .engine import (
    AssistantEngine,
    CodeSelection,
    EmptyTurnError,
    SessionNotFoundError,
    TurnConflictError,
    TurnOutcome,
    TurnRequest,
    UnknownPersonaError,
    UsageReport,
)
from .persona import (
    ExampleExchange,
    PersonaConfig,
    PersonaError,
    Speaker,
    list_bundled_personas,
    load_persona,
    render_static_prefix,
    render_turn_line,
    resolve_persona,
)
from .session import (
    AlternationError,
    BudgetError,
    EventKind,
    NothingToRetryError,
    PromptWindow,
    SessionEvent,
    SessionState,
    TokenBudget,
    new_session,
)
from .store import LogCorruptionError, SessionRecord, SessionStore
from .tokens import CharHeuristicEstimator, TokenEstimator, estimate_tokens

__version__ = "0.1.0"

__all__ = [
    "AlternationError",
    "AssembledPrompt",
    "AssistantEngine",
    "BackendError",
    "BudgetError",
    "CharHeuristicEstimator",
    "CodeSelection",
    "CompletionBackend",
    "CompletionRequest",
    "CompletionResult",
    "EmptyTurnError",
    "EventKind",
    "ExampleExchange",
    "FinishReason",
    "GenerationParams",
    "HttpBackendConfig",
    "HttpCompletionsBackend",
    "LogCorruptionError",
    "MessageSegment",
    "NoPendingUserTurnError",
    "NothingToRetryError",
    "PersonaConfig",
    "PersonaError",
    "PromptWindow",
    "Script",
    "ScriptError",
    "ScriptExhaustedError",
    "ScriptMismatchError",
    "ScriptTurn",
    "ScriptedBackend",
    "SegmentKind",
    "SessionEvent",
    "SessionNotFoundError",
    "SessionRecord",
    "SessionState",
    "SessionStore",
    "Speaker",
    "TokenBudget",
    "TokenEstimator",
    "TurnConflictError",
    "TurnOutcome",
    "TurnRequest",
    "UnknownPersonaError",
    "UsageReport",
    "assemble_prompt",
    "build_completion_request",
    "code_segment",
    "complete",
    "estimate_tokens",
    "extract_code_blocks",
    "list_bundled_personas",
    "load_persona",
    "load_script",
    "new_session",
    "parse_segments",
    "postprocess_generation",
    "preview_prompt",
    "render_segments",
    "render_static_prefix",
    "render_turn_line",
    "resolve_persona",
    "text_segment",
]
