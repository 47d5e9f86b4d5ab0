"""HTTP API flows against a scripted backend and an on-disk store."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from scriptchat.backends import ScriptedBackend, load_script
from scriptchat.engine import AssistantEngine
from scriptchat.service import ServiceConfig, create_app, load_config
from scriptchat.store import SessionStore

SCRIPTS_DIR = "src/scriptchat/scripts"


def make_client(tmp_path, script, **config_kwargs) -> TestClient:
    config = ServiceConfig(store_dir=tmp_path, backend="scripted", **config_kwargs)
    engine = AssistantEngine(
        backend=ScriptedBackend(load_script(script)),
        store=SessionStore(tmp_path),
        default_budget=config.budget,
        default_params=config.params,
    )
    return TestClient(create_app(config, engine=engine))


SIMPLE_SCRIPT = {"turns": [{"reply": "first"}, {"reply": "second"}, {"reply": "third"}]}


def test_create_session_returns_greeting(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    response = client.post("/sessions", json={"persona": "socrates-final"})
    assert response.status_code == 201
    body = response.json()
    assert body["greeting"] == "Hello.  I am Socrates.  How can I help you?"
    assert body["persona"] == "socrates-final"
    assert body["budget"]["context_limit"] == 4096

    second = client.post("/sessions", json={"persona": "socrates-final"}).json()
    assert second["session_id"] != body["session_id"]


def test_unknown_persona_404(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    assert client.post("/sessions", json={"persona": "ghost"}).status_code == 404


def test_turn_flow_and_transcript(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    sid = client.post("/sessions", json={"persona": "socrates-v1"}).json()["session_id"]

    response = client.post(f"/sessions/{sid}/turns", json={"text": "hello there"})
    assert response.status_code == 200
    body = response.json()
    assert body["assistant_segments"] == [{"kind": "text", "body": "first"}]
    assert body["truncated"] is False
    assert body["usage"]["total_tokens"] == (
        body["usage"]["prompt_tokens"] + body["usage"]["completion_tokens"]
    )

    transcript = client.get(f"/sessions/{sid}/transcript").json()
    kinds = [e["kind"] for e in transcript["entries"]]
    assert kinds == ["greeting", "user_turn", "assistant_turn"]
    assert transcript["entries"][0]["seq"] is None


def test_code_selection_turn_matches_wire_order(tmp_path) -> None:
    script = {
        "turns": [
            {"expect": "Tell me what's wrong with this code?", "reply": "Your loop invariant is suspect."}
        ]
    }
    client = make_client(tmp_path, script)
    sid = client.post("/sessions", json={"persona": "socrates-final"}).json()["session_id"]
    response = client.post(
        f"/sessions/{sid}/turns",
        json={
            "text": "Tell me what's wrong with this code?",
            "code_selection": {"body": "   while j < 10:\n     print(i)\n"},
        },
    )
    assert response.status_code == 200
    transcript = client.get(f"/sessions/{sid}/transcript").json()
    user_entry = transcript["entries"][1]
    assert user_entry["segments"][0] == {"kind": "text", "body": "\n"}
    assert user_entry["segments"][1]["kind"] == "code"
    assert "language" not in user_entry["segments"][1]


def test_empty_turn_422(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    sid = client.post("/sessions", json={"persona": "socrates-v1"}).json()["session_id"]
    assert client.post(f"/sessions/{sid}/turns", json={}).status_code == 422


def test_unknown_session_404(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    assert client.post("/sessions/none/turns", json={"text": "x"}).status_code == 404
    assert client.get("/sessions/none/transcript").status_code == 404


def test_retry_marks_superseded_and_keeps_both_attempts(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    sid = client.post("/sessions", json={"persona": "socrates-v1"}).json()["session_id"]
    client.post(f"/sessions/{sid}/turns", json={"text": "q"})
    response = client.post(f"/sessions/{sid}/retry", json={})
    assert response.status_code == 200
    assert response.json()["assistant_segments"][0]["body"] == "second"

    transcript = client.get(f"/sessions/{sid}/transcript").json()
    assistant_entries = [e for e in transcript["entries"] if e["kind"] == "assistant_turn"]
    assert [e["superseded"] for e in assistant_entries] == [True, False]

    prompt = client.get(f"/sessions/{sid}/prompt").json()
    assert "first" not in prompt["text"]
    assert "second" in prompt["text"]


def test_retry_with_nothing_to_retry_409(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    sid = client.post("/sessions", json={"persona": "socrates-v1"}).json()["session_id"]
    assert client.post(f"/sessions/{sid}/retry", json={}).status_code == 409


def test_reset_then_prompt_is_bare_prefix(tmp_path, prefix_v1: str) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    sid = client.post("/sessions", json={"persona": "socrates-v1"}).json()["session_id"]
    client.post(f"/sessions/{sid}/turns", json={"text": "q"})
    before = len(client.get(f"/sessions/{sid}/transcript").json()["entries"])
    assert client.post(f"/sessions/{sid}/reset").json()["ok"] is True
    prompt = client.get(f"/sessions/{sid}/prompt").json()
    assert prompt["text"] == prefix_v1
    assert prompt["included_seqs"] == []
    after = client.get(f"/sessions/{sid}/transcript").json()["entries"]
    assert len(after) == before + 1  # transcript keeps everything


def test_prompt_debug_on_fresh_session_equals_prefix(tmp_path, prefix_v1: str) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    sid = client.post("/sessions", json={"persona": "socrates-v1"}).json()["session_id"]
    assert client.get(f"/sessions/{sid}/prompt").json()["text"] == prefix_v1


def test_backend_failure_returns_502_and_retry_recovers(tmp_path) -> None:
    from test_engine import FailingOnceBackend

    engine = AssistantEngine(backend=FailingOnceBackend("saved"), store=SessionStore(tmp_path))
    client = TestClient(create_app(ServiceConfig(store_dir=tmp_path), engine=engine))
    sid = client.post("/sessions", json={"persona": "socrates-v1"}).json()["session_id"]

    failed = client.post(f"/sessions/{sid}/turns", json={"text": "q"})
    assert failed.status_code == 502
    assert failed.json()["retryable"] is True

    conflict = client.post(f"/sessions/{sid}/turns", json={"text": "again"})
    assert conflict.status_code == 409

    recovered = client.post(f"/sessions/{sid}/retry", json={})
    assert recovered.status_code == 200
    assert recovered.json()["assistant_segments"][0]["body"] == "saved"


def test_sessions_are_isolated(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    a = client.post("/sessions", json={"persona": "socrates-v1"}).json()["session_id"]
    b = client.post("/sessions", json={"persona": "socrates-final"}).json()["session_id"]
    client.post(f"/sessions/{a}/turns", json={"text": "only in a"})
    transcript_b = client.get(f"/sessions/{b}/transcript").json()
    assert len(transcript_b["entries"]) == 1


def test_shared_token_auth(tmp_path) -> None:
    config = ServiceConfig(store_dir=tmp_path, auth_token="hunter2")
    engine = AssistantEngine(
        backend=ScriptedBackend(load_script(SIMPLE_SCRIPT)), store=SessionStore(tmp_path)
    )
    client = TestClient(create_app(config, engine=engine))
    assert client.post("/sessions", json={"persona": "socrates-v1"}).status_code == 401
    ok = client.post(
        "/sessions",
        json={"persona": "socrates-v1"},
        headers={"Authorization": "Bearer hunter2"},
    )
    assert ok.status_code == 201


def test_budget_override_on_create(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    response = client.post(
        "/sessions",
        json={
            "persona": "socrates-v1",
            "budget": {"context_limit": 2048, "generation_reserve": 256, "safety_margin": 64},
        },
    )
    assert response.json()["budget"]["context_limit"] == 2048


def test_invalid_budget_is_422(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    response = client.post(
        "/sessions",
        json={
            "persona": "socrates-v1",
            "budget": {"context_limit": 100, "generation_reserve": 90, "safety_margin": 20},
        },
    )
    assert response.status_code == 422
    # prefix larger than the prompt allowance is equally a config error
    tiny = client.post(
        "/sessions",
        json={
            "persona": "socrates-final",
            "budget": {"context_limit": 300, "generation_reserve": 128, "safety_margin": 32},
        },
    )
    assert tiny.status_code == 422
    assert "prefix" in tiny.json()["detail"]


def test_service_restart_preserves_sessions(tmp_path) -> None:
    client = make_client(tmp_path, SIMPLE_SCRIPT)
    sid = client.post("/sessions", json={"persona": "socrates-v1"}).json()["session_id"]
    client.post(f"/sessions/{sid}/turns", json={"text": "q"})
    prompt_before = client.get(f"/sessions/{sid}/prompt").json()["text"]

    fresh = make_client(tmp_path, SIMPLE_SCRIPT)
    assert fresh.get(f"/sessions/{sid}/prompt").json()["text"] == prompt_before


def test_load_config_env_overrides(tmp_path) -> None:
    config_file = tmp_path / "svc.yaml"
    config_file.write_text(
        "backend: scripted\nstore_dir: /tmp/from-file\nbudget:\n  context_limit: 2048\n"
        "  generation_reserve: 256\n  safety_margin: 64\n",
        encoding="utf-8",
    )
    config = load_config(config_file, env={"SCRIPTCHAT_STORE_DIR": "/tmp/from-env"})
    assert str(config.store_dir) == "/tmp/from-env"
    assert config.backend == "scripted"
    assert config.budget.context_limit == 2048


def test_scripted_backend_requires_script() -> None:
    from scriptchat.service import build_backend

    with pytest.raises(ValueError, match="script"):
        build_backend(ServiceConfig(backend="scripted"))


def test_cors_headers_for_browser_clients(tmp_path) -> None:
    config = ServiceConfig(store_dir=tmp_path, cors_origins=("*",))
    engine = AssistantEngine(
        backend=ScriptedBackend(load_script(SIMPLE_SCRIPT)), store=SessionStore(tmp_path)
    )
    client = TestClient(create_app(config, engine=engine))
    response = client.post(
        "/sessions", json={"persona": "socrates-v1"}, headers={"Origin": "http://localhost:8081"}
    )
    assert response.headers.get("access-control-allow-origin") == "*"

    env_config = load_config(env={"SCRIPTCHAT_CORS_ORIGINS": "http://a.example, http://b.example"})
    assert env_config.cors_origins == ("http://a.example", "http://b.example")
