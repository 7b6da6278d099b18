import json

import httpx
import pytest

from constraint_eval.backends import (
    AnthropicBackend,
    BackendError,
    MockBackend,
    OpenAIChatBackend,
    build_backend,
)


def _client(handler):
    return httpx.Client(transport=httpx.MockTransport(handler))


def test_openai_request_and_response(monkeypatch):
    monkeypatch.setenv("TEST_KEY", "sk-test")
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"choices": [
            {"message": {"content": "**B**"}, "finish_reason": "stop"}]})

    be = OpenAIChatBackend("gpt-x", base_url="https://example.test/v1/", api_key_env="TEST_KEY",
                           client=_client(handler))
    out = be.complete("sys", "user", temperature=0.7, seed=123, max_tokens=2048)
    assert out.text == "**B**" and out.finish_reason == "stop"
    assert seen["url"] == "https://example.test/v1/chat/completions"
    assert seen["auth"] == "Bearer sk-test"
    body = seen["body"]
    assert body["messages"][0] == {"role": "system", "content": "sys"}
    assert (body["temperature"], body["max_tokens"], body["seed"]) == (0.7, 2048, 123)


def test_openai_seed_can_be_withheld(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "k")
    be = OpenAIChatBackend("m", send_seed=False, client=_client(lambda r: None))
    assert "seed" not in be.request_body("s", "u", 0.0, 5, 10)


def test_anthropic_request_and_response(monkeypatch):
    monkeypatch.setenv("ANTHROPIC_API_KEY", "ak")
    seen = {}

    def handler(request):
        seen["headers"] = request.headers
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"content": [{"type": "text", "text": "VALID"}],
                                         "stop_reason": "end_turn"})

    be = AnthropicBackend("model-x", client=_client(handler))
    out = be.complete("sys", "user", temperature=0.0, seed=1, max_tokens=2048)
    assert out.text == "VALID" and out.finish_reason == "end_turn"
    assert seen["headers"]["x-api-key"] == "ak"
    assert seen["headers"]["anthropic-version"] == "2023-06-01"
    assert seen["body"]["system"] == "sys"
    assert "seed" not in seen["body"]


@pytest.mark.parametrize("response", [
    httpx.Response(500, text="boom"),
    httpx.Response(200, json={"unexpected": True}),
])
def test_http_failures_raise_backend_error(monkeypatch, response):
    monkeypatch.setenv("OPENAI_API_KEY", "k")
    be = OpenAIChatBackend("m", client=_client(lambda r: response))
    with pytest.raises(BackendError):
        be.complete("s", "u", temperature=0.0, seed=None, max_tokens=10)


def test_network_error_raises_backend_error(monkeypatch):
    monkeypatch.setenv("OPENAI_API_KEY", "k")

    def handler(request):
        raise httpx.ConnectError("refused", request=request)

    be = OpenAIChatBackend("m", client=_client(handler))
    with pytest.raises(BackendError, match="ConnectError"):
        be.complete("s", "u", temperature=0.0, seed=None, max_tokens=10)


def test_missing_key_raises(monkeypatch):
    monkeypatch.delenv("ANTHROPIC_API_KEY", raising=False)
    be = AnthropicBackend("m", client=_client(lambda r: httpx.Response(200)))
    with pytest.raises(BackendError, match="ANTHROPIC_API_KEY"):
        be.complete("s", "u", temperature=0.0, seed=None, max_tokens=10)


def _ctx(attempt=0):
    return {"item_id": "i1", "condition": "e_prime", "trial_index": 2, "attempt": attempt}


def test_mock_lookup_and_errors():
    mock = MockBackend({"schema_version": 1, "responses": [
        {"item_id": "i1", "condition": "e_prime", "trial_index": 2, "attempt": 0, "text": "hello"},
        {"item_id": "i1", "condition": "e_prime", "trial_index": 2, "attempt": 1, "error": True},
    ]})
    assert mock.complete("s", "u", temperature=0, seed=0, max_tokens=1, context=_ctx()).text == "hello"
    with pytest.raises(BackendError, match="scripted failure"):
        mock.complete("s", "u", temperature=0, seed=0, max_tokens=1, context=_ctx(1))
    with pytest.raises(BackendError, match="no scripted response"):
        mock.complete("s", "u", temperature=0, seed=0, max_tokens=1,
                      context={**_ctx(), "trial_index": 3})


def test_mock_default_and_validation():
    mock = MockBackend({"schema_version": 1, "default": {"text": "fallback"}, "responses": []})
    assert mock.complete("s", "u", temperature=0, seed=0, max_tokens=1, context=_ctx()).text == "fallback"
    with pytest.raises(ValueError):
        MockBackend({"schema_version": 2})
    entry = {"item_id": "i1", "condition": "control", "trial_index": 0, "text": "x"}
    with pytest.raises(ValueError, match="duplicate"):
        MockBackend({"schema_version": 1, "responses": [entry, entry]})


def test_build_backend_kinds(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"schema_version": 1, "responses": []}))
    assert isinstance(build_backend({"id": "a", "backend": "mock", "script": "m.json"}, tmp_path),
                      MockBackend)
    be = build_backend({"id": "a", "backend": "openai", "model": "gpt", "base_url": "http://x/v1"})
    assert isinstance(be, OpenAIChatBackend) and be.model == "gpt"
    assert isinstance(build_backend({"id": "c", "backend": "anthropic"}), AnthropicBackend)
    with pytest.raises(ValueError):
        build_backend({"id": "z", "backend": "carrier-pigeon"})
