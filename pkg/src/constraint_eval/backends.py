"""Model backends: chat-completion adapters and a scripted mock.

Every backend exposes ``complete(system_prompt, user_prompt, *, temperature,
seed, max_tokens, context=None)`` returning a :class:`Completion`.  Transport
problems raise :class:`BackendError`; the runner decides whether to retry.

API keys come from environment variables only:

* ``openai`` kind: ``OPENAI_API_KEY`` by default (any OpenAI-compatible
  endpoint, including Gemini's, via ``base_url`` and ``api_key_env``)
* ``anthropic`` kind: ``ANTHROPIC_API_KEY`` by default
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Protocol

import httpx

MOCK_SCHEMA_VERSION = 1


class BackendError(RuntimeError):
    """Transport-level failure (network, HTTP status, malformed payload)."""


@dataclass(frozen=True)
class Completion:
    text: str
    finish_reason: Optional[str] = None


class Backend(Protocol):
    def complete(
        self,
        system_prompt: str,
        user_prompt: str,
        *,
        temperature: float,
        seed: Optional[int],
        max_tokens: int,
        context: Optional[Mapping[str, Any]] = None,
    ) -> Completion: ...


def _api_key(env_name: str) -> str:
    key = os.environ.get(env_name)
    if not key:
        raise BackendError(f"environment variable {env_name} is not set")
    return key


class OpenAIChatBackend:
    """OpenAI-style ``POST {base_url}/chat/completions``."""

    def __init__(
        self,
        model: str,
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 120.0,
        send_seed: bool = True,
        client: Optional[httpx.Client] = None,
    ):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.send_seed = send_seed
        self._client = client or httpx.Client(timeout=timeout)

    def request_body(self, system_prompt, user_prompt, temperature, seed, max_tokens) -> dict:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        if self.send_seed and seed is not None:
            body["seed"] = seed
        return body

    def complete(self, system_prompt, user_prompt, *, temperature, seed, max_tokens, context=None):
        body = self.request_body(system_prompt, user_prompt, temperature, seed, max_tokens)
        headers = {"Authorization": f"Bearer {_api_key(self.api_key_env)}"}
        try:
            resp = self._client.post(f"{self.base_url}/chat/completions", json=body, headers=headers)
        except httpx.HTTPError as exc:
            raise BackendError(f"{type(exc).__name__}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            choice = resp.json()["choices"][0]
            text = choice["message"].get("content") or ""
            return Completion(text, choice.get("finish_reason"))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed response payload: {exc}") from exc


class AnthropicBackend:
    """Anthropic ``POST {base_url}/messages``.  The API takes no seed."""

    API_VERSION = "2023-06-01"

    def __init__(
        self,
        model: str,
        base_url: str = "https://api.anthropic.com/v1",
        api_key_env: str = "ANTHROPIC_API_KEY",
        timeout: float = 120.0,
        client: Optional[httpx.Client] = None,
    ):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def request_body(self, system_prompt, user_prompt, temperature, max_tokens) -> dict:
        return {
            "model": self.model,
            "system": system_prompt,
            "messages": [{"role": "user", "content": user_prompt}],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }

    def complete(self, system_prompt, user_prompt, *, temperature, seed, max_tokens, context=None):
        body = self.request_body(system_prompt, user_prompt, temperature, max_tokens)
        headers = {
            "x-api-key": _api_key(self.api_key_env),
            "anthropic-version": self.API_VERSION,
        }
        try:
            resp = self._client.post(f"{self.base_url}/messages", json=body, headers=headers)
        except httpx.HTTPError as exc:
            raise BackendError(f"{type(exc).__name__}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            text = "".join(b.get("text", "") for b in payload["content"] if b.get("type") == "text")
            return Completion(text, payload.get("stop_reason"))
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed response payload: {exc}") from exc


def mock_key(item_id: str, condition: str, trial_index: int, attempt: int) -> str:
    return f"{item_id}|{condition}|{trial_index}|{attempt}"


class MockBackend:
    """Scripted responses keyed by (item_id, condition, trial_index, attempt).

    Script document::

        {"schema_version": 1, "latency_s": 0.0, "default": null,
         "responses": [{"item_id": "syll-001", "condition": "e_prime",
                        "trial_index": 0, "attempt": 0, "text": "...",
                        "finish_reason": "stop", "error": false}]}

    An entry with ``"error": true`` raises :class:`BackendError`.  Keys with
    no entry fall back to ``default`` (an entry without key fields) or raise.
    """

    def __init__(self, script: Mapping[str, Any]):
        if script.get("schema_version") != MOCK_SCHEMA_VERSION:
            raise ValueError(f"unsupported mock schema_version {script.get('schema_version')!r}")
        self.latency_s = float(script.get("latency_s", 0.0))
        self.default = script.get("default")
        self.responses: dict[str, Mapping[str, Any]] = {}
        for entry in script.get("responses", []):
            key = mock_key(entry["item_id"], entry["condition"], int(entry["trial_index"]),
                           int(entry.get("attempt", 0)))
            if key in self.responses:
                raise ValueError(f"duplicate mock entry {key}")
            self.responses[key] = entry

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBackend":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, system_prompt, user_prompt, *, temperature, seed, max_tokens, context=None):
        if context is None:
            raise BackendError("mock backend needs trial context")
        key = mock_key(context["item_id"], str(context["condition"]),
                       int(context["trial_index"]), int(context["attempt"]))
        entry = self.responses.get(key, self.default)
        if self.latency_s:
            time.sleep(self.latency_s)
        if entry is None:
            raise BackendError(f"no scripted response for {key}")
        if entry.get("error"):
            raise BackendError(f"scripted failure for {key}")
        return Completion(entry.get("text", ""), entry.get("finish_reason", "stop"))


def build_backend(definition: Mapping[str, Any], base_dir: Path = Path(".")) -> Backend:
    """Instantiate a backend from a config entry (see :mod:`constraint_eval.config`)."""
    kind = definition.get("backend")
    if kind == "mock":
        return MockBackend.from_file(base_dir / definition["script"])
    model = definition.get("model", definition.get("id"))
    if kind == "openai":
        kwargs = {k: definition[k] for k in ("base_url", "api_key_env", "timeout", "send_seed")
                  if k in definition}
        return OpenAIChatBackend(model, **kwargs)
    if kind == "anthropic":
        kwargs = {k: definition[k] for k in ("base_url", "api_key_env", "timeout")
                  if k in definition}
        return AnthropicBackend(model, **kwargs)
    raise ValueError(f"unknown backend kind {kind!r}")
