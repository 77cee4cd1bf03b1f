"""LLM backend contract, registry, and the deterministic mock backend.

Credentials are never read from config files: HTTP backends take their
API key from an environment variable (documented per backend).  The mock
backend replays a scripted scenario file and is what every deterministic
test runs against.

Mock scenario file (JSON):

    {
      "responses": [
        {"text": "..."},                       // served in order
        {"text": "...", "template": "FIX_PRSE_ERR"},  // only for this template
        {"error": "timeout"},                  // scripted transport failure
        {"error": "unavailable"},
        {"error": "quota"}
      ]
    }

Entries with a "template" key are only consumed by requests whose prompt
tags carry that fix-template id; untagged entries match any request.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

from .errors import BackendError, BackendTimeout, BackendUnavailable, QuotaExceeded
from .prompting import Prompt
from .tokens import count_tokens


@dataclass(frozen=True)
class ModelConfig:
    backend_id: str
    model_name: str
    temperature: float = 0.5
    top_p: Optional[float] = None  # None = backend default
    max_response_tokens: int = 4096
    request_timeout: float = 120.0

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be > 0")
        if self.max_response_tokens < 1:
            raise ValueError("max_response_tokens must be >= 1")


@dataclass(frozen=True)
class LlmExchange:
    prompt: Prompt
    response_text: str
    prompt_tokens: int
    response_tokens: int
    latency: float


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_seconds: float = 0.5


class Backend(Protocol):
    def generate(self, prompt: Prompt, config: ModelConfig) -> str: ...


class BackendRegistry:
    """Thread-safe id -> backend map; backends must tolerate concurrent use."""

    def __init__(self):
        self._backends = {}
        self._lock = threading.Lock()

    def register(self, backend_id: str, backend: Backend) -> None:
        with self._lock:
            self._backends[backend_id] = backend

    def get(self, backend_id: str) -> Backend:
        with self._lock:
            try:
                return self._backends[backend_id]
            except KeyError:
                raise BackendUnavailable(f"no backend registered for '{backend_id}'") from None


DEFAULT_REGISTRY = BackendRegistry()


def complete(p: Prompt, m: ModelConfig,
             registry: BackendRegistry = DEFAULT_REGISTRY,
             retry: RetryPolicy = RetryPolicy()) -> LlmExchange:
    """Send a prompt, retrying transient transport failures with backoff.

    QuotaExceeded and content-level errors are never retried.
    """
    backend = registry.get(m.backend_id)
    attempt = 0
    while True:
        attempt += 1
        start = time.monotonic()
        try:
            text = backend.generate(p, m)
        except (BackendTimeout, BackendUnavailable):
            if attempt >= retry.max_attempts:
                raise
            if retry.backoff_seconds:
                time.sleep(retry.backoff_seconds * (2 ** (attempt - 1)))
            continue
        latency = time.monotonic() - start
        return LlmExchange(
            prompt=p,
            response_text=text,
            prompt_tokens=count_tokens(p.system_role) + count_tokens(p.user_message),
            response_tokens=count_tokens(text),
            latency=latency,
        )


class MockBackend:
    """Replays a scripted scenario; see the module docstring for the format."""

    def __init__(self, scenario: dict):
        self._responses = list(scenario.get("responses", []))
        self._served = [False] * len(self._responses)
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path) -> "MockBackend":
        return cls(json.loads(Path(path).read_text()))

    def reset(self) -> None:
        with self._lock:
            self._served = [False] * len(self._responses)

    def generate(self, prompt: Prompt, config: ModelConfig) -> str:
        template = prompt.tags.get("template")
        with self._lock:
            for i, entry in enumerate(self._responses):
                if self._served[i]:
                    continue
                want = entry.get("template")
                if want is not None and want != template:
                    continue
                self._served[i] = True
                if "error" in entry:
                    kind = entry["error"]
                    if kind == "timeout":
                        raise BackendTimeout("scripted timeout")
                    if kind == "unavailable":
                        raise BackendUnavailable("scripted unavailability")
                    if kind == "quota":
                        raise QuotaExceeded("scripted quota exhaustion")
                    raise BackendError(f"scripted error: {kind}")
                return entry["text"]
        raise BackendUnavailable("mock scenario exhausted")


class OpenAiCompatBackend:
    """Minimal chat-completions client for OpenAI-compatible servers.

    Credentials: DRIVERGEN_API_KEY (required), DRIVERGEN_API_BASE
    (default https://api.openai.com/v1).
    """

    def __init__(self, api_base: Optional[str] = None):
        self.api_base = api_base or os.environ.get(
            "DRIVERGEN_API_BASE", "https://api.openai.com/v1"
        )

    def generate(self, prompt: Prompt, config: ModelConfig) -> str:
        import requests

        key = os.environ.get("DRIVERGEN_API_KEY")
        if not key:
            raise BackendUnavailable("DRIVERGEN_API_KEY is not set")
        payload = {
            "model": config.model_name,
            "temperature": config.temperature,
            "max_tokens": config.max_response_tokens,
            "messages": [
                {"role": "system", "content": prompt.system_role},
                {"role": "user", "content": prompt.user_message},
            ],
        }
        if config.top_p is not None:
            payload["top_p"] = config.top_p
        try:
            resp = requests.post(
                f"{self.api_base}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {key}"},
                timeout=config.request_timeout,
            )
        except requests.Timeout as e:
            raise BackendTimeout(str(e)) from None
        except requests.ConnectionError as e:
            raise BackendUnavailable(str(e)) from None
        if resp.status_code == 429:
            raise QuotaExceeded(resp.text)
        if resp.status_code >= 500:
            raise BackendUnavailable(resp.text)
        if resp.status_code != 200:
            raise BackendError(resp.text)
        return resp.json()["choices"][0]["message"]["content"]
