"""Chat-completion client plus the shared error taxonomy and retry policy."""

from __future__ import annotations

import logging
import os
import re
import threading
from dataclasses import dataclass
from typing import Callable, Optional, Protocol, TypeVar

import httpx

from .prompts import PromptBundle

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.6
TRANSPORT_RETRIES = 2
FORMAT_RETRIES = 1

T = TypeVar("T")


class LlmError(RuntimeError):
    pass


class TransportError(LlmError):
    """Network trouble or a 5xx/429 from the endpoint; worth retrying."""


class AuthError(LlmError):
    """Credentials rejected; retrying cannot help."""


class RefusalError(LlmError):
    """The model answered but declined to produce content."""


class MalformedOutputError(LlmError):
    """The reply did not contain what the caller asked for."""


class NoFixtureError(LlmError):
    pass


@dataclass(frozen=True)
class Completion:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


class LlmClient(Protocol):
    def complete(self, bundle: PromptBundle) -> Completion: ...


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str = "http://localhost:8000/v1"
    model_name: str = "default"
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = 4096
    api_key_env: str = "EVOLVE_API_KEY"
    timeout_s: float = 600.0
    max_in_flight: int = 4


_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.S)


def extract_code(response: str) -> str:
    """Last fenced code block of ``response``, or the whole text if unfenced."""
    blocks = _FENCE.findall(response or "")
    code = blocks[-1] if blocks else (response or "")
    code = code.strip("\n")
    if not code.strip():
        raise MalformedOutputError("response contains no code")
    return code


class RemoteClient:
    """POSTs to ``{endpoint}/chat/completions`` in the common OpenAI-style schema."""

    def __init__(self, config: LlmConfig, transport: Optional[httpx.BaseTransport] = None):
        self.config = config
        self._slots = threading.BoundedSemaphore(max(1, config.max_in_flight))
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(timeout=config.timeout_s, headers=headers, transport=transport)

    def close(self):
        self._http.close()

    def payload(self, bundle: PromptBundle) -> dict:
        return {
            "model": self.config.model_name,
            "messages": [{"role": "system", "content": bundle.system}, {"role": "user", "content": bundle.user}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }

    def complete(self, bundle: PromptBundle) -> Completion:
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        with self._slots:
            try:
                resp = self._http.post(url, json=self.payload(bundle))
            except httpx.HTTPError as exc:
                raise TransportError(f"{type(exc).__name__}: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code}); check ${self.config.api_key_env}")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise LlmError(f"HTTP {resp.status_code}: {resp.text[:500]}")
        try:
            body = resp.json()
            choice = body["choices"][0]
            message = choice.get("message") or {}
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedOutputError(f"unexpected response body: {resp.text[:200]}") from exc
        if message.get("refusal") or choice.get("finish_reason") == "content_filter":
            raise RefusalError(message.get("refusal") or "response blocked by content filter")
        usage = body.get("usage") or {}
        return Completion(message.get("content") or "", int(usage.get("prompt_tokens", 0)),
                          int(usage.get("completion_tokens", 0)))


def complete_with_retry(
    client: LlmClient,
    bundle: PromptBundle,
    parse: Callable[[str], T],
    reminder: str = "reply with a single fenced code block",
    on_usage: Optional[Callable[[PromptBundle, Completion], None]] = None,
) -> tuple[T, Completion]:
    """Call the model and ``parse`` its reply under the gateway's retry policy.

    Transport errors get two more attempts with the same prompt. Output that
    ``parse`` rejects (or a refusal) gets one more attempt with a format
    reminder appended. Every call's usage is reported through ``on_usage``,
    including failed ones.
    """
    prompt = bundle
    for fmt_attempt in range(FORMAT_RETRIES + 1):
        for attempt in range(TRANSPORT_RETRIES + 1):
            try:
                completion = client.complete(prompt)
                break
            except TransportError as exc:
                if attempt == TRANSPORT_RETRIES:
                    raise
                log.warning("LLM transport error (attempt %d): %s", attempt + 1, exc)
            except RefusalError:
                if fmt_attempt == FORMAT_RETRIES:
                    raise
                completion = None
                break
        if completion is not None:
            if on_usage is not None:
                on_usage(prompt, completion)
            try:
                return parse(completion.text), completion
            except MalformedOutputError:
                if fmt_attempt == FORMAT_RETRIES:
                    raise
        log.info("unusable LLM reply for %s; retrying with a format reminder", bundle.metadata.get("purpose"))
        prompt = bundle.with_reminder(reminder)
    raise AssertionError("unreachable")
