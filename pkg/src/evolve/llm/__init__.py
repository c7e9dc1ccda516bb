"""Language-model gateway: prompt assembly, remote client, test doubles."""

from .client import (
    AuthError,
    Completion,
    LlmClient,
    LlmConfig,
    LlmError,
    MalformedOutputError,
    NoFixtureError,
    RefusalError,
    RemoteClient,
    TransportError,
    complete_with_retry,
    extract_code,
)
from .mock import CallbackMock, MutationMock, ReplayMock, prompt_hash
from .prompts import PromptBundle, Purpose

__all__ = [
    "AuthError", "Completion", "LlmClient", "LlmConfig", "LlmError", "MalformedOutputError", "NoFixtureError",
    "RefusalError", "RemoteClient", "TransportError", "complete_with_retry", "extract_code", "CallbackMock",
    "MutationMock", "ReplayMock", "prompt_hash", "PromptBundle", "Purpose",
]
