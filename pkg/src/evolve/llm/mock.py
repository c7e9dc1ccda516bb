"""Deterministic stand-ins for a language model."""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
import threading
from pathlib import Path
from typing import Callable, Optional, Union

from .client import Completion, NoFixtureError
from .prompts import PromptBundle, Purpose

CANNED_RESPONSE = "```verilog\n// no fixture for this prompt\n```"

_PARENT_BLOCK = re.compile(r"```verilog\n(.*?)```", re.S)
_BITS = re.compile(r"^bits = ([01]+)$", re.M)


def prompt_hash(bundle: PromptBundle) -> str:
    """Stable key over the full prompt text (system and user parts)."""
    h = hashlib.sha256()
    h.update(bundle.system.encode())
    h.update(b"\0")
    h.update(bundle.user.encode())
    return h.hexdigest()


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


class _Recording:
    def __init__(self):
        self.calls: list[tuple[PromptBundle, Completion]] = []
        self._lock = threading.Lock()

    def _log(self, bundle: PromptBundle, completion: Completion) -> Completion:
        with self._lock:
            self.calls.append((bundle, completion))
        return completion


class ReplayMock(_Recording):
    """Replays fixture responses keyed by :func:`prompt_hash`.

    Fixtures map a hash to ``{"response", "prompt_tokens", "completion_tokens"}``.
    In strict mode an unknown prompt is an error; lenient mode answers with a
    canned reply so fuzzers can run without a complete fixture set.
    """

    def __init__(self, fixtures: Union[dict, str, Path, None] = None, strict: bool = True,
                 canned: str = CANNED_RESPONSE):
        super().__init__()
        if isinstance(fixtures, (str, Path)):
            fixtures = json.loads(Path(fixtures).read_text())
        self.fixtures: dict = dict(fixtures or {})
        self.strict = strict
        self.canned = canned

    def add(self, bundle: PromptBundle, response: str, prompt_tokens: Optional[int] = None,
            completion_tokens: Optional[int] = None) -> str:
        key = prompt_hash(bundle)
        self.fixtures[key] = {
            "response": response,
            "prompt_tokens": estimate_tokens(bundle.system + bundle.user) if prompt_tokens is None else prompt_tokens,
            "completion_tokens": estimate_tokens(response) if completion_tokens is None else completion_tokens,
        }
        return key

    def save(self, path: Union[str, Path]):
        Path(path).write_text(json.dumps(self.fixtures, indent=1, sort_keys=True) + "\n")

    def complete(self, bundle: PromptBundle) -> Completion:
        key = prompt_hash(bundle)
        entry = self.fixtures.get(key)
        if entry is None:
            if self.strict:
                raise NoFixtureError(f"no fixture for prompt {key[:12]} ({bundle.metadata.get('purpose')})")
            return self._log(bundle, Completion(self.canned, 0, 0))
        return self._log(bundle, Completion(entry["response"], int(entry.get("prompt_tokens", 0)),
                                            int(entry.get("completion_tokens", 0))))


class CallbackMock(_Recording):
    """Answers with ``fn(bundle)``; token counts are estimated from text length."""

    def __init__(self, fn: Callable[[PromptBundle], str]):
        super().__init__()
        self.fn = fn

    def complete(self, bundle: PromptBundle) -> Completion:
        text = self.fn(bundle)
        return self._log(bundle, Completion(text, estimate_tokens(bundle.system + bundle.user),
                                            estimate_tokens(text)))


class MutationMock(_Recording):
    """A model for the synthetic bit-string landscape.

    Seed prompts get a uniformly random bit string; refinement prompts get the
    parent's string with one randomly chosen bit flipped, as full code or as a
    SEARCH/REPLACE edit depending on what the prompt asks for. Everything is
    drawn from one seeded generator, so a run is reproducible call for call.
    """

    def __init__(self, seed: int = 0, width: int = 8):
        super().__init__()
        self.rng = random.Random(f"mutation:{seed}")
        self.width = width
        self._lock2 = threading.Lock()

    def _random_bits(self) -> str:
        return format(self.rng.getrandbits(self.width), f"0{self.width}b")

    def _respond(self, bundle: PromptBundle) -> str:
        purpose = bundle.purpose
        if purpose is Purpose.IDEA_GEN:
            idx = bundle.metadata.get("idea_index", 0)
            return f"Idea {idx}: start from pattern {self._random_bits()} and adjust one bit per step."
        if purpose is Purpose.SUMMARY:
            block = _BITS.search(bundle.user)
            ones = block.group(1).count("1") if block else 0
            return f"A {self.width}-bit candidate vector with {ones} bits set."
        if purpose is Purpose.INITIAL_CODE:
            return f"```verilog\nbits = {self._random_bits()}\n```"
        parents = _PARENT_BLOCK.findall(bundle.user)
        found = _BITS.search(parents[0]) if parents else None
        if found is None or len(found.group(1)) != self.width:
            return f"```verilog\nbits = {self._random_bits()}\n```"
        old = found.group(1)
        i = self.rng.randrange(self.width)
        new = old[:i] + ("1" if old[i] == "0" else "0") + old[i + 1:]
        if bundle.metadata.get("edit_mode"):
            return f"<<<SEARCH\nbits = {old}\n====\nbits = {new}\n>>>REPLACE\n"
        return f"```verilog\nbits = {new}\n```"

    def complete(self, bundle: PromptBundle) -> Completion:
        with self._lock2:
            text = self._respond(bundle)
        return self._log(bundle, Completion(text, estimate_tokens(bundle.system + bundle.user),
                                            estimate_tokens(text)))
