"""The contract between search strategies and the run loop."""

from __future__ import annotations

from typing import Callable, Optional, Protocol, TypeVar

from ..core import Node, ProblemSpec
from ..llm.prompts import PromptBundle

T = TypeVar("T")


class Engine(Protocol):
    """What a strategy may ask of the orchestrator.

    The engine owns the budget, the archive and persistence; strategies only
    decide which parent to extend and how to prompt for the child.
    """

    spec: ProblemSpec
    nodes: list[Node]  # archive in creation order, including resumed nodes
    last_reply: str  # raw text of the most recent model reply

    def should_stop(self) -> bool:
        """True once the budget is spent or a generation task is solved."""

    def budget_info(self) -> str:
        """Human-readable budget position, e.g. ``node 7 of 300``."""

    def ask(self, bundle: PromptBundle, parse: Callable[[str], T], reminder: str = ...) -> T:
        """Model call under the retry policy; raises MalformedOutputError / RefusalError when exhausted."""

    def generate(self, bundle: PromptBundle, parent: Optional[Node], chain: Optional[int] = None) -> Node:
        """Ask for full code, evaluate it and record the node (penalty node if no code came back)."""

    def make_node(self, code: str, parent: Optional[Node], template_id: str, chain: Optional[int] = None) -> Node:
        """Evaluate ``code`` and record it as the next node."""

    def penalty_node(self, code: str, parent: Optional[Node], template_id: str, reason: str,
                     chain: Optional[int] = None) -> Node:
        """Record a node that could not be evaluated, scored at the penalty."""

    def transcript(self, record: dict) -> None:
        """Append one record to the strategy's JSONL transcript."""

    def transcript_records(self) -> list[dict]:
        """Records written so far (non-empty only when resuming)."""


class Strategy(Protocol):
    name: str

    def run(self, engine: Engine) -> None: ...

    def snapshot(self) -> Optional[dict]:
        """JSON-able search state written next to the archive, if any."""
