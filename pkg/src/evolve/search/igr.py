"""Idea-guided refinement: k idea-seeded chains, each refined by diff edits."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

from ..core import Kind, Node
from ..llm.client import MalformedOutputError, RefusalError
from ..llm.prompts import edit_prompt, idea_code_prompt, idea_prompt, refine_prompt
from .edits import EditError, apply_edits, parse_edit_script

log = logging.getLogger(__name__)

DEFAULT_K = 60
DEFAULT_M = 5
EDIT_REMINDER = "reply with one or more <<<SEARCH / ==== / >>>REPLACE blocks"


class ChainStatus(str, enum.Enum):
    ACTIVE = "active"
    EXHAUSTED = "exhausted"
    SOLVED = "solved"


@dataclass(frozen=True)
class Idea:
    index: int
    text: str
    context_used: Optional[str] = None


@dataclass
class Chain:
    idea: Idea
    nodes: list[Node] = field(default_factory=list)
    status: ChainStatus = ChainStatus.ACTIVE

    @property
    def index(self) -> int:
        return self.idea.index

    def append(self, node: Node, m: int, is_gen: bool):
        if self.nodes and node.parent_id != self.nodes[-1].id:
            raise ValueError("chain nodes must extend the previous node")
        self.nodes.append(node)
        if is_gen and node.score >= 1.0:
            self.status = ChainStatus.SOLVED
        elif len(self.nodes) >= m:
            self.status = ChainStatus.EXHAUSTED


def _idea_text(reply: str) -> str:
    text = reply.strip()
    if not text:
        raise MalformedOutputError("empty idea")
    return text


def generate_ideas(engine, k: int, context: Optional[str] = None, start: Optional[list[Idea]] = None) -> list[Idea]:
    """Ask for k ideas one at a time, each prompt listing every earlier idea.

    An idea the model cannot produce after the retry policy is skipped and
    the gap logged; later prompts simply list one idea fewer.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    ideas = list(start or [])
    for i in range(len(ideas) + 1, k + 1):
        if engine.should_stop():
            break
        bundle = idea_prompt(engine.spec, [x.text for x in ideas], context)
        try:
            text = engine.ask(bundle, _idea_text, reminder="reply with one short paragraph describing the idea")
        except (MalformedOutputError, RefusalError) as exc:
            log.warning("idea %d skipped: %s", i, exc)
            engine.transcript({"event": "idea-gap", "attempted": i, "error": str(exc)})
            continue
        idea = Idea(len(ideas) + 1, text, context or None)
        ideas.append(idea)
        engine.transcript({"event": "idea", "chain": idea.index, "prompt": bundle.user, "response": text,
                           "context_used": idea.context_used})
    return ideas


def refine_step(engine, chain: Chain) -> Node:
    """One refinement of ``chain``'s last node through diff edits.

    An edit that cannot be applied is reported back once; a second failure
    falls back to asking for the whole file.
    """
    spec = engine.spec
    parent = chain.nodes[-1]
    feedback = parent.feedback.render()
    error = None
    for attempt in range(2):
        note = f"\n\nYour previous edit could not be applied: {error}" if error else ""
        bundle = edit_prompt(spec, chain.idea.text, parent.code, parent.score, feedback + note, engine.budget_info())
        try:
            reply = engine.ask(bundle, lambda t: t, reminder=EDIT_REMINDER)
            script = parse_edit_script(reply)
            if not script.hunks:
                raise EditError("reply contained no edit blocks")
            code = apply_edits(parent.code, script)
        except (EditError, MalformedOutputError, RefusalError) as exc:
            error = str(exc)
            engine.transcript({"event": "edit-error", "chain": chain.index, "attempt": attempt + 1,
                               "prompt": bundle.user, "error": error})
            continue
        node = engine.make_node(code, parent, bundle.template_id, chain.index)
        engine.transcript({"event": "step", "chain": chain.index, "node": node.id, "prompt": bundle.user,
                           "response": reply, "score": node.score})
        return node
    bundle = refine_prompt(spec, parent.code, parent.score, feedback + f"\n\nEdit failed: {error}",
                           engine.budget_info())
    node = engine.generate(bundle, parent, chain.index)
    engine.transcript({"event": "step", "chain": chain.index, "node": node.id, "prompt": bundle.user,
                       "response": engine.last_reply, "score": node.score, "fallback": "full-file"})
    return node


class IgrStrategy:
    name = "igr"

    def __init__(self, k: int = DEFAULT_K, m: int = DEFAULT_M):
        if k < 1 or m < 1:
            raise ValueError("k and m must be positive")
        self.k, self.m = k, m
        self.chains: list[Chain] = []

    def _resume(self, engine) -> list[Idea]:
        ideas = [Idea(r["chain"], r["response"], r.get("context_used"))
                 for r in engine.transcript_records() if r.get("event") == "idea"]
        by_index = {i.index: Chain(i) for i in ideas}
        is_gen = engine.spec.task.kind is Kind.GEN
        for n in engine.nodes:
            by_index[n.chain].append(n, self.m, is_gen)
        self.chains = [by_index[i.index] for i in ideas]
        return ideas

    def run(self, engine) -> None:
        ideas = self._resume(engine) if engine.nodes or engine.transcript_records() else []
        ideas = generate_ideas(engine, self.k, engine.spec.context or None, ideas)
        known = {c.index for c in self.chains}
        self.chains += [Chain(i) for i in ideas if i.index not in known]
        is_gen = engine.spec.task.kind is Kind.GEN

        # Round-robin: round 1 seeds every chain, later rounds refine each
        # active chain by one node.
        while not engine.should_stop():
            active = [c for c in self.chains if c.status is ChainStatus.ACTIVE]
            if not active:
                break
            depth = min(len(c.nodes) for c in active)
            for chain in active:
                if len(chain.nodes) != depth:
                    continue
                if engine.should_stop():
                    return
                if not chain.nodes:
                    bundle = idea_code_prompt(engine.spec, chain.idea.text, engine.budget_info())
                    node = engine.generate(bundle, None, chain.index)
                    engine.transcript({"event": "step", "chain": chain.index, "node": node.id,
                                       "prompt": bundle.user, "response": engine.last_reply, "score": node.score})
                else:
                    node = refine_step(engine, chain)
                chain.append(node, self.m, is_gen)

    def snapshot(self) -> Optional[dict]:
        return {
            "k": self.k, "m": self.m,
            "chains": [{"chain": c.index, "idea": c.idea.text, "status": c.status.value,
                        "nodes": [n.id for n in c.nodes]} for c in self.chains],
        }
