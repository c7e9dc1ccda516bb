"""Prompt assembly from versioned template files.

Each template lives in ``templates/<name>.v<N>.txt`` and is referenced as
``<name>@<N>``; the id is stored on every node so a run can be replayed with
exactly the wording it used.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from importlib import resources
from string import Template
from typing import Optional

from ..core import DIRECTIVE_OBJECTIVES, Kind, ProblemSpec

TEMPLATE_VERSION = 1
FORMAT_REMINDER = (
    "\n\nYour previous reply could not be used. Follow the requested output format exactly: "
    "{what}."
)


class Purpose(str, enum.Enum):
    INITIAL_CODE = "InitialCode"
    REFINE = "Refine"
    IDEA_GEN = "IdeaGen"
    SUMMARY = "Summary"


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    metadata: dict = field(default_factory=dict, hash=False, compare=False)

    @property
    def purpose(self) -> Purpose:
        return Purpose(self.metadata["purpose"])

    @property
    def template_id(self) -> str:
        return self.metadata.get("template_id", "")

    def with_reminder(self, what: str) -> "PromptBundle":
        return PromptBundle(self.system, self.user + FORMAT_REMINDER.format(what=what),
                            {**self.metadata, "format_reminder": True})


def template_id(name: str, version: int = TEMPLATE_VERSION) -> str:
    return f"{name}@{version}"


@functools.lru_cache(maxsize=None)
def load_template(tid: str) -> Template:
    name, _, version = tid.partition("@")
    text = resources.files(__package__).joinpath("templates", f"{name}.v{version}.txt").read_text()
    return Template(text)


def _render(template: str, **values) -> tuple[str, str]:
    tid = template_id(template)
    return tid, load_template(tid).substitute(**values).strip() + "\n"


def _system() -> str:
    return load_template(template_id("system")).template.strip()


def task_line(spec: ProblemSpec) -> str:
    if spec.task.kind is Kind.GEN:
        return "Task: functional generation; the design is scored by the fraction of test vectors it passes."
    objective = DIRECTIVE_OBJECTIVES[spec.task.directive]
    return (f"Task: PPA optimization at a {spec.clock_period_ns:g} ns clock; the design must stay functionally "
            f"equivalent to the reference. Objective: {objective}.")


def _common(spec: ProblemSpec) -> dict:
    return {"name": spec.name, "top_module": spec.top_module, "task_line": task_line(spec),
            "description": spec.description.strip()}


def _score_text(score: float) -> str:
    return format(score, ".6g")


def initial_prompt(spec: ProblemSpec, budget_info: str = "") -> PromptBundle:
    tid, user = _render("initial_code", **_common(spec))
    return PromptBundle(_system(), user, {"purpose": Purpose.INITIAL_CODE.value, "template_id": tid,
                                          "node_budget_info": budget_info})


def refine_prompt(spec: ProblemSpec, parent_code: str, parent_score: float, feedback: str,
                  budget_info: str = "") -> PromptBundle:
    tid, user = _render("refine", **_common(spec), parent_code=parent_code.rstrip(),
                        score=_score_text(parent_score), feedback=feedback.strip() or "(none)")
    return PromptBundle(_system(), user, {"purpose": Purpose.REFINE.value, "template_id": tid,
                                          "node_budget_info": budget_info})


def idea_prompt(spec: ProblemSpec, prior_ideas: list[str], context: Optional[str] = None) -> PromptBundle:
    context_section = f"\nReference material:\n{context.strip()}\n" if context and context.strip() else ""
    prior_section = ""
    if prior_ideas:
        listed = "\n".join(f"{i}. {text.strip()}" for i, text in enumerate(prior_ideas, 1))
        prior_section = f"\nIdeas already proposed:\n{listed}\n"
    tid, user = _render("idea_gen", **_common(spec), context_section=context_section, prior_section=prior_section)
    return PromptBundle(_system(), user, {"purpose": Purpose.IDEA_GEN.value, "template_id": tid,
                                          "idea_index": len(prior_ideas) + 1})


def idea_code_prompt(spec: ProblemSpec, idea: str, budget_info: str = "") -> PromptBundle:
    tid, user = _render("idea_code", **_common(spec), idea=idea.strip())
    return PromptBundle(_system(), user, {"purpose": Purpose.INITIAL_CODE.value, "template_id": tid,
                                          "node_budget_info": budget_info})


def edit_prompt(spec: ProblemSpec, idea: str, parent_code: str, parent_score: float, feedback: str,
                budget_info: str = "") -> PromptBundle:
    tid, user = _render("refine_edit", **_common(spec), idea=idea.strip(), parent_code=parent_code.rstrip(),
                        score=_score_text(parent_score), feedback=feedback.strip() or "(none)")
    return PromptBundle(_system(), user, {"purpose": Purpose.REFINE.value, "template_id": tid,
                                          "node_budget_info": budget_info, "edit_mode": True})


def summary_prompt(code: str) -> PromptBundle:
    tid, user = _render("summary", code=code.rstrip())
    return PromptBundle(_system(), user, {"purpose": Purpose.SUMMARY.value, "template_id": tid})
