"""Domain objects shared by the evaluator and both search strategies.

A candidate design is a :class:`Node` holding its HDL source, the score it
earned and the feedback handed back to the model for the next iteration.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

DEFAULT_C_PENALTY = -1e5
DEFAULT_ETA = 1e5
MAX_FAILING_VECTORS = 10
SUMMARY_FALLBACK_LINES = 40


class ScoreError(ValueError):
    """Raised when an evaluator hands the scoring functions impossible numbers."""


class Kind(str, enum.Enum):
    GEN = "gen"
    OPT = "opt"


class Directive(str, enum.Enum):
    BALANCED = "balanced"
    OPT_AREA = "opt-area"
    OPT_CYCLE = "opt-cycle"


DIRECTIVE_OBJECTIVES = {
    Directive.BALANCED: "minimize area×latency",
    Directive.OPT_AREA: "reduce area without increasing latency",
    Directive.OPT_CYCLE: "reduce cycle count, area increase permitted",
}


@dataclass(frozen=True)
class TaskKind:
    kind: Kind = Kind.GEN
    directive: Directive = Directive.BALANCED

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "directive", Directive(self.directive))
        if self.kind is Kind.GEN and self.directive is not Directive.BALANCED:
            raise ValueError("generation tasks only accept the balanced directive")

    @property
    def is_opt(self) -> bool:
        return self.kind is Kind.OPT


class FeedbackVariant(str, enum.Enum):
    ERROR_MSG = "error"
    DESIGN_SUMMARY = "summary"
    OPT_GUIDANCE = "opt-guidance+summary"


@dataclass(frozen=True)
class FailingVector:
    time: str
    signal: str
    expected: str
    observed: str
    inputs: tuple[tuple[str, str], ...] = ()

    def render(self) -> str:
        assignment = ", ".join(f"{k}={v}" for k, v in self.inputs)
        prefix = f"inputs({assignment}) " if assignment else ""
        return f"t={self.time} {prefix}{self.signal}: expected {self.expected}, got {self.observed}"


@dataclass(frozen=True)
class Feedback:
    variant: FeedbackVariant
    text: str
    failing_vectors: tuple[FailingVector, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "variant", FeedbackVariant(self.variant))
        vectors = tuple(self.failing_vectors)[:MAX_FAILING_VECTORS]
        object.__setattr__(self, "failing_vectors", vectors)

    def render(self) -> str:
        if not self.failing_vectors:
            return self.text
        lines = [self.text, "Mismatches against the reference:"]
        lines += [f"  - {fv.render()}" for fv in self.failing_vectors]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "text": self.text,
            "failing_vectors": [
                {**asdict(fv), "inputs": [list(p) for p in fv.inputs]} for fv in self.failing_vectors
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Feedback":
        vectors = tuple(
            FailingVector(
                time=v["time"], signal=v["signal"], expected=v["expected"], observed=v["observed"],
                inputs=tuple(tuple(p) for p in v.get("inputs", ())),
            )
            for v in d.get("failing_vectors", ())
        )
        return cls(FeedbackVariant(d["variant"]), d["text"], vectors)


@dataclass(frozen=True)
class EvalReport:
    """Raw evaluator output for one candidate."""

    compile_ok: bool
    sim_ok: bool
    pass_count: int = 0
    total: int = 0
    area_um2: Optional[float] = None
    cycles: Optional[int] = None
    latency_ns: Optional[float] = None
    meets_timing: Optional[bool] = None
    timed_out: bool = False
    stderr_excerpt: str = ""
    wall_time_ms: int = 0
    failures: tuple[FailingVector, ...] = ()

    def __post_init__(self):
        if self.pass_count < 0 or self.pass_count > self.total:
            raise ScoreError(f"pass count {self.pass_count} outside [0, {self.total}]")

    @property
    def all_pass(self) -> bool:
        return self.sim_ok and self.total > 0 and self.pass_count == self.total

    def to_dict(self) -> dict:
        d = asdict(self)
        d["failures"] = [fv.render() for fv in self.failures]
        return d


@dataclass(frozen=True)
class Node:
    id: str
    code: str
    score: float
    feedback: Feedback
    parent_id: Optional[str] = None
    depth: int = 0
    created_at_node_index: int = 1
    template_id: str = ""
    chain: Optional[int] = None

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if (self.parent_id is None) != (self.depth == 0):
            raise ValueError("only the root has depth 0 and no parent")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["feedback"] = self.feedback.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Node":
        d = dict(d)
        d["feedback"] = Feedback.from_dict(d["feedback"])
        return cls(**d)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    description: str
    task: TaskKind
    golden_ref: str
    top_module: str
    clock_period_ns: float = 10.0
    max_nodes: int = 300
    eta: float = DEFAULT_ETA
    c_penalty: float = DEFAULT_C_PENALTY
    context: str = ""
    user_testbench: Optional[str] = None

    def __post_init__(self):
        if self.max_nodes < 1:
            raise ValueError("max_nodes must be at least 1")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.clock_period_ns <= 0:
            raise ValueError("clock period must be positive")
        # Gen scores bottom out at 0, so the penalty has to sit strictly below it.
        if not self.c_penalty < 0:
            raise ValueError("c_penalty must be negative")

    @property
    def ref_module(self) -> str:
        return f"{self.top_module}_ref"


@dataclass
class Archive:
    """Append-only record of every evaluated node plus the running best."""

    all_nodes: list[Node] = field(default_factory=list)
    best: Optional[Node] = None

    @property
    def node_count(self) -> int:
        return len(self.all_nodes)

    def append(self, node: Node) -> bool:
        """Add ``node``; return True when it becomes the new best."""
        self.all_nodes.append(node)
        if self.best is None or node.score > self.best.score:
            self.best = node
            return True
        return False

    def best_so_far(self) -> list[float]:
        out, running = [], -math.inf
        for n in self.all_nodes:
            running = max(running, n.score)
            out.append(running)
        return out


def score_generation(pass_count: int, total: int, sim_ok: bool, c_penalty: float = DEFAULT_C_PENALTY) -> float:
    if not sim_ok:
        return c_penalty
    if total <= 0:
        raise ScoreError("simulation reported success with zero test vectors")
    if not 0 <= pass_count <= total:
        raise ScoreError(f"pass count {pass_count} outside [0, {total}]")
    return pass_count / total


def score_optimization(
    area: float,
    latency: float,
    all_pass: bool,
    eta: float = DEFAULT_ETA,
    c_penalty: float = DEFAULT_C_PENALTY,
) -> float:
    if not all_pass:
        return c_penalty
    if area is None or latency is None or area <= 0 or latency <= 0:
        raise ScoreError(f"valid design needs positive area and latency, got {area!r}, {latency!r}")
    return -(area * latency) / eta


def _num(x: float) -> str:
    return format(x, ".10g")


def opt_guidance(area: float, latency: float, score: float, directive: Directive) -> str:
    objective = DIRECTIVE_OBJECTIVES[Directive(directive)]
    return (
        f"current area={_num(area)} µm², latency={_num(latency)} ns, score={_num(score)}; "
        f"objective: {objective}"
    )


def fallback_summary(code: str) -> str:
    return "\n".join(code.splitlines()[:SUMMARY_FALLBACK_LINES])


def _error_text(report: EvalReport) -> str:
    if report.timed_out:
        return "timeout: the simulation or synthesis run exceeded its time limit"
    if not report.compile_ok:
        return "compile error:\n" + report.stderr_excerpt
    if not report.sim_ok:
        return "simulation failed:\n" + report.stderr_excerpt
    if report.meets_timing is False:
        return "synthesis rejected the design:\n" + (report.stderr_excerpt or "timing violation at the requested clock period")
    # Opt candidates that simulate but miss vectors land here.
    return f"functional mismatch: {report.pass_count}/{report.total} vectors passed"


def select_feedback(
    task: TaskKind,
    score: float,
    report: EvalReport,
    c_penalty: float = DEFAULT_C_PENALTY,
    summary: Optional[str] = None,
) -> Feedback:
    if score == c_penalty:
        return Feedback(FeedbackVariant.ERROR_MSG, _error_text(report), report.failures)
    summary = summary or ""
    if task.kind is Kind.GEN:
        head = f"pass rate {report.pass_count}/{report.total} ({score:.4f})"
        return Feedback(
            FeedbackVariant.DESIGN_SUMMARY,
            f"{head}\nDesign summary:\n{summary}".rstrip(),
            report.failures,
        )
    guidance = opt_guidance(report.area_um2, report.latency_ns, score, task.directive)
    return Feedback(FeedbackVariant.OPT_GUIDANCE, f"{guidance}\nDesign summary:\n{summary}".rstrip())


def node_id(index: int) -> str:
    return f"n{index:04d}"

