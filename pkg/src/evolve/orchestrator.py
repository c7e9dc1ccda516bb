"""The evolutionary run loop, its budget and its on-disk record."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import __version__
from .core import Archive, Feedback, FeedbackVariant, Kind, Node, ProblemSpec, TaskKind, node_id
from .evaluator import BackendError, ConfigError, evaluate
from .llm.client import (
    AuthError,
    Completion,
    LlmClient,
    LlmError,
    MalformedOutputError,
    NoFixtureError,
    RefusalError,
    complete_with_retry,
    extract_code,
)
from .llm.mock import prompt_hash
from .llm.prompts import TEMPLATE_VERSION, PromptBundle, summary_prompt
from .report import read_jsonl, write_report
from .stg import GENERATOR_VERSION, TestbenchBundle

log = logging.getLogger(__name__)

STRATEGIES = ("mcts", "igr", "random")
BACKENDS = ("open-source", "synthetic")
LLMS = ("remote", "mock")

EXIT_OK = 0
EXIT_UNSOLVED = 2
EXIT_CONFIG = 3
EXIT_BACKEND = 4


@dataclass(frozen=True)
class RunConfig:
    strategy: str = "mcts"
    max_nodes: Optional[int] = None  # None: the problem's own budget
    k: int = 60
    m: int = 5
    expansion_rate: int = 3
    c: float = 1.4
    clock_sweep: tuple[float, ...] = ()
    seed: int = 0
    backend: str = "open-source"
    llm: str = "mock"
    directive: Optional[str] = None
    binary_feedback: bool = False
    summaries: bool = True
    problem: Optional[str] = None
    landscape: str = "hamming"
    width: int = 8

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; pick one of {', '.join(STRATEGIES)}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; pick one of {', '.join(BACKENDS)}")
        if self.llm not in LLMS:
            raise ConfigError(f"unknown llm {self.llm!r}; pick one of {', '.join(LLMS)}")
        if self.max_nodes is not None and self.max_nodes < 1:
            raise ConfigError("max_nodes must be at least 1")
        if self.k < 1 or self.m < 1:
            raise ConfigError("k and m must be positive")
        if self.expansion_rate < 1:
            raise ConfigError("expansion_rate must be at least 1")
        if self.c < 0:
            raise ConfigError("the exploration constant must be non-negative")
        if any(p <= 0 for p in self.clock_sweep):
            raise ConfigError("clock periods must be positive")
        object.__setattr__(self, "clock_sweep", tuple(float(p) for p in self.clock_sweep))

    def budget(self, spec: ProblemSpec) -> int:
        return self.max_nodes if self.max_nodes is not None else spec.max_nodes

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["clock_sweep"] = list(self.clock_sweep)
        return d


def make_strategy(config: RunConfig):
    from .search import IgrStrategy, MctsStrategy, RandomParentStrategy

    if config.strategy == "mcts":
        return MctsStrategy(config.c, config.expansion_rate)
    if config.strategy == "igr":
        return IgrStrategy(config.k, config.m)
    return RandomParentStrategy(config.seed)


def _nonempty(text: str) -> str:
    if not text.strip():
        raise MalformedOutputError("empty reply")
    return text.strip()


def _jsonl_append(path: Path, record: dict):
    with path.open("a") as fh:
        fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
        fh.flush()


class Run:
    """One search run: owns the budget, the archive and the run directory.

    Each node is appended to ``nodes.jsonl`` as soon as it is evaluated, so a
    crash loses at most the candidate in flight and the run can be resumed.
    """

    def __init__(self, spec: ProblemSpec, config: RunConfig, backend, llm: LlmClient, bundle: TestbenchBundle,
                 out_dir, resume: bool = False, keep_workdirs: bool = True):
        self.spec = spec
        self.config = config
        self.backend = backend
        self.llm = llm
        self.bundle = bundle
        self.out = Path(out_dir)
        self.max_nodes = config.budget(spec)
        self.keep_workdirs = keep_workdirs
        self.archive = Archive()
        self.last_reply = ""
        self.strategy = make_strategy(config)
        self._transcript: list[dict] = []
        self._calls = 0
        self.out.mkdir(parents=True, exist_ok=True)
        if config.strategy == "igr" and config.k * config.m != self.max_nodes:
            log.warning("k*m = %d differs from the node budget %d", config.k * config.m, self.max_nodes)
        if resume:
            self._load()
        else:
            for name in ("nodes.jsonl", "usage.jsonl", "chains.jsonl", "scaling.csv", "tree.json", "summary.json"):
                (self.out / name).unlink(missing_ok=True)
        self._write_meta("running")
        (self.out / "testbench.v").write_text(bundle.source)

    # -- Engine interface used by strategies --------------------------------

    @property
    def nodes(self) -> list[Node]:
        return self.archive.all_nodes

    def should_stop(self) -> bool:
        if self.archive.node_count >= self.max_nodes:
            return True
        best = self.archive.best
        return self.spec.task.kind is Kind.GEN and best is not None and best.score >= 1.0

    def budget_info(self) -> str:
        return f"node {self.archive.node_count + 1} of {self.max_nodes}"

    def ask(self, bundle: PromptBundle, parse: Callable, reminder: str = "reply with a single fenced code block"):
        value, completion = complete_with_retry(self.llm, bundle, parse, reminder, on_usage=self._usage)
        self.last_reply = completion.text
        return value

    def generate(self, bundle: PromptBundle, parent: Optional[Node], chain: Optional[int] = None) -> Node:
        try:
            code = self.ask(bundle, extract_code)
        except (MalformedOutputError, RefusalError) as exc:
            return self.penalty_node("", parent, bundle.template_id, f"model reply unusable: {exc}", chain)
        return self.make_node(code, parent, bundle.template_id, chain)

    def make_node(self, code: str, parent: Optional[Node], template_id: str, chain: Optional[int] = None) -> Node:
        self._check_budget()
        index = self.archive.node_count + 1
        workdir = self.out / node_id(index) if self.keep_workdirs else None
        summarizer = self._summarize if self.config.summaries else None
        ev = evaluate(code, self.spec, self.bundle, self.backend, summarizer, workdir, self.config.binary_feedback)
        return self._record(code, ev.score, ev.feedback, parent, template_id, chain)

    def penalty_node(self, code: str, parent: Optional[Node], template_id: str, reason: str,
                     chain: Optional[int] = None) -> Node:
        self._check_budget()
        fb = Feedback(FeedbackVariant.ERROR_MSG, reason)
        return self._record(code, self.spec.c_penalty, fb, parent, template_id, chain)

    def transcript(self, record: dict) -> None:
        record = {"seq": len(self._transcript) + 1, **record}
        self._transcript.append(record)
        _jsonl_append(self.out / "chains.jsonl", record)

    def transcript_records(self) -> list[dict]:
        return list(self._transcript)

    # -- internals -----------------------------------------------------------

    def _check_budget(self):
        if self.archive.node_count >= self.max_nodes:
            raise RuntimeError("node budget exceeded; strategies must check should_stop()")

    def _summarize(self, code: str) -> str:
        return self.ask(summary_prompt(code), _nonempty, reminder="reply with a short plain-text summary")

    def _usage(self, bundle: PromptBundle, completion: Completion):
        self._calls += 1
        _jsonl_append(self.out / "usage.jsonl", {
            "call": self._calls,
            "node_index": self.archive.node_count + 1,
            "purpose": bundle.metadata.get("purpose"),
            "template_id": bundle.template_id,
            "prompt_hash": prompt_hash(bundle),
            "prompt_tokens": completion.prompt_tokens,
            "completion_tokens": completion.completion_tokens,
        })

    def _record(self, code, score, feedback, parent, template_id, chain) -> Node:
        index = self.archive.node_count + 1
        node = Node(
            id=node_id(index), code=code, score=score, feedback=feedback,
            parent_id=parent.id if parent else None, depth=parent.depth + 1 if parent else 0,
            created_at_node_index=index, template_id=template_id, chain=chain,
        )
        self.archive.append(node)
        _jsonl_append(self.out / "nodes.jsonl", node.to_dict())
        log.info("%s score=%.6g best=%.6g", node.id, node.score, self.archive.best.score)
        return node

    def _meta(self, status: str, exit_code: Optional[int] = None, error: Optional[str] = None) -> dict:
        s = self.spec
        return {
            "evolve_version": __version__,
            "stg_version": GENERATOR_VERSION,
            "template_version": TEMPLATE_VERSION,
            "config": self.config.to_dict(),
            "problem": {
                "name": s.name, "task": s.task.kind.value, "directive": s.task.directive.value,
                "top_module": s.top_module, "clock_period_ns": s.clock_period_ns, "eta": s.eta,
                "c_penalty": s.c_penalty, "user_testbench": bool(s.user_testbench),
            },
            "max_nodes": self.max_nodes,
            "testbench_vectors": self.bundle.total_vectors,
            "status": status,
            "exit_code": exit_code,
            "error": error,
            "node_count": self.archive.node_count,
        }

    def _write_meta(self, status: str, exit_code: Optional[int] = None, error: Optional[str] = None):
        (self.out / "run.json").write_text(json.dumps(self._meta(status, exit_code, error), indent=2,
                                                      sort_keys=True) + "\n")

    def _load(self):
        meta_path = self.out / "run.json"
        if meta_path.exists():
            old = json.loads(meta_path.read_text())
            if old.get("config") != self.config.to_dict():
                raise ConfigError(f"cannot resume {self.out}: it was started with a different configuration")
        for rec in read_jsonl(self.out / "nodes.jsonl"):
            self.archive.append(Node.from_dict(rec))
        self._transcript = read_jsonl(self.out / "chains.jsonl")
        self._calls = len(read_jsonl(self.out / "usage.jsonl"))
        if self.archive.node_count:
            log.info("resuming %s at node %d", self.out, self.archive.node_count + 1)

    def checkpoint(self, status: str, exit_code: Optional[int] = None, error: Optional[str] = None):
        snap = self.strategy.snapshot()
        if snap is not None and self.config.strategy == "mcts":
            (self.out / "tree.json").write_text(json.dumps(snap, indent=1, sort_keys=True) + "\n")
        write_report(self.out)
        self._write_meta(status, exit_code, error)

    def execute(self) -> int:
        """Run the strategy to completion; returns the process exit code."""
        try:
            self.strategy.run(self)
        except (AuthError, NoFixtureError, ConfigError) as exc:
            self.checkpoint("failed", EXIT_CONFIG, str(exc))
            log.error("configuration error: %s", exc)
            return EXIT_CONFIG
        except (BackendError, LlmError, OSError) as exc:
            self.checkpoint("failed", EXIT_BACKEND, f"{type(exc).__name__}: {exc}")
            log.error("backend failure, run checkpointed at node %d: %s", self.archive.node_count, exc)
            return EXIT_BACKEND
        best = self.archive.best
        if self.spec.task.kind is Kind.GEN and (best is None or best.score < 1.0):
            code = EXIT_UNSOLVED
        else:
            code = EXIT_OK
        self.checkpoint("complete", code)
        return code


def run(spec: ProblemSpec, config: RunConfig, backend, llm: LlmClient, bundle: TestbenchBundle, out_dir,
        resume: bool = False) -> Archive:
    """Run one search and return its archive (see :class:`Run` for exit codes)."""
    r = Run(spec, config, backend, llm, bundle, out_dir, resume=resume)
    r.execute()
    return r.archive


def _make_llm(config: RunConfig, llm_config=None, fixtures=None, lenient: bool = False) -> LlmClient:
    from .llm import LlmConfig, MutationMock, RemoteClient, ReplayMock

    if config.llm == "remote":
        return RemoteClient(llm_config or LlmConfig())
    if fixtures:
        if not Path(fixtures).is_file():
            raise ConfigError(f"fixture file {fixtures} does not exist")
        return ReplayMock(fixtures, strict=not lenient)
    if config.backend == "synthetic":
        return MutationMock(config.seed, config.width)
    raise ConfigError("the mock LLM needs --fixtures unless the synthetic backend is selected")


def load_spec(config: RunConfig) -> ProblemSpec:
    from .problem import ingest_problem, synthetic_problem

    if config.problem:
        spec = ingest_problem(config.problem, require_golden=config.backend != "synthetic")
    elif config.backend == "synthetic":
        spec = synthetic_problem(config.landscape, config.width)
    else:
        raise ConfigError("--problem is required with the open-source backend")
    if config.directive:
        try:
            spec = dataclasses.replace(spec, task=TaskKind(spec.task.kind, config.directive))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return spec


def run_from_config(config: RunConfig, out_dir, resume: bool = False, llm_config=None, fixtures=None,
                    lenient: bool = False, tools: Optional[dict] = None) -> int:
    """Everything ``evolve run`` does: build spec, backend and model, then run.

    With a clock sweep each period gets its own independent run (fresh model
    state, fresh testbench) in ``<out>/clk-<P>ns``; the exit code is the worst
    of the individual runs.
    """
    from .problem import build_bundle, stg_options, with_period

    out = Path(out_dir)
    try:
        spec = load_spec(config)
        if config.clock_sweep and spec.task.kind is not Kind.OPT:
            raise ConfigError("a clock sweep only makes sense for optimization tasks")
        if config.backend == "synthetic":
            from .eda import SyntheticBackend

            backend = SyntheticBackend(config.landscape, config.seed, config.width)
            if (spec.task.kind is Kind.OPT) != (config.landscape == "ppa"):
                raise ConfigError(f"landscape {config.landscape!r} does not fit a {spec.task.kind.value} task")
        else:
            from .eda import OpenSourceBackend, resolve_tools

            backend = OpenSourceBackend(resolve_tools(need_synth=spec.task.is_opt, **(tools or {})))
        periods = config.clock_sweep or (None,)
        jobs = []
        for p in periods:
            pspec = with_period(spec, p)
            if config.backend == "synthetic":
                bundle = backend.make_bundle(pspec)
            else:
                bundle = build_bundle(pspec, **stg_options(config.problem))
            jobs.append((p, pspec, bundle))
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except ValueError as exc:  # bad generator input, e.g. an unparsable reference
        log.error("cannot prepare the run: %s", exc)
        return EXIT_CONFIG

    codes = {}
    for p, pspec, bundle in jobs:
        target = out if p is None else out / f"clk-{p:g}ns"
        try:
            llm = _make_llm(config, llm_config, fixtures, lenient)
            r = Run(pspec, config, backend, llm, bundle, target, resume=resume)
        except ConfigError as exc:
            log.error("%s", exc)
            return EXIT_CONFIG
        codes[p] = r.execute()
    if config.clock_sweep:
        sweep = []
        for p in config.clock_sweep:
            summary = json.loads((out / f"clk-{p:g}ns" / "summary.json").read_text())
            sweep.append({"clock_period_ns": p, "exit_code": codes[p], **summary})
        (out / "sweep.json").write_text(json.dumps(sweep, indent=2, sort_keys=True) + "\n")
    return max(codes.values())
