"""Candidate evaluation: run a backend, turn raw results into a score and feedback."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol

from .core import (
    EvalReport,
    FailingVector,
    Feedback,
    ProblemSpec,
    fallback_summary,
    score_generation,
    score_optimization,
    select_feedback,
)
from .stg import TestbenchBundle
from .stg.results import FailLine

log = logging.getLogger(__name__)

STDERR_EXCERPT_CHARS = 4000


class BackendError(RuntimeError):
    """The toolchain itself misbehaved (as opposed to the candidate failing)."""


class ConfigError(RuntimeError):
    """Tools or settings are unusable; raised before any candidate is evaluated."""


@dataclass(frozen=True)
class SimResult:
    compile_ok: bool
    sim_ok: bool
    pass_count: int = 0
    total: int = 0
    cycles: Optional[int] = None
    stderr: str = ""
    timed_out: bool = False
    failures: tuple[FailLine, ...] = ()
    wall_time_ms: int = 0


@dataclass(frozen=True)
class SynthResult:
    area_um2: Optional[float]
    meets_timing: bool = True
    timed_out: bool = False
    log: str = ""
    wall_time_ms: int = 0
    message: str = ""  # short reason when the design is rejected


class EvalBackend(Protocol):
    """What the evaluator needs from a toolchain.

    Implementations must be deterministic for identical inputs (wall time
    excepted) and raise :class:`ConfigError` from their constructor when a
    required tool is missing.
    """

    def run_sim(self, code: str, bundle: TestbenchBundle, spec: ProblemSpec,
                workdir: Optional[Path] = None) -> SimResult: ...

    def run_synth(self, code: str, spec: ProblemSpec, workdir: Optional[Path] = None) -> SynthResult: ...


@dataclass(frozen=True)
class Evaluation:
    score: float
    feedback: Feedback
    report: EvalReport


def excerpt(text: str, limit: int = STDERR_EXCERPT_CHARS) -> str:
    text = (text or "").strip()
    return text if len(text) <= limit else "..." + text[-limit:]


def _failing_vectors(failures, bundle: TestbenchBundle) -> tuple[FailingVector, ...]:
    out = []
    for f in failures:
        inputs: tuple = ()
        try:
            idx = bundle.vector_at(float(f.time))
        except ValueError:
            idx = None
        if idx is not None:
            widths = {p.name: p.width for p in bundle.ports}
            inputs = tuple((k, f"{widths.get(k, 1)}'h{v:x}") for k, v in bundle.vectors[idx].items())
        out.append(FailingVector(f.time, f.signal, f.expected, f.observed, inputs))
    return tuple(out)


def evaluate(
    code: str,
    spec: ProblemSpec,
    bundle: TestbenchBundle,
    backend: EvalBackend,
    summarizer: Optional[Callable[[str], Optional[str]]] = None,
    workdir: Optional[Path] = None,
    binary_feedback: bool = False,
) -> Evaluation:
    """Score one candidate.

    ``binary_feedback`` collapses the pass count to all-or-nothing and drops
    the per-vector mismatch list, which is what a plain pass/fail testbench
    would report.
    """
    if workdir is not None:
        workdir = Path(workdir)
        workdir.mkdir(parents=True, exist_ok=True)

    sim = backend.run_sim(code, bundle, spec, workdir)
    passed, total, failures = sim.pass_count, sim.total, sim.failures
    if binary_feedback and sim.sim_ok:
        passed = total if passed == total else 0
        failures = ()
    sim_ok = sim.compile_ok and sim.sim_ok and not sim.timed_out
    wall = sim.wall_time_ms

    area = latency = None
    meets_timing = None
    timed_out = sim.timed_out
    stderr = sim.stderr
    if spec.task.is_opt:
        all_pass = sim_ok and total > 0 and passed == total
        if all_pass:
            if sim.cycles is None:
                raise BackendError("testbench finished without reporting STG_CYCLES")
            synth = backend.run_synth(code, spec, workdir)
            wall += synth.wall_time_ms
            timed_out = timed_out or synth.timed_out
            meets_timing = synth.meets_timing and not synth.timed_out
            area = synth.area_um2
            latency = sim.cycles * spec.clock_period_ns
            if synth.timed_out:
                stderr = "synthesis timed out"
            elif not synth.meets_timing:
                stderr = synth.message or excerpt(synth.log) or "timing constraint not met"
            elif area is None or area <= 0:
                # a netlist with no cells cannot be ranked by area x latency
                meets_timing = False
                stderr = f"synthesis produced an empty netlist (area {area}); the design has no logic"
            if meets_timing:
                score = score_optimization(area, latency, True, spec.eta, spec.c_penalty)
            else:
                score = spec.c_penalty
        else:
            score = spec.c_penalty
    else:
        score = score_generation(passed, total, sim_ok, spec.c_penalty)

    report = EvalReport(
        compile_ok=sim.compile_ok,
        sim_ok=sim_ok,
        pass_count=passed if sim_ok else 0,
        total=total if sim_ok else 0,
        area_um2=area,
        cycles=sim.cycles,
        latency_ns=(sim.cycles * spec.clock_period_ns) if sim.cycles is not None else None,
        meets_timing=meets_timing,
        timed_out=timed_out,
        stderr_excerpt=excerpt(stderr),
        wall_time_ms=wall,
        failures=_failing_vectors(failures, bundle),
    )

    summary = None
    if score != spec.c_penalty:
        if summarizer is not None:
            try:
                summary = summarizer(code)
            except Exception as exc:  # summaries are best effort
                log.warning("design summary failed, using code head: %s", exc)
        summary = summary or fallback_summary(code)
    feedback = select_feedback(spec.task, score, report, spec.c_penalty, summary)

    if workdir is not None:
        payload = {"score": score, "feedback": feedback.to_dict(), "report": report.to_dict()}
        (workdir / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return Evaluation(score, feedback, report)
