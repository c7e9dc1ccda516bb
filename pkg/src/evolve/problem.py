"""Problem directories.

A problem directory holds ``problem.md`` (the description), ``golden.v`` (the
reference, module ``<top>_ref``), ``problem.json`` (task kind, top module,
clock and overrides) and optionally ``context.md`` (reference notes for idea
generation) and ``tb.v`` (a hand-written testbench that replaces generated
ones; it must print the same ``STG_RESULT`` summary line).
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Optional

from .core import ProblemSpec, TaskKind
from .evaluator import ConfigError
from .stg import StimulusPlan, TestbenchBundle, generate_testbench

PROBLEM_KEYS = {"name", "task", "directive", "top_module", "clock_period_ns", "max_nodes", "eta", "c_penalty",
                "stg_seed", "stg_random_vectors"}


class ProblemError(ConfigError):
    pass


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except FileNotFoundError:
        raise ProblemError(f"missing {path.name} in problem directory {path.parent}") from None


def ingest_problem(directory, require_golden: bool = True) -> ProblemSpec:
    d = Path(directory)
    if not d.is_dir():
        raise ProblemError(f"problem directory {d} does not exist")
    try:
        meta = json.loads(_read(d / "problem.json"))
    except json.JSONDecodeError as exc:
        raise ProblemError(f"problem.json is not valid JSON: {exc}") from exc
    if not isinstance(meta, dict):
        raise ProblemError("problem.json must hold an object")
    unknown = set(meta) - PROBLEM_KEYS
    if unknown:
        raise ProblemError(f"problem.json has unknown keys: {', '.join(sorted(unknown))}")
    for key in ("task", "top_module"):
        if key not in meta:
            raise ProblemError(f"problem.json lacks required key '{key}'")
    description = _read(d / "problem.md")
    tb = d / "tb.v"
    user_tb = tb.read_text() if tb.is_file() else None
    golden_path = d / "golden.v"
    if golden_path.is_file():
        golden = golden_path.read_text()
    elif user_tb is not None or not require_golden:
        golden = ""
    else:
        raise ProblemError(
            f"missing golden.v in {d}: generated testbenches need an executable reference model "
            f"(module {meta['top_module']}_ref); supply one, or provide a hand-written tb.v instead"
        )
    context = (d / "context.md").read_text() if (d / "context.md").is_file() else ""
    try:
        task = TaskKind(meta["task"], meta.get("directive", "balanced"))
        optional = {k: meta[k] for k in ("clock_period_ns", "max_nodes", "eta", "c_penalty") if k in meta}
        return ProblemSpec(
            name=meta.get("name", d.name), description=description, task=task, golden_ref=golden,
            top_module=meta["top_module"], context=context, user_testbench=user_tb, **optional,
        )
    except (ValueError, TypeError) as exc:
        raise ProblemError(f"invalid problem.json: {exc}") from exc


def stg_options(directory) -> dict:
    if directory is None:
        return {}
    meta = json.loads((Path(directory) / "problem.json").read_text())
    out = {}
    if "stg_seed" in meta:
        out["seed"] = int(meta["stg_seed"])
    if "stg_random_vectors" in meta:
        out["random_vectors"] = int(meta["stg_random_vectors"])
    return out


def user_bundle(spec: ProblemSpec) -> TestbenchBundle:
    """Wrap a hand-written testbench so it flows through the same evaluator path."""
    return TestbenchBundle(ports=(), plan=StimulusPlan((), (), {}), source=spec.user_testbench,
                           total_vectors=0, clock_period_ns=spec.clock_period_ns, brief_delay_ns=0.0)


def build_bundle(spec: ProblemSpec, seed: int = 0, **plan_kwargs) -> TestbenchBundle:
    """The run's testbench: the user's if supplied, else generated from the reference."""
    if spec.user_testbench:
        return user_bundle(spec)
    return generate_testbench(spec.golden_ref, spec.top_module, spec.clock_period_ns, seed=seed, **plan_kwargs)


def synthetic_problem(landscape: str = "hamming", width: int = 8, max_nodes: int = 300,
                      clock_period_ns: float = 10.0, directive: str = "balanced") -> ProblemSpec:
    """Built-in problem for the synthetic backend (no HDL involved)."""
    task = TaskKind("gen") if landscape == "hamming" else TaskKind("opt", directive)
    return ProblemSpec(
        name=f"synthetic-{landscape}",
        description=(f"Find the hidden {width}-bit pattern. A candidate is a single line "
                     f"'bits = <{width} binary digits>'."),
        task=task, golden_ref="", top_module="bits", clock_period_ns=clock_period_ns, max_nodes=max_nodes,
    )


def with_period(spec: ProblemSpec, period: Optional[float]) -> ProblemSpec:
    return spec if period is None else dataclasses.replace(spec, clock_period_ns=float(period))
