import json
import logging
import shutil
from pathlib import Path

import pytest

from evolve.core import Kind
from evolve.eda import SyntheticBackend
from evolve.evaluator import BackendError, ConfigError
from evolve.llm import AuthError, CallbackMock, MutationMock, TransportError
from evolve.llm.prompts import Purpose
from evolve.orchestrator import (
    EXIT_BACKEND,
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_UNSOLVED,
    Run,
    RunConfig,
    run,
    run_from_config,
)
from evolve.problem import ProblemError, build_bundle, ingest_problem, synthetic_problem
from evolve.report import nodes_to_solve, read_jsonl, summarize

from conftest import FIXTURES, needs_sim, synthetic_run

PROBLEMS = FIXTURES / "problems"


# ------------------------------------------------------------ problem ingest

def test_ingest_complete_directory():
    spec = ingest_problem(PROBLEMS / "adder_stg")
    assert spec.top_module == "adder4" and spec.task.kind is Kind.GEN
    assert spec.max_nodes == 20 and "carry" in spec.description
    assert "module adder4_ref" in spec.golden_ref and spec.user_testbench is None
    bundle = build_bundle(spec)
    assert bundle.total_vectors > 0 and "stg_tb" in bundle.source


def copy_problem(tmp_path, name="adder_stg"):
    d = tmp_path / name
    shutil.copytree(PROBLEMS / name, d)
    return d


def test_ingest_missing_problem_json(tmp_path):
    d = copy_problem(tmp_path)
    (d / "problem.json").unlink()
    with pytest.raises(ProblemError, match="problem.json"):
        ingest_problem(d)


def test_ingest_missing_golden_names_the_limitation(tmp_path):
    d = copy_problem(tmp_path)
    (d / "golden.v").unlink()
    with pytest.raises(ProblemError, match="executable reference"):
        ingest_problem(d)


@pytest.mark.parametrize("meta,match", [
    ({"task": "gen"}, "top_module"),
    ({"task": "gen", "top_module": "x", "color": "red"}, "unknown keys"),
    ({"task": "gen", "top_module": "x", "directive": "opt-area"}, "balanced"),
    ({"task": "opt", "top_module": "x", "clock_period_ns": -1}, "clock"),
])
def test_ingest_invalid_metadata(tmp_path, meta, match):
    d = copy_problem(tmp_path)
    (d / "problem.json").write_text(json.dumps(meta))
    with pytest.raises(ProblemError, match=match):
        ingest_problem(d)


def test_ingest_user_testbench_bypasses_stg():
    spec = ingest_problem(PROBLEMS / "adder_usertb")
    assert spec.golden_ref == "" and "STG_RESULT" in spec.user_testbench
    bundle = build_bundle(spec)
    assert bundle.source == spec.user_testbench


def test_context_file_is_read(tmp_path):
    d = copy_problem(tmp_path)
    (d / "context.md").write_text("Carry-lookahead notes.")
    assert ingest_problem(d).context == "Carry-lookahead notes."


@pytest.mark.eda
@needs_sim
def test_user_testbench_scored_through_same_protocol(tmp_path):
    from evolve.eda import OpenSourceBackend, resolve_tools
    from evolve.evaluator import evaluate

    spec = ingest_problem(PROBLEMS / "adder_usertb")
    backend = OpenSourceBackend(resolve_tools(need_synth=False))
    bundle = build_bundle(spec)
    good = evaluate((FIXTURES / "adder" / "good.v").read_text(), spec, bundle, backend, workdir=tmp_path / "g")
    bad = evaluate((FIXTURES / "adder" / "wrong_carry.v").read_text(), spec, bundle, backend,
                   workdir=tmp_path / "b")
    assert (good.report.pass_count, good.report.total, good.score) == (512, 512, 1.0)
    assert 0 < bad.score < 1


# ------------------------------------------------------------ stop rules and budget

def counting_mock(solve_at, width=8):
    """Wrong answers until the ``solve_at``-th code request, then the all-ones target."""
    n = {"code": 0}

    def fn(bundle):
        if bundle.purpose is Purpose.IDEA_GEN:
            return f"idea {bundle.metadata['idea_index']}"
        if bundle.purpose is Purpose.SUMMARY:
            return "a summary"
        n["code"] += 1
        bits = "1" * width if n["code"] >= solve_at else "0" * width
        if bundle.metadata.get("edit_mode"):
            import re
            old = re.search(r"bits = ([01]+)", bundle.user).group(1)
            return f"<<<SEARCH\nbits = {old}\n====\nbits = {bits}\n>>>REPLACE\n"
        return f"```verilog\nbits = {bits}\n```"

    return CallbackMock(fn)


def gen_run(tmp_path, llm, strategy="mcts", max_nodes=300, **cfg):
    spec = synthetic_problem("hamming", 8, max_nodes=max_nodes)
    backend = SyntheticBackend("hamming", target="11111111")
    config = RunConfig(strategy=strategy, backend="synthetic", **cfg)
    r = Run(spec, config, backend, llm, backend.make_bundle(spec), tmp_path)
    r.exit_code = r.execute()
    return r


@pytest.mark.parametrize("strategy", ["mcts", "igr", "random"])
def test_gen_solved_at_node_12(tmp_path, strategy):
    r = gen_run(tmp_path, counting_mock(12), strategy, summaries=False)
    assert r.archive.node_count == 12 and r.archive.best.score == 1.0
    assert r.exit_code == EXIT_OK
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["nodes_to_solve"] == 12 and summary["best_node_id"] == "n0012"


def test_gen_unsolved_exit_code(tmp_path):
    r = gen_run(tmp_path, counting_mock(10**6), max_nodes=15, summaries=False)
    assert r.exit_code == EXIT_UNSOLVED and r.archive.node_count == 15
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["nodes_to_solve"] is None and summary["best_score"] == 0.0


@pytest.mark.parametrize("strategy,extra", [("mcts", {}), ("igr", {"k": 10, "m": 5}), ("random", {})])
def test_opt_budget_is_exact(tmp_path, strategy, extra):
    spec = synthetic_problem("ppa", 8, max_nodes=50)
    backend = SyntheticBackend("ppa", seed=2)
    config = RunConfig(strategy=strategy, backend="synthetic", landscape="ppa", summaries=False, **extra)
    archive = run(spec, config, backend, MutationMock(2), backend.make_bundle(spec), tmp_path)
    assert archive.node_count == 50
    # reaching the optimum does not stop an optimization run
    backend2 = SyntheticBackend("ppa", target="00000000")
    llm = CallbackMock(lambda b: "idea" if b.purpose is Purpose.IDEA_GEN else
                       ("<<<SEARCH\nbits = 00000000\n====\nbits = 00000000\n>>>REPLACE\n"
                        if b.metadata.get("edit_mode") else "```\nbits = 00000000\n```"))
    archive = run(spec, config, backend2, llm, backend2.make_bundle(spec), tmp_path / "b")
    assert archive.node_count == 50


def test_budget_override_and_seed_counts_as_node_one(tmp_path):
    spec = synthetic_problem("hamming", 8, max_nodes=300)
    backend = SyntheticBackend("hamming", seed=1)
    config = RunConfig(strategy="mcts", backend="synthetic", max_nodes=7, summaries=False)
    r = Run(spec, config, backend, MutationMock(1), backend.make_bundle(spec), tmp_path)
    r.execute()
    nodes = r.nodes
    assert len(nodes) <= 7
    assert nodes[0].parent_id is None and nodes[0].created_at_node_index == 1
    assert all(n.parent_id is not None for n in nodes[1:])


def test_igr_budget_warning(tmp_path, caplog):
    spec = synthetic_problem("hamming", 8, max_nodes=300)
    backend = SyntheticBackend("hamming")
    with caplog.at_level(logging.WARNING):
        Run(spec, RunConfig(strategy="igr", backend="synthetic", k=10, m=5), backend, MutationMock(),
            backend.make_bundle(spec), tmp_path)
    assert "k*m = 50" in caplog.text


@pytest.mark.parametrize("kwargs", [
    {"strategy": "beam"}, {"max_nodes": 0}, {"k": 0}, {"expansion_rate": 0}, {"c": -1},
    {"clock_sweep": (3, -1)}, {"backend": "cloud"}, {"llm": "oracle"},
])
def test_run_config_validation(kwargs):
    with pytest.raises(ConfigError):
        RunConfig(**kwargs)


# ------------------------------------------------------------ persistence and report

def test_persisted_layout(tmp_path):
    r = synthetic_run(tmp_path, "mcts", seed=4, max_nodes=10, keep_workdirs=True, summaries=True)
    for name in ("run.json", "nodes.jsonl", "usage.jsonl", "tree.json", "scaling.csv", "summary.json",
                 "testbench.v"):
        assert (tmp_path / name).exists(), name
    for name in ("dut.v", "tb.v", "sim.log", "report.json"):
        assert (tmp_path / "n0001" / name).exists(), name
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["status"] == "complete" and meta["node_count"] == len(r.nodes)
    assert meta["config"]["strategy"] == "mcts"
    rows = (tmp_path / "scaling.csv").read_text().splitlines()
    assert rows[0] == "node_index,node_id,score,best_so_far" and len(rows) == len(r.nodes) + 1
    best = [float(x.split(",")[3]) for x in rows[1:]]
    assert best == r.archive.best_so_far()
    tree = json.loads((tmp_path / "tree.json").read_text())
    assert {"id", "parent", "C", "Q", "score", "depth"} <= set(tree["nodes"][0])


def test_igr_transcript(tmp_path):
    synthetic_run(tmp_path, "igr", seed=4, max_nodes=12, k=4, m=3)
    records = read_jsonl(tmp_path / "chains.jsonl")
    ideas = [r for r in records if r["event"] == "idea"]
    steps = [r for r in records if r["event"] == "step"]
    assert len(ideas) == 4 and len(steps) == 12
    assert all({"prompt", "response", "score"} <= set(s) for s in steps)


def test_token_totals_are_additive(tmp_path):
    synthetic_run(tmp_path, "mcts", seed=2, max_nodes=15, summaries=True)
    usage = read_jsonl(tmp_path / "usage.jsonl")
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["tokens"]["prompt"] == sum(u["prompt_tokens"] for u in usage)
    assert summary["tokens"]["completion"] == sum(u["completion_tokens"] for u in usage)
    assert summary["llm_calls"] == len(usage)


def test_nodes_to_solve_helpers():
    nodes = [{"id": f"n{i}", "score": s} for i, s in enumerate([0.1, 0.5, 1.0, 1.0], 1)]
    assert nodes_to_solve(nodes) == 3
    assert nodes_to_solve(nodes, is_gen=False) is None
    assert summarize(nodes[:2], [])["nodes_to_solve"] is None


# ------------------------------------------------------------ sweep

def test_clock_sweep_runs_five_independent_periods(tmp_path):
    config = RunConfig(strategy="mcts", backend="synthetic", llm="mock", landscape="ppa", max_nodes=10,
                       clock_sweep=(3, 4, 5, 6, 7), summaries=False)
    assert run_from_config(config, tmp_path) == EXIT_OK
    sweep = json.loads((tmp_path / "sweep.json").read_text())
    assert [s["clock_period_ns"] for s in sweep] == [3, 4, 5, 6, 7]
    for p in (3, 4, 5, 6, 7):
        d = tmp_path / f"clk-{p}ns"
        meta = json.loads((d / "run.json").read_text())
        assert meta["problem"]["clock_period_ns"] == p
        assert len(read_jsonl(d / "nodes.jsonl")) == 10
    # each period starts from a fresh model: same seed candidate, score scaled by the period
    s3 = read_jsonl(tmp_path / "clk-3ns" / "nodes.jsonl")
    s6 = read_jsonl(tmp_path / "clk-6ns" / "nodes.jsonl")
    assert s3[0]["code"] == s6[0]["code"]
    assert s6[0]["score"] == 2 * s3[0]["score"]


def test_clock_sweep_rejected_for_gen(tmp_path):
    config = RunConfig(backend="synthetic", clock_sweep=(3, 4))
    assert run_from_config(config, tmp_path) == EXIT_CONFIG


# ------------------------------------------------------------ failures and resume

def test_auth_failure_exits_before_any_node(tmp_path):
    def fn(bundle):
        raise AuthError("bad key")

    r = gen_run(tmp_path, CallbackMock(fn))
    assert r.exit_code == EXIT_CONFIG and r.archive.node_count == 0
    meta = json.loads((tmp_path / "run.json").read_text())
    assert meta["status"] == "failed" and "bad key" in meta["error"]


class DyingBackend(SyntheticBackend):
    def __init__(self, die_after, **kw):
        super().__init__(**kw)
        self.left = die_after

    def run_sim(self, *a, **kw):
        if self.left == 0:
            raise BackendError("simulator crashed")
        self.left -= 1
        return super().run_sim(*a, **kw)


def test_backend_outage_checkpoints_and_resumes(tmp_path):
    spec = synthetic_problem("ppa", 8, max_nodes=30)
    config = RunConfig(strategy="mcts", backend="synthetic", landscape="ppa", seed=3, summaries=False)
    backend = DyingBackend(12, landscape="ppa", seed=3)
    r = Run(spec, config, backend, MutationMock(3), backend.make_bundle(spec), tmp_path)
    assert r.execute() == EXIT_BACKEND
    assert len(read_jsonl(tmp_path / "nodes.jsonl")) == 12
    assert json.loads((tmp_path / "run.json").read_text())["status"] == "failed"
    before = (tmp_path / "nodes.jsonl").read_text()

    backend = SyntheticBackend("ppa", seed=3)
    r2 = Run(spec, config, backend, MutationMock(3), backend.make_bundle(spec), tmp_path, resume=True)
    assert r2.archive.node_count == 12
    assert r2.execute() == EXIT_OK
    nodes = read_jsonl(tmp_path / "nodes.jsonl")
    assert len(nodes) == 30
    assert (tmp_path / "nodes.jsonl").read_text().startswith(before)
    assert r2.archive.best.score == max(n["score"] for n in nodes)
    assert r2.strategy.tree.root.visits == 29


def test_transport_outage_is_backend_failure(tmp_path):
    calls = {"n": 0}

    def fn(bundle):
        calls["n"] += 1
        if calls["n"] > 5:
            raise TransportError("connection reset")
        return "```\nbits = 00000000\n```"

    r = gen_run(tmp_path, CallbackMock(fn), summaries=False)
    assert r.exit_code == EXIT_BACKEND and r.archive.node_count == 5


def test_resume_rejects_changed_config(tmp_path):
    synthetic_run(tmp_path, "mcts", seed=1, max_nodes=5)
    spec = synthetic_problem("hamming", 8)
    backend = SyntheticBackend("hamming", seed=1)
    with pytest.raises(ConfigError, match="different configuration"):
        Run(spec, RunConfig(strategy="random", backend="synthetic", seed=1, summaries=False), backend,
            MutationMock(1), backend.make_bundle(spec), tmp_path, resume=True)


def test_igr_resume_keeps_ideas(tmp_path):
    spec = synthetic_problem("ppa", 8, max_nodes=20)
    config = RunConfig(strategy="igr", backend="synthetic", landscape="ppa", k=4, m=5, summaries=False)
    backend = DyingBackend(9, landscape="ppa")
    assert Run(spec, config, backend, MutationMock(), backend.make_bundle(spec), tmp_path).execute() == EXIT_BACKEND
    backend = SyntheticBackend("ppa")
    llm = MutationMock()
    r = Run(spec, config, backend, llm, backend.make_bundle(spec), tmp_path, resume=True)
    assert r.execute() == EXIT_OK
    assert r.archive.node_count == 20
    assert not any(b.purpose is Purpose.IDEA_GEN for b, _ in llm.calls)
    for chain in r.strategy.chains:
        assert len(chain.nodes) == 5
        for prev, nxt in zip(chain.nodes, chain.nodes[1:]):
            assert nxt.parent_id == prev.id


# ------------------------------------------------------------ determinism

def test_two_runs_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        synthetic_run(tmp_path / name, "igr", seed=9, max_nodes=40, k=8, m=5, keep_workdirs=True, summaries=True)
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel
