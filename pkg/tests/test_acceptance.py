"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) and then
asserts. Criteria 7 and 8 are measured honestly and currently fall short on
this landscape; they are strict expected failures so an unexpected pass is
reported too.
"""
import json
import math
import random
import time
from fractions import Fraction
from statistics import mean

import pytest

from evolve.core import score_generation, score_optimization
from evolve.eda import OpenSourceBackend, SyntheticBackend, resolve_tools
from evolve.evaluator import evaluate
from evolve.llm import CallbackMock
from evolve.llm.prompts import Purpose
from evolve.orchestrator import Run, RunConfig
from evolve.problem import synthetic_problem
from evolve.search import MctsTree, TreeNode, uct_score
from evolve.stg import corner_patterns, generate_testbench

from conftest import ADDER, needs_sim, record_criterion, synthetic_run
from test_search import UCT_CASES, mk, random_tree_ops, uct_oracle
from test_stg import GOLDEN_80, mk_source, scan_checks

SEEDS = range(20)
BUDGET = 300


def test_criterion_1_formula_fidelity():
    t0 = time.perf_counter()
    area, cycles, period = 269657, 362, 4
    latency = cycles * period
    at = area * latency
    exact = -Fraction(at, 10**5)
    checks = [
        latency == 1448,
        at == 390463336,
        score_optimization(area, latency, True, 1e5, -1e5) == float(exact) == -3904.63336,
        score_optimization(257906, 320 * 4, True, 1e5, -1e5) == float(-Fraction(257906 * 1280, 10**5)),
        257906 * 1280 == 330119680,
        score_optimization(1e5, 1, True, 1e5, -1e5) == -1.0,
        score_optimization(5, 5, False, 1e5, -1e5) == -1e5,
        score_generation(7, 10, True, -1e5) == 0.7,
        score_generation(3, 10, False, -1e5) == -1e5,
        score_generation(10, 10, True, -1e5) == 1.0,
    ]
    elapsed = time.perf_counter() - t0
    ok = all(checks) and elapsed < 1.0
    record_criterion(1, "formula fidelity", ok, f"{sum(checks)}/{len(checks)} exact, {elapsed * 1000:.1f} ms")
    assert ok


def test_criterion_2_uct_fidelity():
    worst = 0.0
    both_branches = {math.isinf(e) for *_, e in UCT_CASES} == {True, False}
    guard = any(Cp == 0 for _, Cc, Cp, _, _ in UCT_CASES if Cc)
    for Q, Cc, Cp, c, expected in UCT_CASES:
        got = uct_score(TreeNode(mk(0), visits=Cp, quality=0.0), TreeNode(mk(1), visits=Cc, quality=Q), c)
        for ref in (expected, uct_oracle(Q, Cc, Cp, c)):
            if math.isinf(ref):
                worst = max(worst, 0.0 if got == ref else math.inf)
            else:
                worst = max(worst, abs(got - ref))
    ok = len(UCT_CASES) >= 20 and both_branches and guard and worst <= 1e-12
    record_criterion(2, "UCT fidelity", ok, f"{len(UCT_CASES)} cases, max error {worst:.1e}")
    assert ok


def test_criterion_3_backprop_invariant():
    bad = []
    for seed in range(10):
        tree, routed = random_tree_ops(seed, 1000)
        if tree.root.visits != 1000:
            bad.append((seed, "root"))
        for nid, t in tree.nodes.items():
            if t.visits != len(routed[nid]) or t.quality != sum(routed[nid]):
                bad.append((seed, nid))
    ok = not bad
    record_criterion(3, "backpropagation invariant", ok, f"10 random trees x 1000 ops, {len(bad)} violations")
    assert ok


def _never_solving_mock():
    def fn(bundle):
        if bundle.purpose is Purpose.IDEA_GEN:
            return f"idea {bundle.metadata['idea_index']}"
        if bundle.purpose is Purpose.SUMMARY:
            return "summary"
        if bundle.metadata.get("edit_mode"):
            return "<<<SEARCH\nbits = 00000000\n====\nbits = 00000000\n>>>REPLACE\n"
        return "```\nbits = 00000000\n```"
    return CallbackMock(fn)


def test_criterion_4_budget_exactness(tmp_path):
    spec = synthetic_problem("hamming", 8, max_nodes=BUDGET)
    backend = SyntheticBackend("hamming", target="11111111")
    run = Run(spec, RunConfig(strategy="igr", backend="synthetic", k=60, m=5, summaries=False), backend,
              _never_solving_mock(), backend.make_bundle(spec), tmp_path / "igr")
    run.execute()
    igr_nodes = run.archive.node_count

    mcts_sizes = [len(synthetic_run(tmp_path / f"m{s}", "mcts", seed=s, max_nodes=m).nodes)
                  for s, m in ((0, 1), (1, 7), (2, 60))]
    mcts_ok = all(n <= m for n, m in zip(mcts_sizes, (1, 7, 60)))

    opt_sizes = []
    for strategy in ("mcts", "igr"):
        ospec = synthetic_problem("ppa", 8, max_nodes=40)
        ob = SyntheticBackend("ppa", target="00000000")
        extra = {"k": 8, "m": 5} if strategy == "igr" else {}
        orun = Run(ospec, RunConfig(strategy=strategy, backend="synthetic", landscape="ppa", summaries=False,
                                    **extra), ob, _never_solving_mock(), ob.make_bundle(ospec),
                   tmp_path / f"opt-{strategy}")
        orun.execute()
        opt_sizes.append(orun.archive.node_count)

    ok = igr_nodes == 300 and mcts_ok and opt_sizes == [40, 40]
    record_criterion(4, "budget exactness", ok,
                     f"IGR 60x5 -> {igr_nodes}, MCTS {mcts_sizes}, Opt {opt_sizes}")
    assert ok


def test_criterion_5_stg_determinism_and_coverage():
    a = generate_testbench(GOLDEN_80, "blk", 10.0, seed=5).source
    b = generate_testbench(GOLDEN_80, "blk", 10.0, seed=5).source
    problems = []
    rng = random.Random(5)
    for trial in range(25):
        controls = [(n, rng.randint(1, 8)) for n in rng.sample(["mode", "sel", "en", "op_mode"], rng.randint(0, 3))]
        datas = [rng.randint(2, 48) for _ in range(rng.randint(1, 2))]
        decls = [f"input [{w - 1}:0] {n}" for n, w in controls]
        decls += [f"input [{w - 1}:0] data{i}" for i, w in enumerate(datas)]
        golden = mk_source(*decls, "output y", name="p_ref")
        checks = scan_checks(generate_testbench(golden, "p", 10.0, seed=trial).source)
        for n, w in controls:
            if {c[n] for c in checks} != set(range(1 << w)):
                problems.append((trial, n))
        for i, w in enumerate(datas):
            if not set(corner_patterns(w)) <= {c[f"data{i}"] for c in checks}:
                problems.append((trial, f"data{i}"))
    ok = a == b and not problems
    record_criterion(5, "STG determinism and coverage", ok, f"25 random interfaces, {len(problems)} gaps")
    assert ok


@pytest.mark.eda
@needs_sim
def test_criterion_6_stg_end_to_end(tmp_path):
    from evolve.core import Kind, ProblemSpec, TaskKind

    t0 = time.perf_counter()
    golden = (ADDER / "golden.v").read_text()
    spec = ProblemSpec("adder4", "4-bit adder", TaskKind(Kind.GEN), golden, "adder4", clock_period_ns=10.0)
    backend = OpenSourceBackend(resolve_tools(need_synth=False))
    bundle = generate_testbench(golden, "adder4", 10.0)
    good = evaluate((ADDER / "good.v").read_text(), spec, bundle, backend, workdir=tmp_path / "good")
    bad = evaluate((ADDER / "wrong_carry.v").read_text(), spec, bundle, backend, workdir=tmp_path / "bad")
    elapsed = time.perf_counter() - t0
    ok = good.score == 1.0 and 0 < bad.score < 1 and elapsed < 30
    record_criterion(6, "STG end to end", ok,
                     f"good {good.score}, wrong carry {bad.score:.4f}, {elapsed:.1f} s")
    assert ok


def _nodes_to_solve(run):
    for i, n in enumerate(run.nodes, 1):
        if n.score >= 1.0:
            return i
    return None


def _campaign(tmp_path, tag, strategy="mcts", **config):
    """Nodes-to-solve per seed; an unsolved seed counts as the full budget."""
    out = []
    for s in SEEDS:
        out.append(_nodes_to_solve(synthetic_run(tmp_path / f"{tag}{s}", strategy, seed=s, max_nodes=BUDGET,
                                                 **config)))
    return out


def _mean_cost(results):
    return mean(BUDGET if r is None else r for r in results)


@pytest.mark.xfail(strict=True, reason="MCTS at c=1.4 solves about 55% of seeds on the bit-flip landscape")
def test_criterion_7_search_efficacy(tmp_path):
    t0 = time.perf_counter()
    mcts = _campaign(tmp_path, "mcts")
    rand = _campaign(tmp_path, "rand", "random")
    elapsed = time.perf_counter() - t0
    solved = sum(r is not None for r in mcts)
    m_mean, r_mean = _mean_cost(mcts), _mean_cost(rand)
    ok = solved >= 0.9 * len(SEEDS) and m_mean < r_mean and elapsed < 60
    record_criterion(7, "search efficacy on synthetic oracle", ok,
                     f"MCTS solved {solved}/20, mean nodes {m_mean:.2f} vs random {r_mean:.2f}, {elapsed:.1f} s")
    assert ok


@pytest.mark.xfail(strict=True, reason="fine-grained feedback helps, but by less than 30% here")
def test_criterion_8_convergence_efficiency(tmp_path):
    fine = _mean_cost(_campaign(tmp_path, "fine"))
    binary = _mean_cost(_campaign(tmp_path, "bin", binary_feedback=True))
    reduction = 1 - fine / binary
    ok = reduction >= 0.30
    record_criterion(8, "convergence efficiency", ok,
                     f"mean nodes {fine:.2f} fine vs {binary:.2f} binary, reduction {reduction:.1%}")
    assert ok


def test_criterion_9_determinism(tmp_path):
    trees = {}
    for name in ("a", "b"):
        synthetic_run(tmp_path / name, "mcts", seed=4, max_nodes=60, keep_workdirs=True, summaries=True)
        root = tmp_path / name
        trees[name] = {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
    ok = trees["a"] == trees["b"] and len(trees["a"]) > 5
    record_criterion(9, "determinism", ok, f"{len(trees['a'])} persisted files compared")
    assert ok
