import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
ADDER = FIXTURES / "adder"


def have_simulator() -> bool:
    return any(shutil.which(t) for t in ("iverilog", "verilator", "verilator-cli"))


def have_yosys() -> bool:
    return any(shutil.which(t) for t in ("yosys", "yowasp-yosys"))


needs_sim = pytest.mark.skipif(not have_simulator(), reason="no Verilog simulator on PATH")
needs_yosys = pytest.mark.skipif(not have_yosys(), reason="no yosys on PATH")


@pytest.fixture
def adder_golden():
    return (ADDER / "golden.v").read_text()


@pytest.fixture
def adder_sources():
    return {p.stem: p.read_text() for p in ADDER.glob("*.v")}


def synthetic_run(out_dir, strategy="mcts", seed=0, max_nodes=300, keep_workdirs=False, **config):
    """One hamming-landscape run with the bit-flip mock; returns the finished Run."""
    from evolve.eda import SyntheticBackend
    from evolve.llm import MutationMock
    from evolve.orchestrator import Run, RunConfig
    from evolve.problem import synthetic_problem

    config.setdefault("summaries", False)
    spec = synthetic_problem("hamming", 8, max_nodes=max_nodes)
    backend = SyntheticBackend("hamming", seed=seed)
    cfg = RunConfig(strategy=strategy, backend="synthetic", seed=seed, **config)
    run = Run(spec, cfg, backend, MutationMock(seed), backend.make_bundle(spec), out_dir,
              keep_workdirs=keep_workdirs)
    run.exit_code = run.execute()
    return run


ACCEPTANCE: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> bool:
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
