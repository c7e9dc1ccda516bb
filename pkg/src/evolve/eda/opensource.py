"""Subprocess drivers for the open-source flow (iverilog or verilator, yosys)."""

from __future__ import annotations

import hashlib
import logging
import os
import re
import shutil
import signal
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from ..core import ProblemSpec
from ..evaluator import BackendError, SimResult, SynthResult, excerpt
from ..stg import TestbenchBundle, parse_sim_log
from ..stg.emit import TB_MODULE
from ..stg.ports import module_names
from .reports import SynthParseError, parse_area, parse_critical_path_ns
from .tools import ToolConfig

log = logging.getLogger(__name__)

SYNTH_SCRIPT_VERSION = 1
GOLDEN_SUFFIX = "__golden"

VERILATOR_FLAGS = ("--binary", "--timing", "-Wno-fatal", "-Wno-lint", "-Wno-style")

GE_MAPPING = ("dfflegalize -cell $_DFF_P_ 01 -cell $_DFF_N_ 01"
              " -cell $_DFF_PN0_ 01 -cell $_DFF_PN1_ 01 -cell $_DFF_PP0_ 01 -cell $_DFF_PP1_ 01"
              " -cell $_DLATCH_P_ 01 -cell $_DLATCH_N_ 01\n"
              "abc -g cmos3")

def synth_template() -> str:
    return resources.files(__package__).joinpath("synth.ys").read_text()


def render_synth_script(dut: str, top: str, clock_period_ns: float, liberty: Optional[str] = None) -> str:
    if liberty:
        period_ps = int(round(clock_period_ns * 1000))
        mapping = f"dfflibmap -liberty {liberty}\nabc -liberty {liberty} -D {period_ps}"
        stat_args = f"-liberty {liberty}"
    else:
        mapping, stat_args = GE_MAPPING, "-tech cmos"
    return synth_template().format(dut=dut, top=top, mapping=mapping, stat_args=stat_args)


def testbench_top(source: str) -> str:
    """Name of the first module in a testbench (``stg_tb`` for generated ones)."""
    found = module_names(source)
    return found[0] if found else TB_MODULE


def isolate_reference(golden_source: str, ref_module: str) -> str:
    """Rename the reference's helper modules so they cannot clash with the DUT's.

    A golden file often carries submodules (``full_adder`` and friends) that a
    candidate defines too; compiling both would be a duplicate-module error.
    """
    names = set(module_names(golden_source)) - {ref_module}
    out = golden_source
    for name in sorted(names, key=len, reverse=True):
        out = re.sub(rf"(?<![\w$]){re.escape(name)}(?![\w$])", name + GOLDEN_SUFFIX, out)
    return out


@dataclass
class _Proc:
    returncode: int
    stdout: str
    stderr: str
    timed_out: bool
    ms: int


def _run(cmd: list[str], cwd: Path, timeout: float, env: Optional[dict] = None) -> _Proc:
    """Run ``cmd`` in its own process group; the whole group dies on timeout."""
    t0 = time.monotonic()
    p = subprocess.Popen(cmd, cwd=cwd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
                         errors="replace", start_new_session=True, env=env)
    try:
        out, err = p.communicate(timeout=timeout)
        timed_out = False
    except subprocess.TimeoutExpired:
        try:
            os.killpg(p.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, err = p.communicate()
        timed_out = True
    return _Proc(p.returncode, out or "", err or "", timed_out, int((time.monotonic() - t0) * 1000))


class OpenSourceBackend:
    """EvalBackend over real tools.

    At most ``config.parallel_limit`` tool invocations run at once; callers
    beyond that block at the admission gate.
    """

    def __init__(self, config: ToolConfig):
        self.config = config
        self._gate = threading.BoundedSemaphore(max(1, config.parallel_limit))
        self._runtime_dir: Optional[Path] = None
        if config.synth_cmd and not config.liberty:
            log.warning("no cell library configured; area in gate equivalents, timing assumed met")

    def _workdir(self, workdir: Optional[Path]) -> Path:
        if workdir is None:
            return Path(tempfile.mkdtemp(prefix="cand-", dir=self.config.scratch()))
        workdir = Path(workdir)
        workdir.mkdir(parents=True, exist_ok=True)
        return workdir

    def _runtime_cache(self) -> Path:
        """Directory holding verilator's compiled runtime for this tool version.

        verilated.cpp and friends do not depend on the design, yet a fresh
        build spends most of its time recompiling them.
        """
        if self._runtime_dir is None:
            ver = _run([self.config.sim_cmd, "--version"], self.config.scratch(), 30)
            key = hashlib.sha256("\0".join([self.config.sim_cmd, ver.stdout, *VERILATOR_FLAGS]).encode())
            self._runtime_dir = self.config.scratch() / f"verilator-runtime-{key.hexdigest()[:16]}"
        return self._runtime_dir

    def _seed_runtime(self, wd: Path) -> list[str]:
        cache = self._runtime_cache()
        if not cache.is_dir():
            return []
        (wd / "obj").mkdir(exist_ok=True)
        names = sorted(p.name for p in cache.glob("verilated*.o"))
        for name in names:
            shutil.copy(cache / name, wd / "obj" / name)
        return names

    def _harvest_runtime(self, wd: Path) -> None:
        cache = self._runtime_cache()
        objs = list((wd / "obj").glob("verilated*.o"))
        if cache.is_dir() or not objs:
            return
        tmp = Path(tempfile.mkdtemp(prefix="runtime-", dir=self.config.scratch()))
        for o in objs:
            shutil.copy(o, tmp / o.name)
        try:
            os.rename(tmp, cache)  # atomic; a concurrent build may win the race
        except OSError:
            shutil.rmtree(tmp, ignore_errors=True)

    def _compile_cmd(self, wd: Path, tb_top: str) -> tuple[list[str], list[str]]:
        files = ["tb.v", "dut.v", "golden.v"]
        if self.config.simulator == "verilator":
            # -o marks the cached runtime objects as up to date for make
            keep = " ".join(f"-o {name}" for name in self._seed_runtime(wd))
            build = [self.config.sim_cmd, *VERILATOR_FLAGS, "--top-module", tb_top, *files,
                     "--Mdir", "obj", "-o", "simv", "-MAKEFLAGS", f"{keep} PYTHON3={sys.executable}".strip()]
            return build, [str(wd / "obj" / "simv")]
        build = [self.config.sim_cmd, "-g2012", "-o", "sim.vvp", "-s", tb_top, *files]
        return build, [self.config.vvp_cmd or "vvp", "-n", "sim.vvp"]

    def run_sim(self, code: str, bundle: TestbenchBundle, spec: ProblemSpec,
                workdir: Optional[Path] = None) -> SimResult:
        wd = self._workdir(workdir)
        (wd / "dut.v").write_text(code)
        (wd / "tb.v").write_text(bundle.source)
        (wd / "golden.v").write_text(isolate_reference(spec.golden_ref, spec.ref_module))
        build, run = self._compile_cmd(wd, testbench_top(bundle.source))
        with self._gate:
            comp = _run(build, wd, self.config.compile_timeout_s)
            compile_log = comp.stdout + comp.stderr
            if comp.timed_out or comp.returncode != 0:
                (wd / "sim.log").write_text(compile_log)
                why = "compile timeout" if comp.timed_out else compile_log
                return SimResult(False, False, stderr=why, timed_out=comp.timed_out, wall_time_ms=comp.ms)
            if self.config.simulator == "verilator":
                self._harvest_runtime(wd)
            sim = _run(run, wd, self.config.sim_timeout_s)
        (wd / "sim.log").write_text(sim.stdout + ("\n" + sim.stderr if sim.stderr else ""))
        wall = comp.ms + sim.ms
        if sim.timed_out:
            return SimResult(True, False, stderr="timeout", timed_out=True, wall_time_ms=wall)
        parsed = parse_sim_log(sim.stdout, sim.returncode)
        stderr = sim.stderr
        if not parsed.sim_ok:
            stderr = (sim.stderr + "\n" + sim.stdout[-2000:]).strip() or "testbench did not report a result"
        return SimResult(True, parsed.sim_ok, parsed.pass_count, parsed.total, parsed.cycles,
                         stderr, False, parsed.failures, wall)

    def run_synth(self, code: str, spec: ProblemSpec, workdir: Optional[Path] = None) -> SynthResult:
        if not self.config.synth_cmd:
            raise BackendError("no synthesizer configured")
        wd = self._workdir(workdir)
        (wd / "dut.v").write_text(code)
        script = render_synth_script("dut.v", spec.top_module, spec.clock_period_ns, self.config.liberty)
        (wd / "synth.ys").write_text(script)
        with self._gate:
            # -l rather than stdout capture: some yosys builds truncate piped output
            proc = _run([self.config.synth_cmd, "-q", "-l", "synth.log", "synth.ys"], wd,
                        self.config.synth_timeout_s)
        text = (wd / "synth.log").read_text(errors="replace") if (wd / "synth.log").exists() else ""
        if proc.timed_out:
            return SynthResult(None, False, True, text, proc.ms, message="synthesis timeout")
        if proc.returncode != 0:
            # the candidate passed simulation but is not synthesizable
            errors = [ln for ln in (text + "\n" + proc.stderr).splitlines() if ln.startswith("ERROR")]
            reason = "\n".join(errors) or excerpt(proc.stderr) or "yosys failed"
            return SynthResult(None, False, False, text, proc.ms, message=reason)
        try:
            area = parse_area(text)
        except SynthParseError as exc:
            raise BackendError(f"cannot read area from {wd / 'synth.log'}: {exc}") from exc
        meets = True
        if self.config.liberty:
            delay = parse_critical_path_ns(text)
            if delay is None:
                log.warning("no critical path reported; assuming timing is met")
            else:
                meets = delay <= spec.clock_period_ns
                if not meets:
                    message = f"critical path {delay:g} ns exceeds the {spec.clock_period_ns:g} ns clock"
                    return SynthResult(area.value, False, False, text, proc.ms, message=message)
        return SynthResult(area.value, meets, False, text, proc.ms)
