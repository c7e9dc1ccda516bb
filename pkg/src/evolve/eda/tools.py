"""Tool discovery for the open-source flow."""

from __future__ import annotations

import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..evaluator import ConfigError

SIM_CANDIDATES = ("iverilog", "verilator", "verilator-cli")
SYNTH_CANDIDATES = ("yosys", "yowasp-yosys")

ENV_SIM = "EVOLVE_SIM"
ENV_VVP = "EVOLVE_VVP"
ENV_SYNTH = "EVOLVE_SYNTH"
ENV_LIBERTY = "EVOLVE_LIBERTY"


@dataclass(frozen=True)
class ToolConfig:
    sim_cmd: str
    synth_cmd: Optional[str]
    liberty: Optional[str] = None
    scratch_root: Optional[Path] = None
    parallel_limit: int = os.cpu_count() or 1
    vvp_cmd: Optional[str] = None
    sim_timeout_s: float = 60.0
    compile_timeout_s: float = 300.0
    synth_timeout_s: float = 300.0

    @property
    def simulator(self) -> str:
        """``iverilog`` or ``verilator``, judged from the command name."""
        return "verilator" if "verilator" in Path(self.sim_cmd).name else "iverilog"

    def scratch(self) -> Path:
        root = self.scratch_root or Path(tempfile.gettempdir()) / "evolve-scratch"
        root.mkdir(parents=True, exist_ok=True)
        return root


def _which(cmd: str, label: str) -> str:
    found = shutil.which(cmd)
    if found is None:
        raise ConfigError(f"{label} '{cmd}' not found on PATH")
    return found


def _first(names) -> Optional[str]:
    for n in names:
        path = shutil.which(n)
        if path:
            return path
    return None


def resolve_tools(
    sim_cmd: Optional[str] = None,
    synth_cmd: Optional[str] = None,
    liberty: Optional[str] = None,
    need_synth: bool = True,
    **kwargs,
) -> ToolConfig:
    """Find the simulator and synthesizer, honouring env overrides.

    Raises ConfigError up front so a run never starts with a missing tool.
    """
    sim_cmd = sim_cmd or os.environ.get(ENV_SIM)
    synth_cmd = synth_cmd or os.environ.get(ENV_SYNTH)
    liberty = liberty or os.environ.get(ENV_LIBERTY) or None

    if sim_cmd:
        sim = _which(sim_cmd, "simulator")
    else:
        sim = _first(SIM_CANDIDATES)
        if sim is None:
            raise ConfigError("no Verilog simulator found (tried %s; set %s)" % (", ".join(SIM_CANDIDATES), ENV_SIM))

    vvp = None
    if "verilator" not in Path(sim).name:
        vvp_name = os.environ.get(ENV_VVP) or str(Path(sim).with_name("vvp"))
        vvp = shutil.which(vvp_name) or shutil.which("vvp")
        if vvp is None:
            raise ConfigError(f"iverilog found at {sim} but its runtime 'vvp' is missing (set {ENV_VVP})")

    synth = None
    if synth_cmd:
        synth = _which(synth_cmd, "synthesizer")
    elif need_synth:
        synth = _first(SYNTH_CANDIDATES)
        if synth is None:
            raise ConfigError("no yosys found (tried %s; set %s)" % (", ".join(SYNTH_CANDIDATES), ENV_SYNTH))

    if liberty and not Path(liberty).is_file():
        raise ConfigError(f"liberty file {liberty} does not exist")
    return ToolConfig(sim_cmd=sim, synth_cmd=synth, liberty=liberty, vvp_cmd=vvp, **kwargs)
