from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

_RESULT = re.compile(r"^STG_RESULT\b.*$", re.M)
_RESULT_EXACT = re.compile(r"^STG_RESULT pass=(\d+) total=(\d+)[ \t]*\r?$")
_CYCLES = re.compile(r"^STG_CYCLES n=(\d+)[ \t]*\r?$", re.M)
_FAIL = re.compile(r"^STG_FAIL t=(\S+) sig=(\S+) exp=(\S+) got=(\S+)[ \t]*\r?$", re.M)


@dataclass(frozen=True)
class FailLine:
    time: str
    signal: str
    expected: str
    observed: str


@dataclass(frozen=True)
class SimLog:
    pass_count: int
    total: int
    sim_ok: bool
    cycles: Optional[int] = None
    failures: tuple[FailLine, ...] = field(default=())

    @property
    def p_stg(self) -> Optional[float]:
        return self.pass_count / self.total if self.sim_ok else None


def parse_sim_log(stdout: str, returncode: int = 0) -> SimLog:
    """Read the summary protocol printed by an STG (or user) testbench."""
    stdout = stdout or ""
    failures = tuple(FailLine(*m.groups()) for m in _FAIL.finditer(stdout))
    cyc = _CYCLES.findall(stdout)
    cycles = int(cyc[-1]) if cyc else None
    lines = _RESULT.findall(stdout)
    if returncode != 0 or len(lines) != 1:
        return SimLog(0, 0, False, cycles, failures)
    m = _RESULT_EXACT.match(lines[0])
    if not m:
        return SimLog(0, 0, False, cycles, failures)
    passed, total = int(m.group(1)), int(m.group(2))
    if total == 0 or passed > total:
        return SimLog(0, 0, False, cycles, failures)
    return SimLog(passed, total, True, cycles, failures)
