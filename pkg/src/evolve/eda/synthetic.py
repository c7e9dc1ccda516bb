"""A tool-free backend with a published fitness landscape.

Candidates are tiny text blocks such as ``bits = 10110010``. The ``hamming``
landscape scores a generation task by the fraction of bits agreeing with a
seeded target; ``ppa`` treats every well-formed candidate as functionally
correct and derives area from the first half of the bits and cycle count from
the second, so the optimum is the target itself.
"""

from __future__ import annotations

import random
import re
from pathlib import Path
from typing import Optional

from ..core import ProblemSpec
from ..evaluator import SimResult, SynthResult
from ..stg import StimulusPlan, TestbenchBundle
from ..stg.results import FailLine

LANDSCAPES = ("hamming", "ppa")
PPA_BASE_AREA = 1000.0
PPA_AREA_STEP = 250.0
PPA_BASE_CYCLES = 10
PPA_CYCLE_STEP = 4

_BITS = re.compile(r"^\s*bits\s*=\s*([01]+)\s*;?\s*$", re.M)


def format_candidate(bits: str) -> str:
    return f"bits = {bits}\n"


def parse_candidate(code: str, width: int) -> Optional[str]:
    found = _BITS.findall(code or "")
    if len(found) != 1 or len(found[0]) != width:
        return None
    return found[0]


def hamming(a: str, b: str) -> int:
    return sum(x != y for x, y in zip(a, b))


class SyntheticBackend:
    def __init__(self, landscape: str = "hamming", seed: int = 0, width: int = 8, target: Optional[str] = None):
        if landscape not in LANDSCAPES:
            raise ValueError(f"unknown landscape {landscape!r}; pick one of {', '.join(LANDSCAPES)}")
        if width < 2:
            raise ValueError("width must be at least 2")
        if target is None:
            target = format(random.Random(f"target:{seed}").getrandbits(width), f"0{width}b")
        if len(target) != width or set(target) - {"0", "1"}:
            raise ValueError(f"target must be a {width}-bit binary string")
        self.landscape, self.seed, self.width, self.target = landscape, seed, width, target

    def ppa(self, bits: str) -> tuple[float, int]:
        half = self.width // 2
        area = PPA_BASE_AREA + PPA_AREA_STEP * hamming(bits[:half], self.target[:half])
        cycles = PPA_BASE_CYCLES + PPA_CYCLE_STEP * hamming(bits[half:], self.target[half:])
        return area, cycles

    def make_bundle(self, spec: ProblemSpec) -> TestbenchBundle:
        return TestbenchBundle(
            ports=(), plan=StimulusPlan((), (), {}, seed=self.seed), source="// synthetic landscape\n",
            total_vectors=self.width, clock_period_ns=spec.clock_period_ns, brief_delay_ns=0.0,
        )

    def run_sim(self, code: str, bundle: TestbenchBundle, spec: ProblemSpec,
                workdir: Optional[Path] = None) -> SimResult:
        result = self._sim(code)
        if workdir is not None:
            wd = Path(workdir)
            (wd / "dut.v").write_text(code)
            (wd / "tb.v").write_text(bundle.source)
            (wd / "sim.log").write_text(
                result.stderr + "\n" if not result.compile_ok
                else f"STG_CYCLES n={result.cycles}\nSTG_RESULT pass={result.pass_count} total={result.total}\n")
        return result

    def _sim(self, code: str) -> SimResult:
        bits = parse_candidate(code, self.width)
        if bits is None:
            return SimResult(False, False, stderr=f"expected exactly one line 'bits = <{self.width} binary digits>'")
        if self.landscape == "ppa":
            _, cycles = self.ppa(bits)
            return SimResult(True, True, self.width, self.width, cycles)
        failures = tuple(FailLine(str(i), f"bit[{i}]", t, b)
                         for i, (t, b) in enumerate(zip(self.target, bits)) if t != b)
        return SimResult(True, True, self.width - len(failures), self.width, self.width, failures=failures)

    def run_synth(self, code: str, spec: ProblemSpec, workdir: Optional[Path] = None) -> SynthResult:
        bits = parse_candidate(code, self.width)
        if bits is None:
            result = SynthResult(None, False, log="unparsable candidate")
        else:
            area, _ = self.ppa(bits)
            result = SynthResult(area, True, log=f"synthetic area {area:g}\n")
        if workdir is not None:
            (Path(workdir) / "synth.log").write_text(result.log)
        return result
