"""Parsers for yosys synthesis logs."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

TRANSISTORS_PER_GE = 4  # one two-input NAND

# Gate-equivalent cost per internal cell, in CMOS transistors / 4. Values for
# the combinational cells and plain flops match yosys' own cmos cost model so
# the two estimates agree whenever yosys knows every cell; the async-reset
# flops and latches, which yosys leaves uncosted, use fixed textbook sizes.
GE_COST = {
    "$_BUF_": 0.25, "$_NOT_": 0.5,
    "$_NAND_": 1.0, "$_NOR_": 1.0,
    "$_AND_": 1.5, "$_OR_": 1.5, "$_ANDNOT_": 1.5, "$_ORNOT_": 1.5,
    "$_AOI3_": 1.5, "$_OAI3_": 1.5, "$_AOI4_": 2.0, "$_OAI4_": 2.0,
    "$_XOR_": 3.0, "$_XNOR_": 3.0, "$_MUX_": 3.0, "$_NMUX_": 2.5,
    "$_DFF_P_": 4.0, "$_DFF_N_": 4.0,
    "$_DFF_PN0_": 6.0, "$_DFF_PN1_": 6.0, "$_DFF_PP0_": 6.0, "$_DFF_PP1_": 6.0,
    "$_DFF_NN0_": 6.0, "$_DFF_NN1_": 6.0, "$_DFF_NP0_": 6.0, "$_DFF_NP1_": 6.0,
    "$_DLATCH_P_": 2.5, "$_DLATCH_N_": 2.5,
}

_CHIP_AREA = re.compile(r"Chip area for (?:top )?module '\\?([^']+)':\s*([0-9.eE+-]+)")
_TRANSISTORS = re.compile(r"Estimated number of transistors:\s*(\d+)(\+?)")
_ABC_DELAY = re.compile(r"Delay\s*=\s*([0-9.eE+-]+)\s*ps")
_STAT_HEADER = re.compile(r"^(?:\d+(?:\.\d+)*\.\s+)?Printing statistics\.", re.M)
_CELL_ROW = re.compile(r"^\s+(\d+)\s+(\$_\w+_)\s*$", re.M)


class SynthParseError(ValueError):
    pass


@dataclass(frozen=True)
class AreaReport:
    value: float
    unit: str  # "um2" with a liberty file, "GE" otherwise
    cells: Optional[dict] = None


def cell_counts(log: str) -> Optional[dict]:
    """Cell histogram of the last statistics block, or None if there is none."""
    heads = list(_STAT_HEADER.finditer(log or ""))
    if not heads:
        return None
    block = log[heads[-1].end():]
    end = block.find("End of script")
    if end >= 0:
        block = block[:end]
    counts: dict = {}
    for n, cell in _CELL_ROW.findall(block):
        counts[cell] = counts.get(cell, 0) + int(n)
    return counts


def gate_equivalents(counts: dict) -> float:
    unknown = sorted(c for c in counts if c not in GE_COST)
    if unknown:
        raise SynthParseError("no gate-equivalent cost for cells: " + ", ".join(unknown))
    return sum(GE_COST[c] * n for c, n in counts.items())


def parse_area(log: str) -> AreaReport:
    """Pull the cell-area statistic out of a yosys log.

    Prefers the liberty ``Chip area`` line. Without one, the final cell
    histogram is priced in NAND2 gate equivalents; an empty final statistics
    block (a design with no cells) is area zero.
    """
    log = log or ""
    areas = _CHIP_AREA.findall(log)
    if areas:
        return AreaReport(float(areas[-1][1]), "um2")
    counts = cell_counts(log)
    if counts is not None:
        return AreaReport(gate_equivalents(counts), "GE", counts)
    raise SynthParseError("no area statistic found in synthesis log")


def parse_transistor_estimate(log: str) -> Optional[tuple[int, bool]]:
    """yosys' own CMOS estimate as (count, complete)."""
    hits = _TRANSISTORS.findall(log or "")
    if not hits:
        return None
    n, plus = hits[-1]
    return int(n), not plus


def parse_critical_path_ns(log: str) -> Optional[float]:
    delays = _ABC_DELAY.findall(log or "")
    return float(delays[-1]) / 1000.0 if delays else None
