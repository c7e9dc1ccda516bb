"""Self-checking testbench emission (plain IEEE 1364-2005 Verilog)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .ports import Direction, Port, StgError, classify_ports, is_clock, is_reset, parse_ports, reset_active_low
from .stimulus import StimulusPlan, plan_stimulus

GENERATOR_VERSION = "evolve-stg 1.0"
RESET_CYCLES = 3
TB_MODULE = "stg_tb"


class StgGenerationError(StgError):
    pass


@dataclass(frozen=True)
class TestbenchBundle:
    ports: tuple[Port, ...]
    plan: StimulusPlan
    source: str
    total_vectors: int
    clock_period_ns: float
    brief_delay_ns: float
    vectors: tuple[dict, ...] = field(default=(), hash=False, repr=False)

    __test__ = False  # not a pytest class

    def check_time(self, index: int) -> float:
        """Simulation time (ns) at which vector ``index`` is compared."""
        return (RESET_CYCLES + index + 0.5) * self.clock_period_ns + self.brief_delay_ns

    def vector_at(self, time_ns: float) -> Optional[int]:
        idx = round((time_ns - self.brief_delay_ns) / self.clock_period_ns - RESET_CYCLES - 0.5)
        return idx if 0 <= idx < len(self.vectors) else None


def _hexlit(width: int, value: int) -> str:
    digits = max(1, math.ceil(width / 4))
    return f"{width}'h{value:0{digits}x}"


def _decl(width: int) -> str:
    return f"[{width - 1}:0] " if width > 1 else ""


def _time(x: float) -> str:
    return format(x, ".6g")


def _port_mismatch(dut: list[Port], ref: list[Port]) -> list[str]:
    a = {p.name: (p.direction, p.width) for p in dut}
    b = {p.name: (p.direction, p.width) for p in ref}
    diffs = []
    for name in sorted(set(a) | set(b)):
        if name not in a:
            diffs.append(f"{name} (only in reference)")
        elif name not in b:
            diffs.append(f"{name} (only in DUT)")
        elif a[name] != b[name]:
            diffs.append(f"{name} (DUT {a[name][0].value}[{a[name][1]}] vs reference {b[name][0].value}[{b[name][1]}])")
    return diffs


def emit_testbench(
    ports: list[Port],
    plan: StimulusPlan,
    top_module: str,
    golden_source: str,
    clock_period_ns: float,
    ref_module: Optional[str] = None,
) -> TestbenchBundle:
    """Render a testbench running ``top_module`` and its reference side by side.

    Both instances share one clock; reset is held for three cycles, then each
    planned vector is driven on a falling edge and every output compared
    shortly after the next rising edge. The first comparison after reset
    release doubles as the post-reset check.
    """
    ref_module = ref_module or f"{top_module}_ref"
    if any(p.direction is Direction.INOUT for p in ports):
        bad = ", ".join(p.name for p in ports if p.direction is Direction.INOUT)
        raise StgGenerationError(f"inout ports are not supported: {bad}")
    ref_ports = parse_ports(golden_source, ref_module)
    diffs = _port_mismatch(ports, ref_ports)
    if diffs:
        raise StgGenerationError("port mismatch between DUT and reference: " + "; ".join(diffs))
    if any(p.category is None for p in ports):
        ports = classify_ports(ports)

    period = float(clock_period_ns)
    half = period / 2
    delay = min(1.0, period / 4)
    vectors = plan.vectors()

    inputs = [p for p in ports if p.direction is Direction.IN]
    outputs = [p for p in ports if p.direction is Direction.OUT]
    clocks = [p for p in inputs if is_clock(p)]
    resets = [p for p in inputs if is_reset(p)]
    driven = [p for p in inputs if p not in clocks and p not in resets]
    width = {p.name: p.width for p in ports}

    def reset_level(p: Port, asserted: bool) -> str:
        return "1'b0" if reset_active_low(p) == asserted else "1'b1"

    L: list[str] = []
    w = L.append
    w(f"// Generated by {GENERATOR_VERSION}; seed={plan.seed}; vectors={len(vectors)}")
    w(f"// DUT {top_module} checked against {ref_module}")
    w("`timescale 1ns/1ps")
    w(f"module {TB_MODULE};")
    w("  reg stg_clk;")
    for p in resets + driven:
        w(f"  reg {_decl(p.width)}{p.name};")
    for p in outputs:
        w(f"  wire {_decl(p.width)}{p.name}__dut;")
        w(f"  wire {_decl(p.width)}{p.name}__ref;")
    w("  integer stg_pass;")
    w("  integer stg_total;")
    w("  integer stg_cycles;")
    w("  integer stg_ok;")
    w("  reg stg_counting;")
    w("")

    def conns(suffix: str) -> str:
        items = []
        for p in ports:
            if p in clocks:
                items.append(f".{p.name}(stg_clk)")
            elif p.direction is Direction.OUT:
                items.append(f".{p.name}({p.name}__{suffix})")
            else:
                items.append(f".{p.name}({p.name})")
        return ", ".join(items)

    w(f"  {top_module} stg_dut ({conns('dut')});")
    w(f"  {ref_module} stg_ref ({conns('ref')});")
    w("")
    w("  initial stg_clk = 1'b0;")
    w(f"  always #{_time(half)} stg_clk = ~stg_clk;")
    w("  always @(posedge stg_clk) if (stg_counting) stg_cycles = stg_cycles + 1;")
    w("")
    w("  task stg_compare;")
    w("    begin")
    w("      stg_ok = 1;")
    for p in outputs:
        w(f"      if ({p.name}__dut !== {p.name}__ref) begin")
        w("        stg_ok = 0;")
        w(f'        $display("STG_FAIL t=%0t sig={p.name} exp=%h got=%h", $realtime, {p.name}__ref, {p.name}__dut);')
        w("      end")
    w("      stg_total = stg_total + 1;")
    w("      if (stg_ok) stg_pass = stg_pass + 1;")
    w("    end")
    w("  endtask")
    w("")
    w("  initial begin")
    w('    $timeformat(-9, 3, "", 0);')
    w("    stg_pass = 0;")
    w("    stg_total = 0;")
    w("    stg_cycles = 0;")
    w("    stg_counting = 1'b0;")
    for p in resets:
        w(f"    {p.name} = {reset_level(p, True)};")
    for p in driven:
        w(f"    {p.name} = {_hexlit(p.width, 0)};")
    w(f"    repeat ({RESET_CYCLES}) @(posedge stg_clk);")
    for i, vec in enumerate(vectors):
        assigns = []
        if i == 0:
            assigns += [f"{p.name} = {reset_level(p, False)};" for p in resets]
            assigns.append("stg_counting = 1'b1;")
        assigns += [f"{name} = {_hexlit(width[name], vec[name])};" for name in (p.name for p in driven) if name in vec]
        w(f"    @(negedge stg_clk); {' '.join(assigns)}".rstrip())
        w(f"    @(posedge stg_clk); #{_time(delay)}; stg_compare;")
    w('    $display("STG_CYCLES n=%0d", stg_cycles);')
    w('    $display("STG_RESULT pass=%0d total=%0d", stg_pass, stg_total);')
    w("    $finish;")
    w("  end")
    w("endmodule")
    source = "\n".join(L) + "\n"

    return TestbenchBundle(
        ports=tuple(ports),
        plan=plan,
        source=source,
        total_vectors=len(vectors),
        clock_period_ns=period,
        brief_delay_ns=delay,
        vectors=tuple(vectors),
    )


def generate_testbench(
    golden_source: str,
    top_module: str,
    clock_period_ns: float,
    seed: int = 0,
    dut_source: Optional[str] = None,
    **plan_kwargs,
) -> TestbenchBundle:
    """Parse, classify, plan and emit in one go.

    The port list comes from ``dut_source`` when given, otherwise from the
    reference module itself (a run's testbench is fixed before any candidate
    exists).
    """
    ref_module = f"{top_module}_ref"
    if dut_source is not None:
        ports = parse_ports(dut_source, top_module)
    else:
        ports = parse_ports(golden_source, ref_module)
    ports = classify_ports(ports)
    plan = plan_stimulus(ports, seed=seed, **plan_kwargs)
    return emit_testbench(ports, plan, top_module, golden_source, clock_period_ns, ref_module)

