"""Structured testbench generation: parse, classify, plan, emit, score."""

from .emit import GENERATOR_VERSION, StgGenerationError, TestbenchBundle, emit_testbench, generate_testbench
from .ports import (
    Category,
    Direction,
    Port,
    StgError,
    StgParseError,
    classify_port,
    classify_ports,
    parse_ports,
)
from .results import SimLog, parse_sim_log
from .stimulus import Mode, StimulusPlan, corner_patterns, plan_stimulus

__all__ = [
    "GENERATOR_VERSION", "StgGenerationError", "TestbenchBundle", "emit_testbench", "generate_testbench",
    "Category", "Direction", "Port", "StgError", "StgParseError", "classify_port", "classify_ports",
    "parse_ports", "SimLog", "parse_sim_log", "Mode", "StimulusPlan", "corner_patterns", "plan_stimulus",
]
