"""Evaluation backends: open-source EDA drivers and a synthetic landscape."""

from .opensource import OpenSourceBackend, isolate_reference, render_synth_script
from .reports import AreaReport, SynthParseError, parse_area
from .synthetic import SyntheticBackend, format_candidate, parse_candidate
from .tools import ToolConfig, resolve_tools

__all__ = [
    "OpenSourceBackend", "isolate_reference", "render_synth_script", "AreaReport", "SynthParseError",
    "parse_area", "SyntheticBackend", "format_candidate", "parse_candidate", "ToolConfig", "resolve_tools",
]
