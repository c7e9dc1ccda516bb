"""LLM-driven evolutionary search over HDL designs."""

__version__ = "0.1.0"
