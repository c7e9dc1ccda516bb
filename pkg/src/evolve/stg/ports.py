"""Port-list extraction and rule-based signal classification for Verilog-2005 modules."""

from __future__ import annotations

import ast
import enum
import math
import operator
import re
from dataclasses import dataclass, replace
from typing import Optional


class StgError(Exception):
    """Base class for testbench-generation failures."""


class StgParseError(StgError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class Direction(str, enum.Enum):
    IN = "input"
    OUT = "output"
    INOUT = "inout"


class Category(str, enum.Enum):
    CLOCK_RESET = "clock/reset"
    CONTROL = "control"
    DATAPATH = "datapath"
    OBSERVED = "observed"


@dataclass(frozen=True)
class Port:
    name: str
    direction: Direction
    width: int = 1
    category: Optional[Category] = None

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"port {self.name} has non-positive width {self.width}")


# ---------------------------------------------------------------- parsing

_COMMENT_RE = re.compile(r"//[^\n]*|/\*.*?\*/", re.S)
_ATTR_RE = re.compile(r"\(\*.*?\*\)", re.S)
_NET_TYPES = {"wire", "reg", "logic", "tri", "integer", "signed", "unsigned", "var", "supply0", "supply1", "wand", "wor"}
_IDENT = r"[A-Za-z_][A-Za-z0-9_$]*"
_SIZED_LITERAL = re.compile(r"(\d+)?\s*'\s*[sS]?([bBoOdDhH])\s*([0-9a-fA-F_xXzZ?]+)")
_BASES = {"b": 2, "o": 8, "d": 10, "h": 16}


def _blank(match: re.Match) -> str:
    # keep newlines so offsets still map to the original line numbers
    return re.sub(r"[^\n]", " ", match.group(0))


def strip_comments(source: str) -> str:
    return _ATTR_RE.sub(_blank, _COMMENT_RE.sub(_blank, source))


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def _matching(text: str, start: int, open_ch: str = "(", close_ch: str = ")") -> int:
    depth = 0
    for i in range(start, len(text)):
        c = text[i]
        if c == open_ch:
            depth += 1
        elif c == close_ch:
            depth -= 1
            if depth == 0:
                return i
    raise StgParseError(f"unbalanced '{open_ch}'", _line_of(text, start))


def _split_top(text: str, sep: str = ",") -> list[tuple[str, int]]:
    """Split on ``sep`` outside brackets; return (piece, offset) pairs."""
    parts, depth, last = [], 0, 0
    for i, c in enumerate(text):
        if c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
        elif c == sep and depth == 0:
            parts.append((text[last:i], last))
            last = i + 1
    parts.append((text[last:], last))
    return parts


def _clog2(x: int) -> int:
    return 0 if x <= 1 else math.ceil(math.log2(x))


_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.floordiv, ast.FloorDiv: operator.floordiv, ast.Mod: operator.mod,
    ast.Pow: operator.pow, ast.LShift: operator.lshift, ast.RShift: operator.rshift,
}


def eval_const(expr: str, params: dict[str, int]) -> int:
    """Evaluate a constant Verilog integer expression (ranges, parameter defaults)."""

    def literal(m: re.Match) -> str:
        digits = m.group(3).replace("_", "")
        if re.search(r"[xXzZ?]", digits):
            raise ValueError("x/z digits in a constant expression")
        return str(int(digits, _BASES[m.group(2).lower()]))

    py = _SIZED_LITERAL.sub(literal, expr).replace("$clog2", "clog2").strip()
    tree = ast.parse(py, mode="eval")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        if isinstance(node, ast.Name):
            if node.id not in params:
                raise ValueError(f"unknown parameter {node.id}")
            return params[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and getattr(node.func, "id", None) == "clog2" and len(node.args) == 1:
            return _clog2(ev(node.args[0]))
        raise ValueError(f"unsupported construct in constant expression: {expr!r}")

    return int(ev(tree))


def _parse_params(text: str, params: dict[str, int]) -> None:
    for piece, _ in _split_top(text):
        piece = re.sub(r"^\s*(parameter|localparam)\b", "", piece)
        piece = re.sub(r"^\s*(integer|signed|unsigned|\[[^\]]*\])\s*", "", piece)
        m = re.match(rf"\s*({_IDENT})\s*=\s*(.+)$", piece, re.S)
        if not m:
            continue
        try:
            params[m.group(1)] = eval_const(m.group(2), params)
        except (ValueError, SyntaxError, ZeroDivisionError):
            # non-integer parameters (strings, reals) never size a port we can handle
            pass


def _packed_width(ranges: list[str], params: dict[str, int], line: int) -> int:
    width = 1
    for rng in ranges:
        msb, sep, lsb = rng.partition(":")
        if not sep:
            raise StgParseError(f"malformed range [{rng}]", line)
        try:
            width *= abs(eval_const(msb, params) - eval_const(lsb, params)) + 1
        except (ValueError, SyntaxError, ZeroDivisionError) as exc:
            raise StgParseError(f"cannot evaluate range [{rng}]: {exc}", line) from None
    return width


_DECL_HEAD = re.compile(r"\s*(input|output|inout)\b")


def _parse_decl(piece: str, params: dict[str, int], line: int):
    """Parse '[dir] [type] [signed] [ranges] name' into (direction, width, name)."""
    text = piece.strip()
    direction = None
    m = _DECL_HEAD.match(text)
    if m:
        direction = Direction(m.group(1))
        text = text[m.end():]
    ranges: list[str] = []
    saw_type = False
    while True:
        text = text.lstrip()
        m = re.match(rf"({_IDENT})\b", text)
        if m and m.group(1) in _NET_TYPES:
            saw_type = True
            text = text[m.end():]
            continue
        if text.startswith("["):
            end = _matching(text, 0, "[", "]")
            ranges.append(text[1:end])
            text = text[end + 1:]
            continue
        break
    m = re.fullmatch(rf"({_IDENT})\s*(=.*)?", text.strip(), re.S)
    if not m:
        raise StgParseError(f"unparsable port declaration: {piece.strip()!r}", line)
    width = _packed_width(ranges, params, line) if (ranges or direction or saw_type) else None
    return direction, width, m.group(1)


_MODULE_NAME = re.compile(r"\b(?:module|macromodule)\s+(" + _IDENT + ")")


def module_names(source: str) -> list[str]:
    """Module names declared in ``source``, in order."""
    return _MODULE_NAME.findall(strip_comments(source))


def _find_module(clean: str, top_module: str) -> re.Match:
    m = re.search(rf"\bmodule\s+{re.escape(top_module)}\b", clean)
    if not m:
        raise StgParseError(f"module '{top_module}' not found")
    return m


def parse_ports(dut_source: str, top_module: str) -> list[Port]:
    """Return the ports of ``top_module`` in declaration order.

    Handles ANSI headers (``module m(input [7:0] a, ...)``) and the older
    style where the header lists names and the body declares directions.
    Parameterised widths are resolved from parameter defaults.
    """
    clean = strip_comments(dut_source)
    m = _find_module(clean, top_module)
    pos = m.end()
    params: dict[str, int] = {}

    rest = clean[pos:]
    lead = len(rest) - len(rest.lstrip())
    pos += lead
    if clean.startswith("#", pos):
        popen = clean.index("(", pos)
        pclose = _matching(clean, popen)
        _parse_params(clean[popen + 1:pclose], params)
        pos = pclose + 1
    while pos < len(clean) and clean[pos].isspace():
        pos += 1

    end_mod = re.compile(r"\bendmodule\b").search(clean, pos)
    body_end = end_mod.start() if end_mod else len(clean)

    if pos >= len(clean) or clean[pos] == ";":
        return []
    if clean[pos] != "(":
        raise StgParseError(f"expected port list after module '{top_module}'", _line_of(clean, pos))
    close = _matching(clean, pos)
    header = clean[pos + 1:close]
    body = clean[close + 1:body_end]
    body_offset = close + 1

    for pm in re.finditer(r"\b(parameter|localparam)\b([^;]*);", body):
        _parse_params(pm.group(2), params)

    items = [(p, off) for p, off in _split_top(header) if p.strip()]
    if not items:
        return []

    ansi = any(_DECL_HEAD.match(p) for p, _ in items)
    ports: list[Port] = []
    if ansi:
        cur_dir: Optional[Direction] = None
        cur_width = 1
        for piece, off in items:
            line = _line_of(clean, pos + 1 + off + (len(piece) - len(piece.lstrip())))
            direction, width, name = _parse_decl(piece, params, line)
            if direction is None:
                if cur_dir is None:
                    raise StgParseError(f"port {name} has no direction", line)
                # continuation such as 'input [7:0] a, b' inherits the previous declaration
                direction = cur_dir
                width = width if width is not None else cur_width
            cur_dir, cur_width = direction, (width or 1)
            ports.append(Port(name, direction, width or 1))
        return ports

    names = []
    for piece, off in items:
        name = piece.strip()
        if not re.fullmatch(_IDENT, name):
            raise StgParseError(f"unparsable port list entry {name!r}", _line_of(clean, pos + 1 + off))
        names.append(name)
    decls: dict[str, tuple[Direction, int]] = {}
    for dm in re.finditer(r"\b(input|output|inout)\b([^;]*);", body):
        line = _line_of(clean, body_offset + dm.start())
        direction = Direction(dm.group(1))
        first, *others = _split_top(dm.group(2))
        _, width, name = _parse_decl(first[0], params, line)
        width = width or 1
        decls[name] = (direction, width)
        for piece, _ in others:
            nm = piece.strip()
            if not re.fullmatch(_IDENT, nm):
                raise StgParseError(f"unparsable port declaration {nm!r}", line)
            decls[nm] = (direction, width)
    for name in names:
        if name not in decls:
            raise StgParseError(f"port {name} is listed but never declared", _line_of(clean, pos))
        direction, width = decls[name]
        ports.append(Port(name, direction, width))
    return ports


# ---------------------------------------------------------------- classification

CONTROL_TOKENS = frozenset(
    {"valid", "ready", "en", "enable", "start", "done", "sel", "mode", "we", "re",
     "req", "ack", "flush", "stall"}
)
_CLOCK_RE = re.compile(r"(^|_)(clk|clock)(_|$)")
_RESET_RE = re.compile(r"^(rst|reset)(_n|_p|_|n|$)|(^|_)(rst|reset|rstn|resetn)(_|$)")


def _tokens(name: str) -> list[str]:
    return [t for t in name.lower().split("_") if t]


def is_clock(port: Port) -> bool:
    return port.width == 1 and bool(_CLOCK_RE.search(port.name.lower()))


def is_reset(port: Port) -> bool:
    return port.width == 1 and not is_clock(port) and bool(_RESET_RE.search(port.name.lower()))


def reset_active_low(port: Port) -> bool:
    name = port.name.lower()
    return name.endswith("_n") or bool(re.search(r"(^|_)(rstn|resetn)(_|$)", name))


def classify_port(port: Port) -> Category:
    if port.direction is not Direction.IN:
        return Category.OBSERVED
    if is_clock(port) or is_reset(port):
        return Category.CLOCK_RESET
    if CONTROL_TOKENS.intersection(_tokens(port.name)) or port.width == 1:
        return Category.CONTROL
    return Category.DATAPATH


def classify_ports(ports: list[Port]) -> list[Port]:
    return [replace(p, category=classify_port(p)) for p in ports]
