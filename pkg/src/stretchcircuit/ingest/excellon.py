"""Excellon drill subset reader (metric only)."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal

from ..board import Via, ViaKind
from ..geometry import Point

# Holes at or above this finished diameter are classified as header-pin holes.
HEADER_HOLE_MIN_UM = 800

_TOOL_DEF = re.compile(r"^T(\d+)(?:F[\d.]+|S[\d.]+|B[\d.]+|H[\d.]+|Z[-\d.]+)*C([\d.]+)")
_TOOL_SEL = re.compile(r"^T(\d+)$")
_HIT = re.compile(r"^(?:X([+-]?[\d.]+))?(?:Y([+-]?[\d.]+))?$")


class ExcellonError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class DrillDocument:
    tools: dict[str, int] = field(default_factory=dict)  # tool -> diameter um
    hits: list[tuple[str, Point]] = field(default_factory=list)


def _coord(raw: str, zeros: str, line: int) -> int:
    if "." in raw:
        return int((Decimal(raw) * 1000).to_integral_value())
    sign = -1 if raw.startswith("-") else 1
    digits = raw.lstrip("+-")
    # metric 3.3: LZ keeps leading zeros (pad on the right), TZ keeps trailing zeros
    if zeros == "LZ":
        digits = digits.ljust(6, "0")
    return sign * int(digits)


def read_excellon(text: str) -> DrillDocument:
    doc = DrillDocument()
    in_header = False
    metric = False
    zeros = "TZ"
    tool: str | None = None
    x = y = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        if line == "M48":
            in_header = True
            continue
        if in_header:
            if line in ("%", "M95"):
                in_header = False
                continue
            if line.startswith("METRIC"):
                metric = True
                if "LZ" in line:
                    zeros = "LZ"
                continue
            if line.startswith("INCH"):
                raise ExcellonError(lineno, "inch mode is not supported; export drills in METRIC")
            m = _TOOL_DEF.match(line)
            if m:
                if not metric:
                    raise ExcellonError(lineno, "tool definition before METRIC header")
                doc.tools[f"T{int(m.group(1))}"] = int((Decimal(m.group(2)) * 1000).to_integral_value())
            continue
        if line in ("M30", "M00"):
            break
        if line.startswith(("G90", "G05", "M71", "FMAT", "G00")):
            continue
        if line.startswith("G"):
            raise ExcellonError(lineno, f"unsupported command {line!r}")
        m = _TOOL_SEL.match(line)
        if m:
            name = f"T{int(m.group(1))}"
            if name == "T0":
                tool = None
                continue
            if name not in doc.tools:
                raise ExcellonError(lineno, f"undefined tool {name}")
            tool = name
            continue
        m = _HIT.match(line)
        if m and (m.group(1) or m.group(2)):
            if not metric:
                raise ExcellonError(lineno, "missing METRIC header")
            if tool is None:
                raise ExcellonError(lineno, "hit before any tool was selected")
            if m.group(1):
                x = _coord(m.group(1), zeros, lineno)
            if m.group(2):
                y = _coord(m.group(2), zeros, lineno)
            doc.hits.append((tool, Point(x, y)))
            continue
        raise ExcellonError(lineno, f"unrecognized line {line!r}")
    if not metric and (doc.tools or doc.hits):
        raise ExcellonError(1, "missing METRIC header")
    return doc


def parse_excellon(text: str, header_hole_min_um: int = HEADER_HOLE_MIN_UM) -> list[Via]:
    doc = read_excellon(text)
    vias = []
    for i, (tool, p) in enumerate(doc.hits, start=1):
        d = doc.tools[tool]
        kind = ViaKind.HEADER_HOLE if d >= header_hole_min_um else ViaKind.VIA
        vias.append(Via(f"H{i:03d}", p, d, kind))
    return vias
