"""RS-274X subset reader.

Supported: FS (absolute, leading or trailing zero omission), MO, AD with
C/R/O standard apertures, D01/D02/D03, G01, G36/G37 regions, LPD, comments
and the inert G74/G75/G70/G71/G90 codes. Arcs, macros, step-repeat, clear
polarity and incremental coordinates are rejected with a line number.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from ..board import Layer, Pad, Pour, Trace
from ..geometry import Point

UM_PER_UNIT = {"MM": Fraction(1000), "IN": Fraction(25400)}
CIRCLE_SEGMENTS = 32


class GerberError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Aperture:
    shape: str  # "C", "R" or "O"
    params: tuple[Fraction, ...]  # in file units


@dataclass(frozen=True)
class DrawCommand:
    op: str  # "move", "draw", "flash"
    x: int  # um
    y: int
    aperture: str | None
    line: int
    region: bool = False


@dataclass
class GerberDocument:
    unit: str = ""
    format_spec: tuple[int, int] | None = None
    zero_omission: str = "L"
    apertures: dict[str, Aperture] = field(default_factory=dict)
    commands: list[DrawCommand] = field(default_factory=list)


_AD = re.compile(r"^ADD(\d+)([CRO]),([\d.]+)(?:X([\d.]+))?(?:X([\d.]+))?$")
_AD_OTHER = re.compile(r"^ADD(\d+)([A-Za-z_$][\w.$]*)")
_FS = re.compile(r"^FS([LTD])([AI])X(\d)(\d)Y(\d)(\d)$")
_COORD = re.compile(r"([XYIJ])([+-]?\d+)")


def _tokens(text: str):
    """Yield (line_number, word, extended) for every '*'-terminated word."""
    line = 1
    i, n = 0, len(text)
    in_ext = False
    buf: list[str] = []
    start = 1
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
        elif ch == "\r":
            pass
        elif ch == "%":
            in_ext = not in_ext
        elif ch == "*":
            word = "".join(buf).strip()
            if word:
                yield start, word, in_ext
            buf = []
        elif not (ch in " \t" and not buf):
            if not buf:
                start = line
            buf.append(ch)
        i += 1
    if "".join(buf).strip():
        yield start, "".join(buf).strip(), in_ext


def _decode(raw: str, doc: GerberDocument, line: int) -> int:
    if doc.format_spec is None:
        raise GerberError(line, "coordinate before format specification (FS)")
    if not doc.unit:
        raise GerberError(line, "coordinate before unit mode (MO)")
    ints, decs = doc.format_spec
    sign = -1 if raw.startswith("-") else 1
    digits = raw.lstrip("+-")
    if doc.zero_omission == "T":
        digits = digits.ljust(ints + decs, "0")
    value = Fraction(int(digits), 10**decs) * sign
    return round(value * UM_PER_UNIT[doc.unit])


def _size_um(v: Fraction, doc: GerberDocument) -> int:
    return round(v * UM_PER_UNIT[doc.unit])


def read_gerber(text: str) -> GerberDocument:
    doc = GerberDocument()
    x = y = 0
    current: str | None = None
    in_region = False
    ended = False
    line = 1
    for line, word, ext in _tokens(text):
        if ended:
            raise GerberError(line, "content after M02")
        if ext:
            if word.startswith("FS"):
                m = _FS.match(word)
                if not m:
                    raise GerberError(line, f"malformed format specification {word!r}")
                if m.group(2) == "I":
                    raise GerberError(line, "unsupported feature: incremental coordinates")
                if m.group(3, 4) != m.group(5, 6):
                    raise GerberError(line, "unsupported feature: differing X/Y formats")
                doc.zero_omission = "T" if m.group(1) == "T" else "L"
                doc.format_spec = (int(m.group(3)), int(m.group(4)))
            elif word.startswith("MO"):
                unit = word[2:]
                if unit not in UM_PER_UNIT:
                    raise GerberError(line, f"unknown unit mode {unit!r}")
                doc.unit = unit
            elif word.startswith("AD"):
                m = _AD.match(word)
                if not m:
                    if _AD_OTHER.match(word):
                        raise GerberError(line, "unsupported feature: aperture macros")
                    raise GerberError(line, f"malformed aperture definition {word!r}")
                code, shape = "D" + m.group(1), m.group(2)
                params = tuple(Fraction(p) for p in m.group(3, 4, 5) if p is not None)
                if shape in "RO" and len(params) < 2:
                    raise GerberError(line, f"aperture {code} needs width and height")
                doc.apertures[code] = Aperture(shape, params)
            elif word.startswith("AM"):
                raise GerberError(line, "unsupported feature: aperture macros")
            elif word.startswith("SR"):
                raise GerberError(line, "unsupported feature: step and repeat")
            elif word.startswith("LP"):
                if word != "LPD":
                    raise GerberError(line, "unsupported feature: clear polarity")
            elif word.startswith(("TF", "TA", "TO", "TD", "IN", "IP", "G04")):
                pass
            else:
                raise GerberError(line, f"unsupported extended command {word!r}")
            continue

        if word.startswith("G04"):
            continue
        if word in ("M02", "M00"):
            ended = True
            continue
        m = re.match(r"^G0?(\d+)", word)
        if m:
            g = int(m.group(1))
            if g in (2, 3):
                raise GerberError(line, "unsupported feature: arcs")
            if g == 36:
                in_region = True
            elif g == 37:
                in_region = False
            elif g == 91:
                raise GerberError(line, "unsupported feature: incremental coordinates")
            elif g not in (1, 54, 55, 70, 71, 74, 75, 90):
                raise GerberError(line, f"unsupported G code G{g:02d}")
            if g in (70, 71):
                doc.unit = doc.unit or ("IN" if g == 70 else "MM")
            word = word[m.end():]
            if not word:
                continue
        dm = re.search(r"D(\d+)$", word)
        coords = dict(_COORD.findall(word))
        if "I" in coords or "J" in coords:
            raise GerberError(line, "unsupported feature: arcs")
        if dm is None:
            if coords:
                # deprecated modal operation: treated as D01
                dcode = 1
            else:
                raise GerberError(line, f"unrecognized command {word!r}")
        else:
            dcode = int(dm.group(1))
        if dcode >= 10:
            code = f"D{dcode}"
            if code not in doc.apertures:
                raise GerberError(line, f"undefined aperture {code}")
            current = code
            continue
        if "X" in coords:
            x = _decode(coords["X"], doc, line)
        if "Y" in coords:
            y = _decode(coords["Y"], doc, line)
        op = {1: "draw", 2: "move", 3: "flash"}.get(dcode)
        if op is None:
            raise GerberError(line, f"unknown operation D{dcode:02d}")
        if op != "move" and not in_region:
            if current is None:
                raise GerberError(line, "draw or flash before any aperture was selected")
        if op == "flash" and in_region:
            raise GerberError(line, "flash inside a region")
        doc.commands.append(DrawCommand(op, x, y, current, line, in_region))
    if not ended:
        raise GerberError(line, "missing M02 end-of-file")
    return doc


def _circle_polygon(cx: int, cy: int, r: float, n: int = CIRCLE_SEGMENTS) -> list[tuple[int, int]]:
    pts = [(cx + round(r * math.cos(2 * math.pi * k / n)), cy + round(r * math.sin(2 * math.pi * k / n))) for k in range(n)]
    out: list[tuple[int, int]] = []
    for p in pts:
        if not out or out[-1] != p:
            out.append(p)
    return out


def _obround_polygon(cx: int, cy: int, w: int, h: int) -> list[tuple[int, int]]:
    if w == h:
        return _circle_polygon(cx, cy, w / 2)
    r = min(w, h) / 2
    half = CIRCLE_SEGMENTS // 2
    if w > h:
        c1, c2 = (cx - (w / 2 - r), cy), (cx + (w / 2 - r), cy)
        a1, a2 = math.pi / 2, -math.pi / 2
    else:
        c1, c2 = (cx, cy + (h / 2 - r)), (cx, cy - (h / 2 - r))
        a1, a2 = 0.0, math.pi
    pts = []
    for c, a0 in ((c1, a1), (c2, a2)):
        for k in range(half + 1):
            a = a0 + math.pi * k / half
            pts.append((round(c[0] + r * math.cos(a)), round(c[1] + r * math.sin(a))))
    out: list[tuple[int, int]] = []
    for p in pts:
        if not out or out[-1] != p:
            out.append(p)
    if out[0] == out[-1]:
        out.pop()
    return out


def aperture_polygon(ap: Aperture, x: int, y: int, doc: GerberDocument) -> list[tuple[int, int]]:
    if ap.shape == "C":
        return _circle_polygon(x, y, _size_um(ap.params[0], doc) / 2)
    w, h = _size_um(ap.params[0], doc), _size_um(ap.params[1], doc)
    if ap.shape == "R":
        hw, hh = w // 2, h // 2
        return [(x - hw, y - hh), (x + w - hw, y - hh), (x + w - hw, y + h - hh), (x - hw, y + h - hh)]
    return _obround_polygon(x, y, w, h)


@dataclass
class GerberFeatures:
    traces: list[Trace] = field(default_factory=list)
    pads: list[Pad] = field(default_factory=list)
    pours: list[Pour] = field(default_factory=list)


def parse_gerber(text: str, layer: Layer | str, prefix: str | None = None) -> GerberFeatures:
    """Convert one copper layer file to traces, pad polygons and pour regions.

    Consecutive D01 draws with the same circular aperture are chained into a
    single polyline trace. Feature ids are ``<prefix>-T<n>``, ``-P<n>`` and
    ``-R<n>`` where prefix defaults to the layer name.
    """
    layer = Layer(layer)
    prefix = prefix or layer.value
    doc = read_gerber(text)
    out = GerberFeatures()
    chain: list[Point] = []
    chain_ap: str | None = None
    region: list[Point] = []
    pos = Point(0, 0)

    def flush_chain():
        nonlocal chain
        if len(chain) >= 2:
            ap = doc.apertures[chain_ap]
            out.traces.append(
                Trace(f"{prefix}-T{len(out.traces) + 1:03d}", layer, tuple(chain), _size_um(ap.params[0], doc))
            )
        chain = []

    def flush_region():
        nonlocal region
        pts = list(region)
        if len(pts) > 1 and pts[0] == pts[-1]:
            pts.pop()
        if len(pts) >= 3:
            out.pours.append(Pour(f"{prefix}-R{len(out.pours) + 1:03d}", tuple(pts), layer))
        region = []

    for cmd in doc.commands:
        p = Point(cmd.x, cmd.y)
        if cmd.region:
            flush_chain()
            if cmd.op == "move":
                flush_region()
                region = [p]
            else:
                if not region:
                    region = [pos]
                region.append(p)
            pos = p
            continue
        if region:
            flush_region()
        if cmd.op == "move":
            flush_chain()
        elif cmd.op == "draw":
            ap = doc.apertures[cmd.aperture]
            if ap.shape != "C":
                raise GerberError(cmd.line, f"unsupported feature: draw with non-circular aperture {cmd.aperture}")
            if chain and chain_ap != cmd.aperture:
                flush_chain()
            if not chain:
                chain = [pos]
                chain_ap = cmd.aperture
            if p != chain[-1]:
                chain.append(p)
        else:
            flush_chain()
            poly = aperture_polygon(doc.apertures[cmd.aperture], cmd.x, cmd.y, doc)
            out.pads.append(Pad(f"{prefix}-P{len(out.pads) + 1:03d}", tuple(poly), layer))
        pos = p
    flush_chain()
    flush_region()
    return out
