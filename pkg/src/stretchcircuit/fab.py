"""Laser mask documents, SVG output and the fabrication traveler."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import quoteattr

from . import __version__
from .board import Board, Layer, bounding_box
from .drc import DesignRuleSet, Severity, Violation, check_board
from .geometry import Point
from .ingest.native import Mm, dumps
from .transform import Hole, Opening, Region, Toolpath, kerf_compensate, mirror_axis_sum, strain_limit_region


class FabError(ValueError):
    pass


class DrcRefusal(FabError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        summary = "; ".join(v.message for v in violations[:10])
        more = f" (+{len(violations) - 10} more)" if len(violations) > 10 else ""
        super().__init__(f"board has {len(violations)} DRC error(s): {summary}{more}")


class MaskKind(str, enum.Enum):
    CO2_OUTLINE_AND_VIAS = "co2_outline_and_vias"
    UV_TOP_TRACES = "uv_top_traces"
    UV_BOTTOM_TRACES = "uv_bottom_traces"


@dataclass(frozen=True)
class LaserSettings:
    power_pct: float
    speed_pct: float
    repetitions: int = 1

    def describe(self) -> str:
        return f"{self.power_pct:g}% power, {self.speed_pct:g}% speed, {self.repetitions} pass(es)"


CO2_DEFAULT = LaserSettings(100, 20, 2)


@dataclass(frozen=True)
class MaterialConfig:
    key: str
    substrate: str
    encapsulant: str
    strain_limiter: str = "Sil-Poxy"
    conductor: str = "OGaIn"


MATERIAL_CONFIGS = {
    "vhb": MaterialConfig("vhb", "VHB tape", "rubber cement"),
    **{
        f"slacker{n}": MaterialConfig(f"slacker{n}", f"cured 0.5 mm Slacker {n} casting", f"uncured Slacker {n}")
        for n in ("1", "1.5", "2")
    },
}


def material_config(key: str | MaterialConfig) -> MaterialConfig:
    if isinstance(key, MaterialConfig):
        return key
    norm = key.lower().replace(" ", "").replace("_", "")
    if norm == "vhb+rubbercement":
        norm = "vhb"
    try:
        return MATERIAL_CONFIGS[norm]
    except KeyError:
        raise FabError(f"unknown material config {key!r}; choose from {', '.join(MATERIAL_CONFIGS)}") from None


@dataclass(frozen=True)
class MaskDocument:
    kind: MaskKind
    toolpaths: tuple[Toolpath, ...]
    settings: LaserSettings | None
    kerf_offset: float  # um, applied per side
    bounds: tuple[Point, Point]
    registration: tuple[tuple[str, tuple[float, float]], ...] = ()
    mirrored: bool = False

    @property
    def feature_ids(self) -> list[str]:
        return [t.id for t in self.toolpaths]


@dataclass(frozen=True)
class TravelerStep:
    code: str
    action: str
    materials: tuple[str, ...] = ()
    documents: tuple[str, ...] = ()
    regions: tuple[tuple[Point, ...], ...] = ()


@dataclass(frozen=True)
class Traveler:
    board: str
    material: str
    steps: tuple[TravelerStep, ...]

    def to_dict(self) -> dict:
        return {
            "board": self.board,
            "material_config": self.material,
            "steps": [
                {
                    "code": s.code,
                    "action": s.action,
                    "materials": list(s.materials),
                    "documents": list(s.documents),
                    "regions_mm": [[[Mm(p.x), Mm(p.y)] for p in r] for r in s.regions],
                }
                for s in self.steps
            ],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"

    def to_text(self) -> str:
        lines = [f"Fabrication traveler: {self.board}", f"Material system: {self.material}", ""]
        for i, s in enumerate(self.steps, 1):
            lines.append(f"{i:2d}. [{s.code}] {s.action}")
            if s.materials:
                lines.append(f"      materials: {', '.join(s.materials)}")
            if s.documents:
                lines.append(f"      documents: {', '.join(s.documents)}")
            for r in s.regions:
                pts = " ".join(f"({Mm(p.x)},{Mm(p.y)})" for p in r)
                lines.append(f"      region mm: {pts}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FabPackage:
    documents: dict[MaskKind, MaskDocument]
    traveler: Traveler
    metadata: dict = field(default_factory=dict)


def _doc_bounds(board: Board, rules: DesignRuleSet) -> tuple[Point, Point]:
    lo, hi = bounding_box(board)
    m = -(-rules.co2_beam // 2)
    return Point(lo.x - m, lo.y - m), Point(hi.x + m, hi.y + m)


def _uv_geometry(board: Board, layer: Layer):
    geo = [Opening(t.id, tuple(t.centerline), t.width) for t in board.traces if t.layer is layer]
    geo += [Region(p.id, tuple(p.polygon), keep_inside=False) for p in board.pads if p.layer is layer]
    return geo


def generate_masks(
    board: Board,
    rules: DesignRuleSet = DesignRuleSet(),
    material: str | MaterialConfig = "vhb",
    co2_settings: LaserSettings = CO2_DEFAULT,
    uv_settings: LaserSettings | None = None,
    force: bool = False,
    strain_margin: int = 1000,
) -> FabPackage:
    """Build the CO2 cut document, both UV engrave documents and the traveler.

    Refuses boards with DRC errors unless ``force`` is set.
    """
    config = material_config(material)
    if not force:
        errors = [v for v in check_board(board, rules) if v.severity is Severity.ERROR]
        if errors:
            raise DrcRefusal(errors)
    if board.pours:
        raise FabError("board still contains pours; run the transform step with an outline-trace pour mode")
    bounds = _doc_bounds(board, rules)
    reg = tuple((v.id, (float(v.center.x), float(v.center.y))) for v in board.vias)

    co2_geo = [Region("outline", tuple(board.outline), keep_inside=True)]
    co2_geo += [Hole(v.id, v.center, v.diameter) for v in board.vias]
    co2 = MaskDocument(
        MaskKind.CO2_OUTLINE_AND_VIAS,
        tuple(sorted(kerf_compensate(co2_geo, rules.co2_beam), key=lambda t: t.id)),
        co2_settings,
        rules.co2_beam / 2,
        bounds,
        reg,
    )
    top = MaskDocument(
        MaskKind.UV_TOP_TRACES,
        tuple(sorted(kerf_compensate(_uv_geometry(board, Layer.TOP), rules.uv_beam), key=lambda t: t.id)),
        uv_settings,
        rules.uv_beam / 2,
        bounds,
        reg,
    )
    bottom_paths = kerf_compensate(_uv_geometry(board, Layer.BOTTOM), rules.uv_beam)
    bottom = mirror_document(
        MaskDocument(
            MaskKind.UV_BOTTOM_TRACES,
            tuple(sorted(bottom_paths, key=lambda t: t.id)),
            uv_settings,
            rules.uv_beam / 2,
            bounds,
            reg,
        ),
        mirror_axis_sum(board),
    )
    docs = {d.kind: d for d in (co2, top, bottom)}
    regions = strain_limit_region(board, None, strain_margin)
    traveler = emit_traveler(board, config, regions, co2_settings, uv_settings)
    metadata = {
        "board": board.name,
        "material_config": config.key,
        "rule_set": rules.to_dict(),
        "rule_set_sha256": rules.digest(),
        "tool_versions": {"stretchcircuit": __version__},
        "drc_override": bool(force),
    }
    return FabPackage(docs, traveler, metadata)


def mirror_document(doc: MaskDocument, axis_sum: float) -> MaskDocument:
    """Reflect a mask document about x = axis_sum / 2 (toggles ``mirrored``)."""
    return MaskDocument(
        doc.kind,
        tuple(t.mirrored(axis_sum) for t in doc.toolpaths),
        doc.settings,
        doc.kerf_offset,
        doc.bounds,
        tuple((rid, (axis_sum - p[0], p[1])) for rid, p in doc.registration),
        not doc.mirrored,
    )


# --- SVG ---------------------------------------------------------------------

_STROKE = {
    MaskKind.CO2_OUTLINE_AND_VIAS: "#ff0000",
    MaskKind.UV_TOP_TRACES: "#0000ff",
    MaskKind.UV_BOTTOM_TRACES: "#0000ff",
}


def _mm(v: float) -> str:
    s = f"{v / 1000:.3f}"
    return "0.000" if s == "-0.000" else s


def emit_svg(doc: MaskDocument) -> str:
    """Standalone SVG in millimeter user units.

    Board coordinates are written as-is and flipped to screen orientation by
    the group transform, so element coordinates match the design in mm.
    """
    lo, hi = doc.bounds
    w, h = hi.x - lo.x, hi.y - lo.y
    settings = doc.settings.describe() if doc.settings else "UNSET - supply machine-specific settings before cutting"
    header = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        "<!--",
        f"  stretchcircuit {__version__} mask document: {doc.kind.value}",
        "  units: millimeters; coordinates are board coordinates (y up)",
        "  stroke #ff0000: through-cut toolpath (CO2 laser)",
        "  stroke #0000ff: mask engrave toolpath (UV laser)",
        "  toolpaths are kerf-compensated; finished features match design dimensions",
        f"  kerf offset per side: {_mm(doc.kerf_offset)} mm",
        f"  laser settings: {settings}",
        f"  mirrored about board midline: {'yes' if doc.mirrored else 'no'}",
        "-->",
    ]
    out = header + [
        f'<svg xmlns="http://www.w3.org/2000/svg" xmlns:sc="urn:stretchcircuit:mask" version="1.1" '
        f'width="{_mm(w)}mm" height="{_mm(h)}mm" viewBox="{_mm(lo.x)} {_mm(-hi.y)} {_mm(w)} {_mm(h)}">'
    ]
    out.append("  <metadata>")
    out.append(f'    <sc:registration kind="{doc.kind.value}">')
    for rid, (x, y) in sorted(doc.registration):
        out.append(f"      <sc:point id={quoteattr(rid)} x=\"{_mm(x)}\" y=\"{_mm(y)}\"/>")
    out.append("    </sc:registration>")
    out.append("  </metadata>")
    out.append(
        f'  <g id="{doc.kind.value}" transform="scale(1,-1)" fill="none" '
        f'stroke="{_STROKE[doc.kind]}" stroke-width="0.010">'
    )
    for t in sorted(doc.toolpaths, key=lambda t: t.id):
        if t.kind == "circle":
            out.append(
                f'    <circle id={quoteattr(t.id)} cx="{_mm(t.center[0])}" cy="{_mm(t.center[1])}" r="{_mm(t.diameter / 2)}"/>'
            )
        else:
            pts = " L ".join(f"{_mm(x)} {_mm(y)}" for x, y in t.points)
            out.append(f'    <path id={quoteattr(t.id)} d="M {pts} Z"/>')
    out.append("  </g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


# --- traveler ------------------------------------------------------------------


def emit_traveler(
    board: Board,
    material: str | MaterialConfig = "vhb",
    regions: list[tuple[Point, ...]] | None = None,
    co2_settings: LaserSettings = CO2_DEFAULT,
    uv_settings: LaserSettings | None = None,
) -> Traveler:
    """Ordered ten-step build sheet with material names bound for ``material``."""
    c = material_config(material)
    if regions is None:
        regions = strain_limit_region(board)
    uv = uv_settings.describe() if uv_settings else "user-supplied settings (none configured)"
    co2_doc = f"{MaskKind.CO2_OUTLINE_AND_VIAS.value}.svg"
    top_doc = f"{MaskKind.UV_TOP_TRACES.value}.svg"
    bottom_doc = f"{MaskKind.UV_BOTTOM_TRACES.value}.svg"
    n_parts = len(board.footprints)
    limit_text = (
        f"apply {c.strain_limiter} over {len(regions)} strain-limiting region(s) listed below"
        if regions
        else "no strain-limiting regions requested"
    )
    steps = (
        TravelerStep("C", f"Laminate sticker-paper masks on both faces of the {c.substrate}; remove trapped air.",
                     (c.substrate, "sticker paper (0.1 mm)")),
        TravelerStep("D", f"CO2 laser: cut the board outline and all via/header holes ({co2_settings.describe()}).",
                     (), (co2_doc,)),
        TravelerStep("E", f"Seat the board top side up in the paper alignment cutout; UV laser: engrave the top trace openings ({uv}).",
                     (), (top_doc,)),
        TravelerStep("F", "Flip the board over its vertical midline, re-seat it in the cutout; UV laser: engrave the bottom trace openings.",
                     (), (bottom_doc,)),
        TravelerStep("G", f"Peel the bottom-mask openings, fill every via with {c.conductor}, then paint {c.conductor} into the bottom openings.",
                     (c.conductor,)),
        TravelerStep("H", f"Scrape off excess {c.conductor}, remove the bottom mask and check each bottom trace for continuity.",
                     ()),
        TravelerStep("I", f"Encapsulate all exposed bottom traces with {c.encapsulant} and let it cure.",
                     (c.encapsulant,)),
        TravelerStep("J", f"Top side: peel openings, paint {c.conductor}, remove the mask and check each top trace for continuity.",
                     (c.conductor,)),
        TravelerStep("K", f"Place the {n_parts} component(s) and wires at their rigid-board positions; fix wires with {c.strain_limiter}.",
                     (c.strain_limiter,)),
        TravelerStep("L", f"Encapsulate the top with {c.encapsulant}; {limit_text}.",
                     (c.encapsulant, c.strain_limiter) if regions else (c.encapsulant,), (), tuple(regions)),
    )
    return Traveler(board.name, c.key, steps)


def write_package(package: FabPackage, outdir: str | Path) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for kind in MaskKind:
        p = out / f"{kind.value}.svg"
        p.write_text(emit_svg(package.documents[kind]), encoding="utf-8")
        written.append(p)
    p = out / "traveler.txt"
    p.write_text(package.traveler.to_text(), encoding="utf-8")
    written.append(p)
    p = out / "traveler.json"
    p.write_text(package.traveler.to_json(), encoding="utf-8")
    written.append(p)
    p = out / "package.json"
    p.write_text(json.dumps(package.metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(p)
    return written
