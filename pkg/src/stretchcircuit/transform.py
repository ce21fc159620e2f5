"""Rigid-to-stretchable design transformations."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from shapely import LineString, Polygon, unary_union
from shapely.geometry import JOIN_STYLE

from .board import Board, BoardError, Layer, Trace, bounding_box
from .drc import DesignRuleSet
from .geometry import Point, convex_hull

ARC_QUAD_SEGS = 16
DEFAULT_STRAIN_LIMIT_MARGIN_UM = 1000


class TransformError(ValueError):
    pass


class PourMode(str, enum.Enum):
    REJECT = "reject"
    OUTLINE_TRACE = "outline_trace"


@dataclass
class TransformReport:
    vias_resized: int = 0
    pours_handled: int = 0
    mirrored: bool = False
    strain_limit_regions: list[tuple[Point, ...]] = field(default_factory=list)
    kerf_offsets_applied: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "vias_resized": self.vias_resized,
            "pours_handled": self.pours_handled,
            "mirrored": self.mirrored,
            "strain_limit_regions_mm": [[[p.x / 1000, p.y / 1000] for p in poly] for poly in self.strain_limit_regions],
            "kerf_offsets_applied_um": dict(sorted(self.kerf_offsets_applied.items())),
        }


def resize_vias(board: Board, rules: DesignRuleSet = DesignRuleSet()) -> tuple[Board, TransformReport]:
    target = rules.target_via_diameter
    changed = sum(1 for v in board.vias if v.diameter != target)
    vias = tuple(replace(v, diameter=target) for v in board.vias)
    return replace(board, vias=vias), TransformReport(vias_resized=changed)


def handle_pours(board: Board, mode: PourMode | str = PourMode.REJECT, width: int = 250) -> Board:
    mode = PourMode(mode)
    if not board.pours:
        return board
    if mode is PourMode.REJECT:
        ids = ", ".join(p.id for p in board.pours)
        raise TransformError(f"ground pour requires manual routing or OutlineTrace mode (pours: {ids})")
    if width <= 0:
        raise TransformError("outline trace width must be positive")
    outlines = tuple(
        Trace(f"{p.id}.outline", p.layer, (*p.polygon, p.polygon[0]), width, p.net) for p in board.pours
    )
    return replace(board, traces=board.traces + outlines, pours=())


def mirror_points(points: Iterable[Sequence[float]], axis_sum: float) -> list:
    """Reflect about the vertical line x = axis_sum / 2."""
    return [type(p)(axis_sum - p[0], p[1]) if isinstance(p, Point) else (axis_sum - p[0], p[1]) for p in points]


def mirror_axis_sum(board: Board) -> int:
    lo, hi = bounding_box(board)
    return lo.x + hi.x


def mirror_bottom(board: Board) -> Board:
    """Flip every bottom-layer feature about the outline's vertical midline.

    Top-layer features and vias are left in place. Applying it twice is the
    identity.
    """
    s = mirror_axis_sum(board)

    def flip(f):
        if f.layer is not Layer.BOTTOM:
            return f
        if isinstance(f, Trace):
            return replace(f, centerline=tuple(mirror_points(f.centerline, s)))
        return replace(f, polygon=tuple(mirror_points(f.polygon, s)))

    return replace(
        board,
        traces=tuple(flip(t) for t in board.traces),
        footprints=tuple(replace(fp, pads=tuple(flip(p) for p in fp.pads)) for fp in board.footprints),
        pours=tuple(flip(p) for p in board.pours),
    )


# --- kerf compensation -----------------------------------------------------


@dataclass(frozen=True)
class Hole:
    """A circular cut whose finished diameter must equal ``diameter``."""

    id: str
    center: tuple[float, float]
    diameter: float


@dataclass(frozen=True)
class Opening:
    """A stroked trace opening to be removed from a mask (round caps)."""

    id: str
    centerline: tuple[tuple[float, float], ...]
    width: float


@dataclass(frozen=True)
class Region:
    """A polygon cut; ``keep_inside`` marks the interior as the kept part."""

    id: str
    polygon: tuple[tuple[float, float], ...]
    keep_inside: bool = False


@dataclass(frozen=True)
class Toolpath:
    id: str
    kind: str  # "circle" or "polygon"
    center: tuple[float, float] | None = None
    diameter: float | None = None
    points: tuple[tuple[float, float], ...] = ()

    def mirrored(self, axis_sum: float) -> "Toolpath":
        if self.kind == "circle":
            return replace(self, center=(axis_sum - self.center[0], self.center[1]))
        return replace(self, points=tuple((axis_sum - x, y) for x, y in reversed(self.points)))


def _contour(geom) -> tuple[tuple[float, float], ...]:
    if geom.is_empty or geom.geom_type != "Polygon":
        raise TransformError("offset produced an empty or split contour")
    pts = list(geom.exterior.coords)[:-1]
    return tuple((float(x), float(y)) for x, y in pts)


def kerf_compensate(geometry: Iterable[Hole | Opening | Region], beam_width: float) -> list[Toolpath]:
    """Offset cut toolpaths by half the beam width toward the waste side.

    Holes get a toolpath diameter of ``d - beam``; trace openings keep their
    design width because the contour is pulled in by ``beam / 2`` per side;
    kept regions (board outline) are pushed out by ``beam / 2``.
    """
    if beam_width < 0:
        raise TransformError("beam width must be >= 0")
    half = beam_width / 2.0
    out: list[Toolpath] = []
    for g in geometry:
        if isinstance(g, Hole):
            if beam_width >= g.diameter:
                raise TransformError(f"feature smaller than kerf: {g.id} d={g.diameter} um, beam {beam_width} um")
            out.append(Toolpath(g.id, "circle", center=tuple(g.center), diameter=g.diameter - beam_width))
        elif isinstance(g, Opening):
            if beam_width >= g.width:
                raise TransformError(f"feature smaller than kerf: {g.id} w={g.width} um, beam {beam_width} um")
            r = g.width / 2.0 - half
            line = LineString(g.centerline) if len(g.centerline) > 1 else None
            if line is None:
                raise TransformError(f"opening {g.id} needs at least two points")
            out.append(Toolpath(g.id, "polygon", points=_contour(line.buffer(r, quad_segs=ARC_QUAD_SEGS))))
        elif isinstance(g, Region):
            poly = Polygon(g.polygon)
            if half == 0:
                out.append(Toolpath(g.id, "polygon", points=tuple(tuple(map(float, p)) for p in g.polygon)))
                continue
            off = poly.buffer(half if g.keep_inside else -half, join_style=JOIN_STYLE.mitre, mitre_limit=10.0)
            if off.is_empty:
                raise TransformError(f"feature smaller than kerf: {g.id}")
            out.append(Toolpath(g.id, "polygon", points=_contour(off)))
        else:
            raise TypeError(f"cannot kerf-compensate {type(g).__name__}")
    return out


# --- strain limiting ---------------------------------------------------------


def strain_limit_region(
    board: Board, refdes: Sequence[str] | None = None, margin: int = DEFAULT_STRAIN_LIMIT_MARGIN_UM
) -> list[tuple[Point, ...]]:
    """Convex hull of each component's pads dilated by ``margin``; overlaps merged.

    ``refdes`` defaults to every footprint flagged strain-sensitive.
    """
    by_ref = {fp.refdes: fp for fp in board.footprints}
    if refdes is None:
        refdes = [fp.refdes for fp in board.footprints if fp.strain_sensitive]
    unknown = [r for r in refdes if r not in by_ref]
    if unknown:
        raise BoardError(f"unknown refdes: {', '.join(unknown)}")
    if margin < 0:
        raise ValueError("margin must be >= 0")
    shapes = []
    for r in refdes:
        hull = convex_hull(p for pad in by_ref[r].pads for p in pad.polygon)
        shapes.append(Polygon(hull).buffer(margin, quad_segs=ARC_QUAD_SEGS))
    if not shapes:
        return []
    merged = unary_union(shapes)
    parts = list(merged.geoms) if hasattr(merged, "geoms") else [merged]
    regions = []
    for part in parts:
        pts = []
        for x, y in list(part.exterior.coords)[:-1]:
            p = Point(round(x), round(y))
            if not pts or pts[-1] != p:
                pts.append(p)
        if pts[0] == pts[-1]:
            pts.pop()
        regions.append(tuple(pts))
    return sorted(regions)


def transform_board(
    board: Board,
    rules: DesignRuleSet = DesignRuleSet(),
    pour_mode: PourMode | str = PourMode.REJECT,
    pour_width: int = 250,
    strain_refdes: Sequence[str] | None = None,
    margin: int = DEFAULT_STRAIN_LIMIT_MARGIN_UM,
) -> tuple[Board, TransformReport]:
    """Resize vias, handle pours and compute strain-limiting regions."""
    n_pours = len(board.pours)
    out, report = resize_vias(board, rules)
    out = handle_pours(out, pour_mode, pour_width)
    report.pours_handled = n_pours
    report.strain_limit_regions = strain_limit_region(out, strain_refdes, margin)
    report.kerf_offsets_applied = {"co2": rules.co2_beam / 2, "uv": rules.uv_beam / 2}
    return out, report
