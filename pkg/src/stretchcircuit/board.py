"""In-memory two-layer board model, structural validation and net inference."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

from .geometry import (
    Point,
    Shape,
    point_in_polygon,
    point_segment_distance,
    polygon_edges,
    polygon_is_simple,
    shape_distance,
)

COORD_LIMIT = 10**9
CONTACT_TOLERANCE_UM = 1


class Layer(str, enum.Enum):
    TOP = "top"
    BOTTOM = "bottom"


class ViaKind(str, enum.Enum):
    VIA = "via"
    HEADER_HOLE = "header_hole"


class PackageClass(str, enum.Enum):
    NO_LEAD = "no_lead"
    LEADED = "leaded"
    THROUGH_HOLE = "through_hole"


class BoardError(ValueError):
    pass


def _points(seq) -> tuple[Point, ...]:
    return tuple(Point(int(p[0]), int(p[1])) for p in seq)


@dataclass(frozen=True)
class Trace:
    id: str
    layer: Layer
    centerline: tuple[Point, ...]
    width: int
    net: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "centerline", _points(self.centerline))
        object.__setattr__(self, "layer", Layer(self.layer))

    def shape(self) -> Shape:
        return Shape.stroke(self.centerline, self.width)


@dataclass(frozen=True)
class Via:
    id: str
    center: Point
    diameter: int
    kind: ViaKind = ViaKind.VIA
    net: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", Point(int(self.center[0]), int(self.center[1])))
        object.__setattr__(self, "kind", ViaKind(self.kind))

    def shape(self) -> Shape:
        return Shape.circle(self.center, self.diameter)


@dataclass(frozen=True)
class Pad:
    id: str
    polygon: tuple[Point, ...]
    layer: Layer
    net: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "polygon", _points(self.polygon))
        object.__setattr__(self, "layer", Layer(self.layer))

    def shape(self) -> Shape:
        return Shape.filled(self.polygon)


@dataclass(frozen=True)
class FootprintInstance:
    refdes: str
    package_class: PackageClass
    pads: tuple[Pad, ...]
    strain_sensitive: bool = False

    def __post_init__(self):
        object.__setattr__(self, "package_class", PackageClass(self.package_class))
        object.__setattr__(self, "pads", tuple(sorted(self.pads, key=lambda p: p.id)))


@dataclass(frozen=True)
class Pour:
    id: str
    polygon: tuple[Point, ...]
    layer: Layer
    net: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "polygon", _points(self.polygon))
        object.__setattr__(self, "layer", Layer(self.layer))

    def shape(self) -> Shape:
        return Shape.filled(self.polygon)


@dataclass(frozen=True)
class Board:
    """A two-layer design.

    Feature collections are stored sorted by id so that two boards holding
    the same features compare equal regardless of construction order.
    """

    name: str
    outline: tuple[Point, ...]
    traces: tuple[Trace, ...] = ()
    vias: tuple[Via, ...] = ()
    footprints: tuple[FootprintInstance, ...] = ()
    pours: tuple[Pour, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "outline", _points(self.outline))
        object.__setattr__(self, "traces", tuple(sorted(self.traces, key=lambda t: t.id)))
        object.__setattr__(self, "vias", tuple(sorted(self.vias, key=lambda v: v.id)))
        object.__setattr__(self, "footprints", tuple(sorted(self.footprints, key=lambda f: f.refdes)))
        object.__setattr__(self, "pours", tuple(sorted(self.pours, key=lambda p: p.id)))

    @property
    def pads(self) -> tuple[Pad, ...]:
        return tuple(p for fp in self.footprints for p in fp.pads)

    def features(self) -> Iterator[Trace | Via | Pad | Pour]:
        yield from self.traces
        yield from self.vias
        yield from self.pads
        yield from self.pours

    def feature(self, fid: str):
        for f in self.features():
            if f.id == fid:
                return f
        raise KeyError(fid)

    @property
    def nets(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = defaultdict(list)
        for f in self.features():
            if f.net is not None:
                out[f.net].append(f.id)
        return {k: tuple(sorted(v)) for k, v in sorted(out.items())}


def feature_layers(f) -> tuple[Layer, ...]:
    if isinstance(f, Via):
        return (Layer.TOP, Layer.BOTTOM)
    return (f.layer,)


@dataclass(frozen=True)
class Defect:
    feature_id: str
    invariant: str
    message: str = field(default="", compare=False)


def _inside_outline(p, outline) -> bool:
    if point_in_polygon(p, outline):
        return True
    return any(point_segment_distance(p, a, b) <= CONTACT_TOLERANCE_UM for a, b in polygon_edges(outline))


def validate_board(board: Board) -> list[Defect]:
    """Return structural defects; an empty list means the board is well formed."""
    defects: list[Defect] = []
    outline = board.outline
    outline_ok = polygon_is_simple(outline)
    if not outline_ok:
        defects.append(Defect("outline", "outline_simple_closed", "outline is not a simple closed polygon"))

    seen: set[str] = set()

    def check_id(fid: str):
        if fid in seen:
            defects.append(Defect(fid, "unique_id", f"duplicate id {fid!r}"))
        seen.add(fid)

    def check_coords(fid: str, pts):
        if any(abs(p.x) > COORD_LIMIT or abs(p.y) > COORD_LIMIT for p in pts):
            defects.append(Defect(fid, "coordinate_range", "coordinate magnitude exceeds 1e9 um"))

    def check_inside(fid: str, pts):
        if outline_ok and not all(_inside_outline(p, outline) for p in pts):
            defects.append(Defect(fid, "within_outline", "feature lies outside the board outline"))

    check_coords("outline", outline)
    for t in board.traces:
        check_id(t.id)
        check_coords(t.id, t.centerline)
        if t.width <= 0:
            defects.append(Defect(t.id, "width_positive", f"trace width {t.width} um is not > 0"))
        if len(t.centerline) < 2:
            defects.append(Defect(t.id, "centerline_points", "trace needs at least 2 centerline points"))
        if any(a == b for a, b in zip(t.centerline, t.centerline[1:])):
            defects.append(Defect(t.id, "distinct_consecutive_points", "repeated consecutive centerline point"))
        check_inside(t.id, t.centerline)
    for v in board.vias:
        check_id(v.id)
        check_coords(v.id, (v.center,))
        if v.diameter <= 0:
            defects.append(Defect(v.id, "diameter_positive", f"via diameter {v.diameter} um is not > 0"))
        check_inside(v.id, (v.center,))
    refdes_seen: set[str] = set()
    for fp in board.footprints:
        if fp.refdes in refdes_seen:
            defects.append(Defect(fp.refdes, "unique_id", f"duplicate refdes {fp.refdes!r}"))
        refdes_seen.add(fp.refdes)
        if not fp.pads:
            defects.append(Defect(fp.refdes, "footprint_has_pads", "footprint has no pads"))
        for pad in fp.pads:
            check_id(pad.id)
            check_coords(pad.id, pad.polygon)
            if not polygon_is_simple(pad.polygon):
                defects.append(Defect(pad.id, "pad_polygon_simple", "pad polygon is not simple"))
            check_inside(pad.id, pad.polygon)
    for pour in board.pours:
        check_id(pour.id)
        check_coords(pour.id, pour.polygon)
        if not polygon_is_simple(pour.polygon):
            defects.append(Defect(pour.id, "pour_polygon_simple", "pour polygon is not simple"))
        check_inside(pour.id, pour.polygon)
    return sorted(defects, key=lambda d: (d.feature_id, d.invariant))


def bounding_box(board: Board) -> tuple[Point, Point]:
    if not board.outline:
        raise BoardError("empty design")
    xs = [p.x for p in board.outline]
    ys = [p.y for p in board.outline]
    return Point(min(xs), min(ys)), Point(max(xs), max(ys))


class GridIndex:
    """Uniform grid bucketing of axis-aligned boxes for candidate-pair pruning."""

    def __init__(self, cell: float = 1000.0):
        self.cell = cell
        self.buckets: dict[tuple[int, int], list[int]] = defaultdict(list)

    def _cells(self, box):
        c = self.cell
        x0, y0, x1, y1 = (int(v // c) for v in box)
        for i in range(x0, x1 + 1):
            for j in range(y0, y1 + 1):
                yield i, j

    def insert(self, key: int, box) -> None:
        for cell in self._cells(box):
            self.buckets[cell].append(key)

    def pairs(self) -> set[tuple[int, int]]:
        out = set()
        for members in self.buckets.values():
            n = len(members)
            for i in range(n):
                for j in range(i + 1, n):
                    a, b = members[i], members[j]
                    out.add((a, b) if a < b else (b, a))
        return out


def candidate_pairs(shapes: Sequence[Shape], reach: float, cell: float = 1000.0) -> set[tuple[int, int]]:
    """Index pairs whose inflated shapes may be within ``reach`` of each other."""
    grid = GridIndex(cell)
    pad = reach / 2.0 + 1.0
    for i, s in enumerate(shapes):
        x0, y0, x1, y1 = s.bbox()
        grid.insert(i, (x0 - pad, y0 - pad, x1 + pad, y1 + pad))
    return grid.pairs()


def connectivity(board: Board, tolerance: float = CONTACT_TOLERANCE_UM) -> list[list[str]]:
    """Partition feature ids into electrically connected groups."""
    feats = list(board.features())
    shapes = [f.shape() for f in feats]
    parent = list(range(len(feats)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in candidate_pairs(shapes, tolerance):
        if not set(feature_layers(feats[i])) & set(feature_layers(feats[j])):
            continue
        if shape_distance(shapes[i], shapes[j])[0] <= tolerance:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[str]] = defaultdict(list)
    for i, f in enumerate(feats):
        groups[find(i)].append(f.id)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def infer_nets(board: Board) -> Board:
    """Assign net ids from copper connectivity.

    Each connected group keeps the smallest net name already declared by one
    of its members; groups with no declared name get ``N:<first member id>``.
    """
    names: dict[str, str] = {}
    declared = {f.id: f.net for f in board.features()}
    for group in connectivity(board):
        given = sorted({declared[i] for i in group if declared[i] is not None})
        name = given[0] if given else f"N:{group[0]}"
        for fid in group:
            names[fid] = name
    return _with_nets(board, names)


def _with_nets(board: Board, names: dict[str, str]) -> Board:
    return replace(
        board,
        traces=tuple(replace(t, net=names[t.id]) for t in board.traces),
        vias=tuple(replace(v, net=names[v.id]) for v in board.vias),
        footprints=tuple(
            replace(fp, pads=tuple(replace(p, net=names[p.id]) for p in fp.pads)) for fp in board.footprints
        ),
        pours=tuple(replace(p, net=names[p.id]) for p in board.pours),
    )


def net_conflicts(board: Board) -> list[list[str]]:
    """Connected groups whose members declare more than one net name (shorts)."""
    declared = {f.id: f.net for f in board.features()}
    return [g for g in connectivity(board) if len({declared[i] for i in g} - {None}) > 1]
