"""Planar geometry kernel.

All inputs are in integer micrometers; distances come back as floats in
micrometers. Copper features are modelled as a *core* (points, segments and
optionally a filled polygon) inflated by a radius, which covers stroked
traces with round caps, circular vias and polygonal pads alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence


class Point(NamedTuple):
    x: int
    y: int


XY = tuple[float, float]


def _closest_on_segment(p: XY, a: XY, b: XY) -> XY:
    ax, ay = a
    dx, dy = b[0] - ax, b[1] - ay
    den = dx * dx + dy * dy
    if den == 0:
        return a
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / den
    t = 0.0 if t < 0 else 1.0 if t > 1 else t
    return (ax + t * dx, ay + t * dy)


def point_segment_distance(p: XY, a: XY, b: XY) -> float:
    c = _closest_on_segment(p, a, b)
    return math.hypot(p[0] - c[0], p[1] - c[1])


def _orient(a: XY, b: XY, c: XY) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: XY, b: XY, p: XY) -> bool:
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def segments_intersect(a: XY, b: XY, c: XY, d: XY) -> bool:
    """Closed-segment intersection test (touching counts)."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if ((o1 > 0 and o2 < 0) or (o1 < 0 and o2 > 0)) and ((o3 > 0 and o4 < 0) or (o3 < 0 and o4 > 0)):
        return True
    if o1 == 0 and _on_segment(a, b, c):
        return True
    if o2 == 0 and _on_segment(a, b, d):
        return True
    if o3 == 0 and _on_segment(c, d, a):
        return True
    if o4 == 0 and _on_segment(c, d, b):
        return True
    return False


def segment_distance(a: XY, b: XY, c: XY, d: XY) -> tuple[float, XY, XY]:
    """Minimum distance between segments ab and cd, with the closest points."""
    if segments_intersect(a, b, c, d):
        # Locate the crossing for reporting; collinear overlaps fall back to an endpoint.
        den = (b[0] - a[0]) * (d[1] - c[1]) - (b[1] - a[1]) * (d[0] - c[0])
        if den != 0:
            t = ((c[0] - a[0]) * (d[1] - c[1]) - (c[1] - a[1]) * (d[0] - c[0])) / den
            p = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
            return 0.0, p, p
        for p, s, e in ((a, c, d), (b, c, d), (c, a, b), (d, a, b)):
            if _on_segment(s, e, p):
                return 0.0, p, p
    best = None
    for p, s, e, p_first in ((a, c, d, True), (b, c, d, True), (c, a, b, False), (d, a, b, False)):
        q = _closest_on_segment(p, s, e)
        dist = math.hypot(p[0] - q[0], p[1] - q[1])
        if best is None or dist < best[0]:
            best = (dist, p, q) if p_first else (dist, q, p)
    return best


def point_in_polygon(p: XY, poly: Sequence[XY]) -> bool:
    """Even-odd test; points on the boundary count as inside."""
    n = len(poly)
    inside = False
    x, y = p
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if _orient(a, b, p) == 0 and _on_segment(a, b, p):
            return True
        if (a[1] > y) != (b[1] > y):
            xc = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if x < xc:
                inside = not inside
    return inside


def polygon_edges(poly: Sequence[XY]) -> list[tuple[XY, XY]]:
    n = len(poly)
    return [(poly[i], poly[(i + 1) % n]) for i in range(n)]


def polygon_distance_to_point(p: XY, poly: Sequence[XY]) -> float:
    """Distance from p to the boundary of poly (0 if p is inside)."""
    if point_in_polygon(p, poly):
        return 0.0
    return min(point_segment_distance(p, a, b) for a, b in polygon_edges(poly))


def polygon_is_simple(poly: Sequence[XY]) -> bool:
    n = len(poly)
    if n < 3 or len(set(poly)) != n:
        return False
    edges = polygon_edges(poly)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if segments_intersect(*edges[i], *edges[j]):
                return False
    # collinear degeneracy: zero area
    return polygon_area(poly) != 0


def polygon_area(poly: Sequence[XY]) -> float:
    s = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return s / 2.0


def polyline_length(points: Sequence[XY]) -> float:
    return sum(math.dist(points[i], points[i + 1]) for i in range(len(points) - 1))


def convex_hull(points: Iterable[XY]) -> list[XY]:
    """Andrew's monotone chain, counter-clockwise, no collinear points."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[XY] = []
    for p in pts:
        while len(lower) >= 2 and _orient(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[XY] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True)
class Shape:
    """Core geometry inflated by ``radius``.

    ``segments`` holds the core edges (a point is a zero-length segment).
    When ``polygon`` is set the core is the filled polygon, whose edges are
    also listed in ``segments``.
    """

    segments: tuple[tuple[XY, XY], ...]
    radius: float = 0.0
    polygon: tuple[XY, ...] | None = None

    @classmethod
    def stroke(cls, points: Sequence[XY], width: float) -> "Shape":
        if len(points) == 1:
            segs = ((points[0], points[0]),)
        else:
            segs = tuple((points[i], points[i + 1]) for i in range(len(points) - 1))
        return cls(segs, width / 2.0)

    @classmethod
    def circle(cls, center: XY, diameter: float) -> "Shape":
        return cls(((center, center),), diameter / 2.0)

    @classmethod
    def filled(cls, poly: Sequence[XY]) -> "Shape":
        poly = tuple(poly)
        return cls(tuple(polygon_edges(poly)), 0.0, poly)

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [c for s in self.segments for c in (s[0][0], s[1][0])]
        ys = [c for s in self.segments for c in (s[0][1], s[1][1])]
        r = self.radius
        return min(xs) - r, min(ys) - r, max(xs) + r, max(ys) + r


def _core_distance(a: Shape, b: Shape) -> tuple[float, XY, XY]:
    if a.polygon is not None:
        p = b.segments[0][0]
        if point_in_polygon(p, a.polygon):
            return 0.0, p, p
    if b.polygon is not None:
        p = a.segments[0][0]
        if point_in_polygon(p, b.polygon):
            return 0.0, p, p
    best = None
    for s in a.segments:
        for t in b.segments:
            d = segment_distance(s[0], s[1], t[0], t[1])
            if best is None or d[0] < best[0]:
                best = d
                if d[0] == 0:
                    return best
    return best


def shape_distance(a: Shape, b: Shape) -> tuple[float, XY, XY]:
    """Edge-to-edge distance between inflated shapes and a witness point pair.

    The witness points lie on the respective inflated boundaries (or coincide
    when the shapes overlap).
    """
    # canonical argument order keeps the float result exactly symmetric
    if (b.segments, b.radius, b.polygon or ()) < (a.segments, a.radius, a.polygon or ()):
        gap, qb, qa = shape_distance(b, a)
        return gap, qa, qb
    core, pa, pb = _core_distance(a, b)
    gap = core - (a.radius + b.radius)
    if gap <= 0:
        mid = ((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2)
        return 0.0, mid, mid
    ux, uy = (pb[0] - pa[0]) / core, (pb[1] - pa[1]) / core
    qa = (pa[0] + ux * a.radius, pa[1] + uy * a.radius)
    qb = (pb[0] - ux * b.radius, pb[1] - uy * b.radius)
    return gap, qa, qb
