"""Design-rule checking for stretchable two-layer boards."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from .board import Board, PackageClass, Trace, Via, candidate_pairs
from .geometry import Point, Shape, shape_distance


@dataclass(frozen=True)
class DesignRuleSet:
    """Stretchable design limits in micrometers."""

    min_trace_width: int = 200
    min_trace_clearance: int = 170
    min_via_trace_clearance: int = 290
    target_via_diameter: int = 400
    co2_beam: int = 300
    uv_beam: int = 15
    warn_on_leaded: bool = True

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                continue
            if v < 0 or (v == 0 and f.name in ("min_trace_width", "target_via_diameter")):
                raise ValueError(f"rule {f.name} must be positive, got {v}")

    def with_overrides(self, **overrides) -> "DesignRuleSet":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown rule(s): {', '.join(sorted(unknown))}")
        return DesignRuleSet(**{**asdict(self), **overrides})

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Violation:
    rule: str
    severity: Severity
    features: tuple[str, ...]
    measured: float | None
    limit: float | None
    location: Point
    message: str = field(default="", compare=False)

    def sort_key(self):
        return (self.rule, self.features)


def _shape(f) -> Shape:
    return f.shape()


def min_distance(a, b) -> float:
    """Edge-to-edge distance in um between two features (0 when touching).

    Accepts board features (traces, vias, pads, pours) or raw :class:`Shape`.
    """
    sa = a if isinstance(a, Shape) else _shape(a)
    sb = b if isinstance(b, Shape) else _shape(b)
    return shape_distance(sa, sb)[0]


def _loc(p) -> Point:
    return Point(round(p[0]), round(p[1]))


def _same_net(a, b) -> bool:
    return a.net is not None and a.net == b.net


def _clearance_rule(a, b, rules: DesignRuleSet):
    if isinstance(a, Trace) and isinstance(b, Trace):
        if a.layer != b.layer:
            return None
        return "trace_clearance", rules.min_trace_clearance
    if isinstance(a, Via) and isinstance(b, Trace) or isinstance(a, Trace) and isinstance(b, Via):
        return "via_trace_clearance", rules.min_via_trace_clearance
    return None


def check_board(board: Board, rules: DesignRuleSet = DesignRuleSet(), use_index: bool = True) -> list[Violation]:
    """Width and clearance violations, canonically sorted.

    A measurement equal to its limit passes. Features on the same net are
    exempt from clearance rules.
    """
    out: list[Violation] = []
    for t in board.traces:
        if t.width < rules.min_trace_width:
            mid = t.centerline[len(t.centerline) // 2]
            out.append(
                Violation(
                    "trace_width",
                    Severity.ERROR,
                    (t.id,),
                    float(t.width),
                    float(rules.min_trace_width),
                    mid,
                    f"trace {t.id} width {t.width / 1000:.3f} mm < {rules.min_trace_width / 1000:.3f} mm",
                )
            )

    feats = [*board.traces, *board.vias]
    shapes = [_shape(f) for f in feats]
    reach = max(rules.min_trace_clearance, rules.min_via_trace_clearance)
    if use_index:
        pairs = candidate_pairs(shapes, reach)
    else:
        pairs = {(i, j) for i in range(len(feats)) for j in range(i + 1, len(feats))}
    for i, j in pairs:
        a, b = feats[i], feats[j]
        rule = _clearance_rule(a, b, rules)
        if rule is None or _same_net(a, b):
            continue
        rule_id, limit = rule
        d, pa, pb = shape_distance(shapes[i], shapes[j])
        if d < limit:
            ids = tuple(sorted((a.id, b.id)))
            loc = _loc(((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2))
            out.append(
                Violation(
                    rule_id,
                    Severity.ERROR,
                    ids,
                    d,
                    float(limit),
                    loc,
                    f"{ids[0]} to {ids[1]} clearance {d / 1000:.3f} mm < {limit / 1000:.3f} mm",
                )
            )
    return sorted(out, key=Violation.sort_key)


def check_packages(board: Board, rules: DesignRuleSet = DesignRuleSet()) -> list[Violation]:
    """Warn about leaded and through-hole parts, which limit stretchability."""
    if not rules.warn_on_leaded:
        return []
    out = []
    for fp in board.footprints:
        if fp.package_class is PackageClass.NO_LEAD:
            continue
        xs = [p.x for pad in fp.pads for p in pad.polygon]
        ys = [p.y for pad in fp.pads for p in pad.polygon]
        loc = Point(round(sum(xs) / len(xs)), round(sum(ys) / len(ys)))
        out.append(
            Violation(
                "package_stretchability",
                Severity.WARNING,
                (fp.refdes,),
                None,
                None,
                loc,
                f"{fp.refdes} is {fp.package_class.value.replace('_', '-')}; expect lower strain to failure than no-lead parts",
            )
        )
    return sorted(out, key=Violation.sort_key)


def violation_to_dict(v: Violation) -> dict:
    return {
        "rule": v.rule,
        "severity": v.severity.value,
        "features": list(v.features),
        "measured_mm": None if v.measured is None else round(v.measured / 1000, 3),
        "limit_mm": None if v.limit is None else round(v.limit / 1000, 3),
        "location_mm": [v.location.x / 1000, v.location.y / 1000],
        "message": v.message,
    }
