"""Native board format: JSON with millimeter coordinates at 3 decimals.

Serialization is byte-deterministic: features are sorted by id, object keys
follow a fixed order and every length is written with exactly three
decimals. Values are converted to and from integer micrometers without
passing through binary floating point.
"""

from __future__ import annotations

import json
from decimal import Decimal, InvalidOperation

import jsonschema

from ..board import Board, FootprintInstance, Pad, Pour, Trace, Via

_MM = {"type": "number"}
_POS_MM = {"type": "number", "exclusiveMinimum": 0}
_XY = {"type": "array", "items": _MM, "minItems": 2, "maxItems": 2}
_LAYER = {"enum": ["top", "bottom"]}
_NET = {"type": ["string", "null"]}
_ID = {"type": "string", "minLength": 1}

SCHEMA = {
    "type": "object",
    "required": ["name", "outline_mm", "traces", "vias", "footprints", "pours"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "outline_mm": {"type": "array", "items": _XY},
        "traces": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "layer", "width_mm", "points_mm"],
                "additionalProperties": False,
                "properties": {
                    "id": _ID,
                    "layer": _LAYER,
                    "width_mm": _POS_MM,
                    "net": _NET,
                    "points_mm": {"type": "array", "items": _XY, "minItems": 2},
                },
            },
        },
        "vias": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "center_mm", "diameter_mm"],
                "additionalProperties": False,
                "properties": {
                    "id": _ID,
                    "kind": {"enum": ["via", "header_hole"]},
                    "center_mm": _XY,
                    "diameter_mm": _POS_MM,
                    "net": _NET,
                },
            },
        },
        "footprints": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["refdes", "package_class", "pads"],
                "additionalProperties": False,
                "properties": {
                    "refdes": _ID,
                    "package_class": {"enum": ["no_lead", "leaded", "through_hole"]},
                    "strain_sensitive": {"type": "boolean"},
                    "pads": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["id", "layer", "polygon_mm"],
                            "additionalProperties": False,
                            "properties": {
                                "id": _ID,
                                "layer": _LAYER,
                                "net": _NET,
                                "polygon_mm": {"type": "array", "items": _XY, "minItems": 3},
                            },
                        },
                    },
                },
            },
        },
        "pours": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "layer", "polygon_mm"],
                "additionalProperties": False,
                "properties": {
                    "id": _ID,
                    "layer": _LAYER,
                    "net": _NET,
                    "polygon_mm": {"type": "array", "items": _XY, "minItems": 3},
                },
            },
        },
    },
}


class NativeFormatError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class Mm:
    """An exact integer-micrometer value rendered as millimeters."""

    __slots__ = ("um",)

    def __init__(self, um: int):
        self.um = int(um)

    def __str__(self):
        sign = "-" if self.um < 0 else ""
        q, r = divmod(abs(self.um), 1000)
        return f"{sign}{q}.{r:03d}"


def mm_to_um(value, path: str = "$") -> int:
    if isinstance(value, bool) or not isinstance(value, (int, Decimal, float)):
        raise NativeFormatError(path, f"expected a number, got {value!r}")
    try:
        d = Decimal(str(value)) * 1000
    except InvalidOperation as exc:
        raise NativeFormatError(path, f"invalid number {value!r}") from exc
    if d != d.to_integral_value():
        raise NativeFormatError(path, f"{value} mm has more than 3 decimals")
    return int(d)


def dumps(obj, indent: int = 2, level: int = 0) -> str:
    """Deterministic JSON writer that understands :class:`Mm` values.

    Dict key order is preserved as given; callers build dicts in a fixed
    order. Short numeric arrays stay on one line.
    """
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, Mm):
        return str(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (Mm, int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, float):
        return repr(obj)
    return json.dumps(obj, ensure_ascii=False)


def _xy(p) -> list[Mm]:
    return [Mm(p[0]), Mm(p[1])]


def board_to_dict(board: Board) -> dict:
    return {
        "name": board.name,
        "outline_mm": [_xy(p) for p in board.outline],
        "traces": [
            {
                "id": t.id,
                "layer": t.layer.value,
                "width_mm": Mm(t.width),
                "net": t.net,
                "points_mm": [_xy(p) for p in t.centerline],
            }
            for t in board.traces
        ],
        "vias": [
            {
                "id": v.id,
                "kind": v.kind.value,
                "center_mm": _xy(v.center),
                "diameter_mm": Mm(v.diameter),
                "net": v.net,
            }
            for v in board.vias
        ],
        "footprints": [
            {
                "refdes": fp.refdes,
                "package_class": fp.package_class.value,
                "strain_sensitive": fp.strain_sensitive,
                "pads": [
                    {"id": p.id, "layer": p.layer.value, "net": p.net, "polygon_mm": [_xy(q) for q in p.polygon]}
                    for p in fp.pads
                ],
            }
            for fp in board.footprints
        ],
        "pours": [
            {"id": p.id, "layer": p.layer.value, "net": p.net, "polygon_mm": [_xy(q) for q in p.polygon]}
            for p in board.pours
        ],
    }


def serialize_native(board: Board) -> str:
    return dumps(board_to_dict(board)) + "\n"


def _json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _pts(seq, path: str):
    return tuple((mm_to_um(x, f"{path}[{i}][0]"), mm_to_um(y, f"{path}[{i}][1]")) for i, (x, y) in enumerate(seq))


def board_from_dict(data) -> Board:
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise NativeFormatError(_json_path(e.absolute_path), e.message)
    traces = tuple(
        Trace(
            id=t["id"],
            layer=t["layer"],
            width=mm_to_um(t["width_mm"], f"$.traces[{i}].width_mm"),
            net=t.get("net"),
            centerline=_pts(t["points_mm"], f"$.traces[{i}].points_mm"),
        )
        for i, t in enumerate(data["traces"])
    )
    vias = tuple(
        Via(
            id=v["id"],
            center=_pts([v["center_mm"]], f"$.vias[{i}].center_mm")[0],
            diameter=mm_to_um(v["diameter_mm"], f"$.vias[{i}].diameter_mm"),
            kind=v.get("kind", "via"),
            net=v.get("net"),
        )
        for i, v in enumerate(data["vias"])
    )
    footprints = tuple(
        FootprintInstance(
            refdes=fp["refdes"],
            package_class=fp["package_class"],
            strain_sensitive=fp.get("strain_sensitive", False),
            pads=tuple(
                Pad(
                    id=p["id"],
                    layer=p["layer"],
                    net=p.get("net"),
                    polygon=_pts(p["polygon_mm"], f"$.footprints[{i}].pads[{j}].polygon_mm"),
                )
                for j, p in enumerate(fp["pads"])
            ),
        )
        for i, fp in enumerate(data["footprints"])
    )
    pours = tuple(
        Pour(id=p["id"], layer=p["layer"], net=p.get("net"), polygon=_pts(p["polygon_mm"], f"$.pours[{i}].polygon_mm"))
        for i, p in enumerate(data["pours"])
    )
    return Board(
        name=data["name"],
        outline=_pts(data["outline_mm"], "$.outline_mm"),
        traces=traces,
        vias=vias,
        footprints=footprints,
        pours=pours,
    )


def parse_json(text: str):
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise NativeFormatError("$", f"not valid JSON: {exc}") from exc


def load_native(text: str) -> Board:
    return board_from_dict(parse_json(text))
