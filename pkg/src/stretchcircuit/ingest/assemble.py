from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..board import Board, FootprintInstance, PackageClass, Pad, Via, infer_nets, validate_board
from ..geometry import point_in_polygon
from .gerber import GerberFeatures

log = logging.getLogger(__name__)


class AssemblyError(ValueError):
    def __init__(self, defects):
        self.defects = list(defects)
        lines = "; ".join(f"{d.feature_id}: {d.invariant}" for d in self.defects)
        super().__init__(f"board failed validation: {lines}")


@dataclass(frozen=True)
class FootprintAnnotation:
    """Sidecar metadata for pads that Gerber cannot describe.

    Pads whose centroid falls inside ``region`` (an um polygon) belong to
    this footprint.
    """

    refdes: str
    package_class: PackageClass
    region: tuple[tuple[int, int], ...]
    strain_sensitive: bool = False


def _centroid(poly) -> tuple[float, float]:
    n = len(poly)
    return sum(p[0] for p in poly) / n, sum(p[1] for p in poly) / n


def assemble_board(
    top: GerberFeatures | None,
    bottom: GerberFeatures | None,
    drills: Sequence[Via],
    outline: Sequence[tuple[int, int]],
    annotations: Iterable[FootprintAnnotation] = (),
    name: str = "board",
) -> Board:
    """Combine parsed layers into a validated board with inferred nets.

    Pads not claimed by any annotation become single-pad no-lead footprints
    named ``PAD<n>``.
    """
    top = top or GerberFeatures()
    bottom = bottom or GerberFeatures()
    pads: list[Pad] = [*top.pads, *bottom.pads]
    claimed: dict[str, list[Pad]] = {}
    loose: list[Pad] = []
    annotations = list(annotations)
    for pad in pads:
        c = _centroid(pad.polygon)
        owner = next((a for a in annotations if point_in_polygon(c, a.region)), None)
        if owner is None:
            loose.append(pad)
        else:
            claimed.setdefault(owner.refdes, []).append(pad)
    footprints = [
        FootprintInstance(a.refdes, a.package_class, tuple(claimed[a.refdes]), a.strain_sensitive)
        for a in annotations
        if a.refdes in claimed
    ]
    if loose:
        log.warning("%d pads not covered by footprint annotations", len(loose))
    footprints += [FootprintInstance(f"PAD{i:03d}", PackageClass.NO_LEAD, (p,)) for i, p in enumerate(loose, 1)]
    board = Board(
        name=name,
        outline=tuple(outline),
        traces=(*top.traces, *bottom.traces),
        vias=tuple(drills),
        footprints=tuple(footprints),
        pours=(*top.pours, *bottom.pours),
    )
    defects = validate_board(board)
    if defects:
        raise AssemblyError(defects)
    return infer_nets(board)
