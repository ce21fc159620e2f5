"""Translate two-layer PCB designs into stretchable liquid-metal circuit fabrication packages."""

__version__ = "0.1.0"

from .board import Board, FootprintInstance, Layer, PackageClass, Pad, Pour, Trace, Via, ViaKind  # noqa: E402
from .drc import DesignRuleSet  # noqa: E402
from .geometry import Point  # noqa: E402

__all__ = [
    "Board",
    "DesignRuleSet",
    "FootprintInstance",
    "Layer",
    "PackageClass",
    "Pad",
    "Point",
    "Pour",
    "Trace",
    "Via",
    "ViaKind",
    "__version__",
]
