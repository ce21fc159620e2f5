"""Board file ingestion: Gerber, Excellon and the native JSON format."""

from .assemble import AssemblyError, FootprintAnnotation, assemble_board
from .excellon import DrillDocument, ExcellonError, parse_excellon, read_excellon
from .gerber import GerberDocument, GerberError, GerberFeatures, parse_gerber, read_gerber
from .native import NativeFormatError, load_native, serialize_native

__all__ = [
    "AssemblyError",
    "DrillDocument",
    "ExcellonError",
    "FootprintAnnotation",
    "GerberDocument",
    "GerberError",
    "GerberFeatures",
    "NativeFormatError",
    "assemble_board",
    "load_native",
    "parse_excellon",
    "parse_gerber",
    "read_excellon",
    "read_gerber",
    "serialize_native",
]
