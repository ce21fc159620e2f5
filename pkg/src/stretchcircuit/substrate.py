"""Substrate database and conductor-substrate compatibility."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import jsonschema

from .electromech import fit_contact_resistance

COMPATIBLE_TACK_N = 0.18
MARGINAL_TACK_N = 0.1


class SubstrateError(ValueError):
    pass


class Compatibility(enum.IntEnum):
    INCOMPATIBLE = 0
    MARGINAL = 1
    COMPATIBLE = 2

    @property
    def label(self) -> str:
        return self.name.lower()


def compatibility(tack: float) -> Compatibility:
    if tack < 0:
        raise SubstrateError(f"tack must be >= 0, got {tack}")
    if tack >= COMPATIBLE_TACK_N:
        return Compatibility.COMPATIBLE
    if tack >= MARGINAL_TACK_N:
        return Compatibility.MARGINAL
    return Compatibility.INCOMPATIBLE


@dataclass(frozen=True)
class SubstrateProfile:
    name: str
    tack: float | None  # N
    modulus_100pct: float | None  # kPa
    trace_failure_rate: float | None = None
    role: str = "substrate"
    estimated: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.tack is not None and self.tack < 0:
            raise SubstrateError(f"{self.name}: tack must be >= 0")
        if self.trace_failure_rate is not None and not 0 <= self.trace_failure_rate <= 1:
            raise SubstrateError(f"{self.name}: failure rate must be in [0, 1]")

    @property
    def compatibility(self) -> Compatibility | None:
        return None if self.tack is None else compatibility(self.tack)


@dataclass(frozen=True)
class AdhesionCalibration:
    slope: float  # N adhesion per N tack
    intercept: float  # N
    r_squared: float

    def __post_init__(self):
        if not 0 <= self.r_squared <= 1:
            raise SubstrateError("r_squared must be in [0, 1]")


def predict_adhesion(tack: float, calibration: AdhesionCalibration | None) -> float:
    if calibration is None:
        raise SubstrateError(
            "no adhesion calibration loaded: digitize tack/adhesion data or measure it, "
            "then fit with fit_adhesion_calibration"
        )
    if tack < 0:
        raise SubstrateError(f"tack must be >= 0, got {tack}")
    return max(0.0, calibration.slope * tack + calibration.intercept)


def fit_adhesion_calibration(samples: Sequence[tuple[float, float]]) -> AdhesionCalibration:
    """Linear fit of adhesion (N) against tack (N)."""
    fit = fit_contact_resistance(samples)
    return AdhesionCalibration(fit.slope, fit.intercept, min(1.0, max(0.0, fit.r_squared)))


_NUM_OR_NULL = {"type": ["number", "null"]}
PROFILE_SCHEMA = {
    "type": "object",
    "properties": {
        "profiles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "tack_n"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "role": {"type": "string"},
                    "tack_n": {"type": ["number", "null"], "minimum": 0},
                    "modulus_100pct_kpa": _NUM_OR_NULL,
                    "trace_failure_rate": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
                    "estimated": {"type": "array", "items": {"type": "string"}},
                },
                "additionalProperties": False,
            },
        },
        "stiffness": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "modulus_100pct_kpa"],
                "properties": {
                    "name": {"type": "string"},
                    "role": {"type": "string"},
                    "modulus_100pct_kpa": {"type": "number", "minimum": 0},
                    "estimated": {"type": "array", "items": {"type": "string"}},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

CALIBRATION_SCHEMA = {
    "type": "object",
    "required": ["slope_n_per_n", "intercept_n", "r_squared"],
    "properties": {
        "slope_n_per_n": {"type": "number"},
        "intercept_n": {"type": "number"},
        "r_squared": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "additionalProperties": False,
}


def _validate(data, schema) -> None:
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
        raise SubstrateError(f"{path}: {exc.message}") from None


def load_profiles(text: str) -> list[SubstrateProfile]:
    """Parse a profile file. An empty (whitespace-only) file yields no profiles."""
    if not text.strip():
        return []
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SubstrateError(f"$: not valid JSON: {exc}") from None
    _validate(data, PROFILE_SCHEMA)
    return [
        SubstrateProfile(
            name=p["name"],
            tack=p.get("tack_n"),
            modulus_100pct=p.get("modulus_100pct_kpa"),
            trace_failure_rate=p.get("trace_failure_rate"),
            role=p.get("role", "substrate"),
            estimated=tuple(p.get("estimated", ())),
        )
        for p in data.get("profiles", [])
    ]


def load_stiffness(text: str) -> dict[str, float]:
    if not text.strip():
        return {}
    data = json.loads(text)
    _validate(data, PROFILE_SCHEMA)
    return {s["name"]: s["modulus_100pct_kpa"] for s in data.get("stiffness", [])}


def load_calibration(text: str) -> AdhesionCalibration:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SubstrateError(f"$: not valid JSON: {exc}") from None
    _validate(data, CALIBRATION_SCHEMA)
    return AdhesionCalibration(data["slope_n_per_n"], data["intercept_n"], data["r_squared"])


def _builtin_text() -> str:
    return resources.files("stretchcircuit").joinpath("data/materials.json").read_text(encoding="utf-8")


def builtin_profiles() -> list[SubstrateProfile]:
    """Built-in substrates.

    Failure rates are measured values. Tack and modulus entries listed in
    ``estimated`` are placeholders chosen to respect the measured ordering;
    replace them with your own measurements where precision matters.
    """
    return load_profiles(_builtin_text())


def builtin_stiffness() -> dict[str, float]:
    return load_stiffness(_builtin_text())
