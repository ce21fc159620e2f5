"""Resistance-versus-strain prediction, failure margins and model fitting."""

from __future__ import annotations

import bisect
import csv
import enum
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

from scipy import stats

from .board import Board, Pad, Trace, Via, feature_layers
from .geometry import Shape, polyline_length, shape_distance


class ModelError(ValueError):
    pass


class FitError(ValueError):
    pass


# --- strain response models ---------------------------------------------------


@dataclass(frozen=True)
class Pouillet:
    """Bulk conductor: R/R0 = (1 + strain) ** (1 + 2 * poisson)."""

    poisson: float = 0.5

    def __post_init__(self):
        if not 0 <= self.poisson <= 0.5:
            raise ModelError(f"Poisson ratio must be in [0, 0.5], got {self.poisson}")


@dataclass(frozen=True)
class PowerLaw:
    exponent: float

    def __post_init__(self):
        if not self.exponent > 0:
            raise ModelError(f"power-law exponent must be > 0, got {self.exponent}")


@dataclass(frozen=True)
class Tabulated:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(e), float(r)) for e, r in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ModelError("tabulated model needs at least two points")
        if pts[0] != (0.0, 1.0):
            raise ModelError("tabulated model must start at (0, 1)")
        if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
            raise ModelError("tabulated strains must be strictly increasing")
        if any(b[1] < a[1] for a, b in zip(pts, pts[1:])):
            raise ModelError("tabulated ratios must be non-decreasing")


StrainResponseModel = Pouillet | PowerLaw | Tabulated

# Calibrated so that R/R0 = 7 at 400 % strain.
OGAIN_EXPONENT = math.log(7) / math.log(5)
OGAIN_MODEL = PowerLaw(OGAIN_EXPONENT)


def pouillet(strain: float, poisson: float = 0.5) -> float:
    if strain < 0:
        raise ModelError(f"strain must be >= 0, got {strain}")
    if not 0 <= poisson <= 0.5:
        raise ModelError(f"Poisson ratio must be in [0, 0.5], got {poisson}")
    return (1.0 + strain) ** (1.0 + 2.0 * poisson)


def predict_ratio(model: StrainResponseModel, strain: float) -> float:
    if strain < 0:
        raise ModelError(f"strain must be >= 0, got {strain}")
    if isinstance(model, Pouillet):
        return pouillet(strain, model.poisson)
    if isinstance(model, PowerLaw):
        return (1.0 + strain) ** model.exponent
    if isinstance(model, Tabulated):
        xs = [p[0] for p in model.points]
        if strain > xs[-1]:
            raise ModelError(f"strain {strain} outside tabulated range [0, {xs[-1]}]")
        i = bisect.bisect_right(xs, strain)
        if i >= len(xs):
            return model.points[-1][1]
        (x0, y0), (x1, y1) = model.points[i - 1], model.points[i]
        return y0 + (y1 - y0) * (strain - x0) / (x1 - x0)
    raise TypeError(f"unknown model {model!r}")


# --- materials ------------------------------------------------------------------


@dataclass(frozen=True)
class MaterialProfile:
    name: str
    conductivity: float  # S/m
    density: float  # g/cc
    model: StrainResponseModel
    thickness_um: float = 100.0

    def __post_init__(self):
        if self.conductivity <= 0:
            raise ModelError("conductivity must be > 0")


OGAIN = MaterialProfile("OGaIn", 2.11e6, 4.65, OGAIN_MODEL)
COPPER = MaterialProfile("annealed copper", 1 / 1.72e-8, 8.93, Pouillet(0.5), thickness_um=35.0)
MATERIALS = {"ogain": OGAIN, "copper": COPPER}


@dataclass(frozen=True)
class ContactModel:
    per_interface_ohm: float = 0.04

    def __post_init__(self):
        if self.per_interface_ohm < 0:
            raise ModelError("contact resistance must be >= 0")


@dataclass(frozen=True)
class FailureThresholds:
    safe_strain: float = 1.0
    onset_strain: float = 2.02
    mean_fail_strain: float = 3.28
    max_fail_strain: float = 4.04
    cyclic_mean_cycles_at_100pct: int = 124

    def __post_init__(self):
        if not self.safe_strain < self.onset_strain < self.mean_fail_strain < self.max_fail_strain:
            raise ModelError("thresholds must satisfy safe < onset < mean < max")


class Margin(str, enum.Enum):
    OK = "ok"
    CAUTION = "caution"
    AT_RISK = "at_risk"
    BEYOND_OBSERVED = "beyond_observed"


def failure_margin(strain: float, thresholds: FailureThresholds = FailureThresholds()) -> Margin:
    if strain < 0:
        raise ModelError(f"strain must be >= 0, got {strain}")
    if strain <= thresholds.safe_strain:
        return Margin.OK
    if strain <= thresholds.onset_strain:
        return Margin.CAUTION
    if strain <= thresholds.max_fail_strain:
        return Margin.AT_RISK
    return Margin.BEYOND_OBSERVED


# --- resistance -------------------------------------------------------------------


def trace_resistance(length: float, width: float, thickness: float, conductivity: float) -> float:
    """R = L / (w * h * sigma), SI units. A zero length gives 0 ohm."""
    if length < 0 or width <= 0 or thickness <= 0 or conductivity <= 0:
        raise ModelError("trace_resistance needs length >= 0 and positive width, thickness, conductivity")
    return length / (width * thickness * conductivity)


@dataclass
class NetResistance:
    net: str
    trace_ohm: float  # unstrained trace term
    contact_ohm: float
    ratio: float
    interfaces: int
    flags: list[str] = field(default_factory=list)

    @property
    def unstrained(self) -> float:
        return self.trace_ohm + self.contact_ohm

    @property
    def strained(self) -> float:
        return self.trace_ohm * self.ratio + self.contact_ohm


def _is_simple_path(nodes: list[str], edges: set[tuple[str, str]]) -> bool:
    if len(nodes) <= 1:
        return True
    deg: dict[str, int] = defaultdict(int)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    return len(edges) == len(nodes) - 1 and all(deg[n] <= 2 for n in nodes) and all(deg[n] >= 1 for n in nodes)


def _mid_span(t, other) -> bool:
    """True when ``other`` touches trace ``t`` away from both end caps (a tap)."""
    if not isinstance(t, Trace):
        return False
    s = other.shape()
    return all(shape_distance(Shape.circle(end, t.width), s)[0] > 1 for end in (t.centerline[0], t.centerline[-1]))


def net_resistance(
    board: Board,
    net: str,
    material: MaterialProfile = OGAIN,
    contact: ContactModel = ContactModel(),
    strain: float = 0.0,
) -> NetResistance:
    """Series resistance of a net: traces scaled by the strain model plus pad contacts.

    Branched nets are summed in series and flagged as an upper bound.
    """
    members = board.nets.get(net)
    if members is None:
        raise KeyError(f"unknown net {net!r}")
    feats = [board.feature(fid) for fid in members]
    traces = [f for f in feats if isinstance(f, Trace)]
    pads = [f for f in feats if isinstance(f, Pad)]
    h = material.thickness_um * 1e-6
    trace_ohm = sum(
        trace_resistance(polyline_length(t.centerline) * 1e-6, t.width * 1e-6, h, material.conductivity) for t in traces
    )
    contact_ohm = contact.per_interface_ohm * len(pads)
    flags = []
    graph_feats = [f for f in feats if isinstance(f, (Trace, Via, Pad))]
    ids = [f.id for f in graph_feats]
    edges = set()
    tapped = False
    for i, a in enumerate(graph_feats):
        for b in graph_feats[i + 1 :]:
            if not set(feature_layers(a)) & set(feature_layers(b)):
                continue
            if isinstance(a, Pad) and isinstance(b, Pad):
                continue
            if shape_distance(a.shape(), b.shape())[0] <= 1:
                edges.add((a.id, b.id))
                if _mid_span(a, b) or _mid_span(b, a):
                    tapped = True
    if tapped or not _is_simple_path(ids, edges):
        flags.append("branched: series upper bound")
    return NetResistance(net, trace_ohm, contact_ohm, predict_ratio(material.model, strain), len(pads), flags)


# --- fitting ------------------------------------------------------------------------


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float


def fit_contact_resistance(samples: Sequence[tuple[float, float]]) -> LineFit:
    """Transmission-line fit: resistance vs length; the intercept is the contact term."""
    if len(samples) < 2:
        raise FitError("need at least two (length, resistance) samples")
    xs = [float(s[0]) for s in samples]
    ys = [float(s[1]) for s in samples]
    if len(set(xs)) < 2:
        raise FitError("need at least two distinct lengths")
    res = stats.linregress(xs, ys)
    return LineFit(float(res.slope), float(res.intercept), float(res.rvalue) ** 2)


@dataclass(frozen=True)
class StrainFit:
    model: PowerLaw
    r_squared: float


def fit_strain_model(samples: Sequence[tuple[float, float]]) -> StrainFit:
    """Least squares on log(R/R0) = k * log(1 + strain), through the origin."""
    pts = [(float(e), float(r)) for e, r in samples]
    if any(e < 0 for e, _ in pts):
        raise FitError("strains must be >= 0")
    if any(r < 1 for _, r in pts):
        raise FitError("resistance ratios must be >= 1")
    xs = [math.log1p(e) for e, _ in pts]
    ys = [math.log(r) for _, r in pts]
    sxx = math.fsum(x * x for x in xs)
    if sxx == 0:
        raise FitError("need at least one sample with strain > 0")
    k = math.fsum(x * y for x, y in zip(xs, ys)) / sxx
    if k <= 0:
        raise FitError("fitted exponent is not positive")
    ss_res = math.fsum((y - k * x) ** 2 for x, y in zip(xs, ys))
    mean = math.fsum(ys) / len(ys)
    ss_tot = math.fsum((y - mean) ** 2 for y in ys)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res <= 1e-24 else 0.0)
    return StrainFit(PowerLaw(k), r2)


def read_measurements(text: str) -> tuple[str, list[tuple[float, float]]]:
    """Parse a measurement CSV; returns ("strain", rows) or ("contact", rows)."""
    reader = csv.reader(io.StringIO(text.lstrip("﻿")))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise FitError("empty measurement file") from None
    if header == ["strain", "ratio"]:
        kind = "strain"
    elif header == ["length_m", "resistance_ohm"]:
        kind = "contact"
    else:
        raise FitError(f"unrecognized header {','.join(header)!r}; expected strain,ratio or length_m,resistance_ohm")
    rows = []
    for n, row in enumerate(reader, start=2):
        if not row or not any(c.strip() for c in row):
            continue
        if len(row) != 2:
            raise FitError(f"row {n}: expected 2 columns, got {len(row)}")
        try:
            rows.append((float(row[0]), float(row[1])))
        except ValueError:
            raise FitError(f"row {n}: non-numeric value") from None
    return kind, rows
