"""Command-line front end.

Exit codes: 0 success, 1 design-rule violations (or export refused because
of them), 64 usage error, 65 malformed input data, 74 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Sequence

from . import __version__
from .board import Board, infer_nets
from .drc import DesignRuleSet, Severity, check_board, check_packages, violation_to_dict
from .electromech import (
    MATERIALS,
    ContactModel,
    FitError,
    ModelError,
    failure_margin,
    fit_contact_resistance,
    fit_strain_model,
    net_resistance,
    read_measurements,
)
from .fab import DrcRefusal, FabError, LaserSettings, generate_masks, write_package
from .ingest import (
    AssemblyError,
    ExcellonError,
    FootprintAnnotation,
    GerberError,
    NativeFormatError,
    assemble_board,
    load_native,
    parse_excellon,
    parse_gerber,
    serialize_native,
)
from .ingest.native import mm_to_um, parse_json
from .substrate import SubstrateError, builtin_profiles, compatibility, load_profiles
from .transform import PourMode, TransformError, transform_board

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_IOERR = 74

CONFIG_ENV = "STRETCHCIRCUIT_CONFIG"
COMMANDS = ("check", "transform", "predict", "export", "materials", "fit", "ingest")

log = logging.getLogger("stretchcircuit")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    rules: DesignRuleSet = field(default_factory=DesignRuleSet)
    material: str = "vhb"
    conductor: str = "ogain"
    strain: float = 0.0
    net: str | None = None
    outdir: str | None = None
    force: bool = False
    report_format: str = "text"
    contact_ohm: float = 0.04
    pour_mode: str = "reject"
    pour_width_um: int = 250
    strain_refdes: list[str] | None = None
    margin_um: int = 1000
    co2: LaserSettings = field(default_factory=lambda: LaserSettings(100, 20, 2))
    uv: LaserSettings | None = None
    tack: float | None = None
    profiles: str | None = None
    extra: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")

    def exit(self, status=0, message=None):
        if status:
            raise UsageError(message or "usage error")
        if message:
            sys.stdout.write(message)
        raise SystemExit(0)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stretchcircuit", description="Stretchable circuit translation toolchain.")
    p.add_argument("--version", action="version", version=f"stretchcircuit {__version__}")
    p.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add_format(sp):
        sp.add_argument("--format", choices=("text", "structured"), dest="report_format")

    def add_rules(sp):
        sp.add_argument("--rule", action="append", default=[], metavar="NAME=VALUE",
                        help="override a design rule; lengths in mm (e.g. min_trace_width=0.2)")

    sp = sub.add_parser("check", help="run design-rule checks")
    sp.add_argument("board")
    add_rules(sp)
    add_format(sp)

    sp = sub.add_parser("transform", help="apply rigid-to-stretchable transformations")
    sp.add_argument("board")
    sp.add_argument("--out", required=True, help="output native board file")
    sp.add_argument("--report", help="write the transform report (JSON) here")
    sp.add_argument("--pour-mode", choices=[m.value for m in PourMode])
    sp.add_argument("--pour-width", type=float, help="outline trace width in mm")
    sp.add_argument("--strain-limit", nargs="*", metavar="REFDES",
                    help="components to surround with strain-limiting regions (default: strain-sensitive ones)")
    sp.add_argument("--margin", type=float, help="strain-limiting margin in mm (default 1.0)")
    add_rules(sp)
    add_format(sp)

    sp = sub.add_parser("predict", help="predict net resistance under strain")
    sp.add_argument("board")
    sp.add_argument("--net")
    sp.add_argument("--strain", type=float)
    sp.add_argument("--conductor", choices=sorted(MATERIALS))
    sp.add_argument("--contact-ohm", type=float)
    add_format(sp)

    sp = sub.add_parser("export", help="generate laser masks and the traveler")
    sp.add_argument("board")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--material")
    sp.add_argument("--force", action="store_true", default=None, help="export despite DRC errors")
    sp.add_argument("--uv-power", type=float)
    sp.add_argument("--uv-speed", type=float)
    sp.add_argument("--uv-passes", type=int)
    add_rules(sp)
    add_format(sp)

    sp = sub.add_parser("materials", help="substrate compatibility table")
    sp.add_argument("--profiles", help="profile file (default: built-in set)")
    sp.add_argument("--tack", type=float, help="classify a single tack value in N")
    add_format(sp)

    sp = sub.add_parser("fit", help="fit contact resistance or strain model from a CSV")
    sp.add_argument("csv")
    add_format(sp)

    sp = sub.add_parser("ingest", help="assemble Gerber/Excellon layers into a native board")
    sp.add_argument("--top")
    sp.add_argument("--bottom")
    sp.add_argument("--drill")
    sp.add_argument("--outline", required=True,
                    help="outline: Gerber profile file, or W,H in mm for a rectangle at the origin")
    sp.add_argument("--annotations", help="footprint annotation sidecar (JSON)")
    sp.add_argument("--name", default="board")
    sp.add_argument("--out", required=True)
    return p


def _um(value_mm: float | str) -> int:
    return mm_to_um(Decimal(str(value_mm)))


def _rule_overrides(items: Sequence[str] | dict) -> dict:
    pairs = items.items() if isinstance(items, dict) else (i.split("=", 1) if "=" in i else (i, None) for i in items)
    out = {}
    for k, v in pairs:
        if v is None:
            raise UsageError(f"rule override {k!r} must be NAME=VALUE")
        if k == "warn_on_leaded":
            out[k] = v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on")
        else:
            try:
                out[k] = _um(v)
            except (NativeFormatError, ValueError, ArithmeticError):
                raise UsageError(f"rule {k}: invalid length {v!r}") from None
    return out


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"config {path}: not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise DataError(f"config {path}: top level must be an object")
    return data


def _laser(d: dict | None) -> LaserSettings | None:
    if not d:
        return None
    return LaserSettings(float(d["power_pct"]), float(d["speed_pct"]), int(d.get("repetitions", 1)))


def parse_command(argv: Sequence[str]) -> RunConfig:
    """Resolve argv (plus config file) into a run plan; raises UsageError."""
    args = _build_parser().parse_args(list(argv))
    if not args.command:
        raise UsageError("a command is required: " + ", ".join(COMMANDS))
    conf = _load_config(args.config)
    cfg = RunConfig(command=args.command)
    if args.verbose:
        cfg.extra["verbose"] = True

    # defaults < config file < flags
    try:
        overrides = _rule_overrides(conf.get("rules", {}))
        overrides.update(_rule_overrides(getattr(args, "rule", []) or []))
        cfg.rules = DesignRuleSet().with_overrides(**overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg.material = conf.get("material", cfg.material)
    cfg.conductor = conf.get("conductor", cfg.conductor)
    cfg.report_format = conf.get("report_format", cfg.report_format)
    cfg.contact_ohm = conf.get("contact_ohm", cfg.contact_ohm)
    try:
        cfg.co2 = _laser(conf.get("co2_laser")) or cfg.co2
        cfg.uv = _laser(conf.get("uv_laser"))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"config laser settings invalid: {exc}") from None

    if getattr(args, "report_format", None):
        cfg.report_format = args.report_format
    if cfg.report_format not in ("text", "structured"):
        raise UsageError(f"unknown report format {cfg.report_format!r}")

    c = args.command
    if c in ("check", "transform", "predict", "export"):
        cfg.inputs = [args.board]
    if c in ("transform", "export", "ingest"):
        cfg.outdir = args.out
    if c == "transform":
        cfg.pour_mode = args.pour_mode or conf.get("pour_mode", cfg.pour_mode)
        if args.pour_width is not None:
            cfg.pour_width_um = _um(args.pour_width)
        cfg.strain_refdes = args.strain_limit
        if args.margin is not None:
            cfg.margin_um = _um(args.margin)
        cfg.extra["report"] = args.report
    elif c == "predict":
        cfg.net = args.net
        cfg.strain = args.strain if args.strain is not None else float(conf.get("strain", 0.0))
        if cfg.strain < 0:
            raise UsageError("--strain must be >= 0")
        cfg.conductor = args.conductor or cfg.conductor
        if args.contact_ohm is not None:
            cfg.contact_ohm = args.contact_ohm
    elif c == "export":
        cfg.material = args.material or cfg.material
        cfg.force = bool(args.force) or bool(conf.get("force", False))
        if args.uv_power is not None or args.uv_speed is not None:
            if args.uv_power is None or args.uv_speed is None:
                raise UsageError("--uv-power and --uv-speed must be given together")
            cfg.uv = LaserSettings(args.uv_power, args.uv_speed, args.uv_passes or 1)
    elif c == "materials":
        cfg.profiles = args.profiles
        cfg.tack = args.tack
    elif c == "fit":
        cfg.inputs = [args.csv]
    elif c == "ingest":
        cfg.extra.update(top=args.top, bottom=args.bottom, drill=args.drill, outline=args.outline,
                         annotations=args.annotations, name=args.name)
    return cfg


# --- command implementations ------------------------------------------------------


def _read(path: str) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def _write(path: str | Path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


def _load_board(path: str) -> Board:
    board = load_native(_read(path))
    if any(f.net is None for f in board.features()):
        board = infer_nets(board)
    return board


def _rules_text(rules: DesignRuleSet) -> list[str]:
    out = ["rule set:"]
    for k, v in rules.to_dict().items():
        out.append(f"  {k} = {v}" if isinstance(v, bool) else f"  {k} = {v / 1000:.3f} mm")
    return out


def _rules_structured(rules: DesignRuleSet) -> dict:
    return {k: v if isinstance(v, bool) else round(v / 1000, 3) for k, v in rules.to_dict().items()}


def _emit(cfg: RunConfig, text_lines: list[str], structured: dict) -> None:
    if cfg.report_format == "structured":
        sys.stdout.write(json.dumps(structured, indent=2) + "\n")
    else:
        sys.stdout.write("\n".join(text_lines) + "\n")


def _cmd_check(cfg: RunConfig) -> int:
    board = _load_board(cfg.inputs[0])
    violations = check_board(board, cfg.rules) + check_packages(board, cfg.rules)
    errors = [v for v in violations if v.severity is Severity.ERROR]
    lines = [f"board: {board.name}", *_rules_text(cfg.rules), ""]
    if not violations:
        lines.append("no violations")
    for v in violations:
        lines.append(f"{v.severity.value.upper():7s} {v.rule}: {v.message} at ({v.location.x / 1000:.3f}, {v.location.y / 1000:.3f}) mm")
    lines.append("")
    lines.append(f"{len(errors)} error(s), {len(violations) - len(errors)} warning(s)")
    _emit(cfg, lines, {
        "board": board.name,
        "rule_set_mm": _rules_structured(cfg.rules),
        "violations": [violation_to_dict(v) for v in violations],
        "errors": len(errors),
        "warnings": len(violations) - len(errors),
    })
    return EXIT_VIOLATIONS if errors else EXIT_OK


def _cmd_transform(cfg: RunConfig) -> int:
    board = _load_board(cfg.inputs[0])
    out, report = transform_board(board, cfg.rules, cfg.pour_mode, cfg.pour_width_um, cfg.strain_refdes, cfg.margin_um)
    _write(cfg.outdir, serialize_native(out))
    rep = report.to_dict()
    if cfg.extra.get("report"):
        _write(cfg.extra["report"], json.dumps(rep, indent=2) + "\n")
    lines = [
        f"board: {board.name} -> {cfg.outdir}",
        f"vias resized: {report.vias_resized} (target {cfg.rules.target_via_diameter / 1000:.3f} mm)",
        f"pours handled: {report.pours_handled}",
        f"strain-limiting regions: {len(report.strain_limit_regions)}",
    ]
    _emit(cfg, lines, {"board": board.name, "output": cfg.outdir, "report": rep})
    return EXIT_OK


def _cmd_predict(cfg: RunConfig) -> int:
    board = _load_board(cfg.inputs[0])
    material = MATERIALS[cfg.conductor]
    contact = ContactModel(cfg.contact_ohm)
    nets = [cfg.net] if cfg.net else list(board.nets)
    rows = []
    for net in nets:
        if net not in board.nets:
            raise DataError(f"unknown net {net!r}")
        r = net_resistance(board, net, material, contact, cfg.strain)
        if not cfg.net and r.trace_ohm == 0:
            continue
        rows.append((net, r))
    margin = failure_margin(cfg.strain)
    lines = [
        f"board: {board.name}  conductor: {material.name}  strain: {cfg.strain:g}  margin: {margin.value}",
        f"{'net':24s} {'R(0) ohm':>10s} {'R(e) ohm':>10s} {'ratio':>7s}  flags",
    ]
    for net, r in rows:
        lines.append(f"{net:24s} {r.unstrained:10.4f} {r.strained:10.4f} {r.ratio:7.2f}  {'; '.join(r.flags)}")
    _emit(cfg, lines, {
        "board": board.name,
        "conductor": material.name,
        "strain": cfg.strain,
        "failure_margin": margin.value,
        "nets": [
            {"net": n, "r0_ohm": r.unstrained, "r_strained_ohm": r.strained, "ratio": r.ratio,
             "interfaces": r.interfaces, "flags": r.flags}
            for n, r in rows
        ],
    })
    return EXIT_OK


def _cmd_export(cfg: RunConfig) -> int:
    board = _load_board(cfg.inputs[0])
    try:
        pkg = generate_masks(board, cfg.rules, cfg.material, cfg.co2, cfg.uv, cfg.force)
    except DrcRefusal as exc:
        sys.stderr.write(f"export refused: {exc}\n")
        return EXIT_VIOLATIONS
    if cfg.uv is None:
        log.warning("UV laser settings not configured; masks are marked UNSET")
    paths = write_package(pkg, cfg.outdir)
    lines = [f"board: {board.name}", *_rules_text(cfg.rules), "", "wrote:"] + [f"  {p}" for p in paths]
    _emit(cfg, lines, {"board": board.name, "rule_set_mm": _rules_structured(cfg.rules),
                       "files": [str(p) for p in paths]})
    return EXIT_OK


def _cmd_materials(cfg: RunConfig) -> int:
    if cfg.tack is not None:
        cls = compatibility(cfg.tack)
        _emit(cfg, [f"tack {cfg.tack:g} N: {cls.label}"], {"tack_n": cfg.tack, "compatibility": cls.label})
        return EXIT_OK
    profiles = load_profiles(_read(cfg.profiles)) if cfg.profiles else builtin_profiles()
    lines = [f"{'substrate':14s} {'tack N':>7s} {'E100 kPa':>9s} {'fail rate':>9s}  class"]
    rows = []
    for p in profiles:
        cls = p.compatibility
        est = "*" if p.estimated else ""
        tack = "-" if p.tack is None else f"{p.tack:.2f}"
        mod = "-" if p.modulus_100pct is None else f"{p.modulus_100pct:.1f}"
        fr = "-" if p.trace_failure_rate is None else f"{p.trace_failure_rate:.2f}"
        lines.append(f"{p.name:14s} {tack:>7s} {mod:>9s} {fr:>9s}  {cls.label if cls else '-'}{est}")
        rows.append({"name": p.name, "tack_n": p.tack, "modulus_100pct_kpa": p.modulus_100pct,
                     "trace_failure_rate": p.trace_failure_rate,
                     "compatibility": cls.label if cls else None, "estimated": list(p.estimated)})
    lines.append("* tack/modulus values are estimates; compatible needs tack >= 0.18 N")
    _emit(cfg, lines, {"profiles": rows})
    return EXIT_OK


def _cmd_fit(cfg: RunConfig) -> int:
    kind, rows = read_measurements(_read(cfg.inputs[0]))
    if kind == "contact":
        fit = fit_contact_resistance(rows)
        lines = [f"slope: {fit.slope:.6g} ohm/m", f"contact resistance (intercept): {fit.intercept:.6g} ohm",
                 f"R^2: {fit.r_squared:.4f}"]
        data = {"kind": kind, "slope_ohm_per_m": fit.slope, "intercept_ohm": fit.intercept, "r_squared": fit.r_squared}
    else:
        fit = fit_strain_model(rows)
        lines = [f"power-law exponent k: {fit.model.exponent:.6g}", f"R^2: {fit.r_squared:.4f}"]
        data = {"kind": kind, "exponent": fit.model.exponent, "r_squared": fit.r_squared}
    _emit(cfg, lines, data)
    return EXIT_OK


def _outline_from(arg: str) -> list[tuple[int, int]]:
    if not os.path.exists(arg) and "," in arg:
        try:
            w, h = (_um(v) for v in arg.split(","))
        except (NativeFormatError, ValueError, ArithmeticError):
            raise UsageError(f"--outline: expected W,H in mm, got {arg!r}") from None
        return [(0, 0), (w, 0), (w, h), (0, h)]
    feats = parse_gerber(_read(arg), "top", prefix="outline")
    closed = [t for t in feats.traces if t.centerline[0] == t.centerline[-1] and len(t.centerline) >= 4]
    if not closed:
        raise DataError(f"{arg}: no closed outline path found")
    best = max(closed, key=lambda t: len(t.centerline))
    return list(best.centerline[:-1])


def _annotations_from(path: str | None) -> list[FootprintAnnotation]:
    if not path:
        return []
    data = parse_json(_read(path))
    out = []
    try:
        for i, fp in enumerate(data["footprints"]):
            region = tuple((mm_to_um(x), mm_to_um(y)) for x, y in fp["region_mm"])
            out.append(FootprintAnnotation(fp["refdes"], fp["package_class"], region, bool(fp.get("strain_sensitive", False))))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: invalid footprint annotation ({exc})") from None
    return out


def _cmd_ingest(cfg: RunConfig) -> int:
    e = cfg.extra
    top = parse_gerber(_read(e["top"]), "top") if e["top"] else None
    bottom = parse_gerber(_read(e["bottom"]), "bottom") if e["bottom"] else None
    drills = parse_excellon(_read(e["drill"])) if e["drill"] else []
    board = assemble_board(top, bottom, drills, _outline_from(e["outline"]), _annotations_from(e["annotations"]), e["name"])
    _write(cfg.outdir, serialize_native(board))
    lines = [f"board: {board.name} -> {cfg.outdir}",
             f"traces: {len(board.traces)}  vias: {len(board.vias)}  pads: {len(board.pads)}  "
             f"pours: {len(board.pours)}  nets: {len(board.nets)}"]
    _emit(cfg, lines, {"board": board.name, "output": cfg.outdir, "traces": len(board.traces),
                       "vias": len(board.vias), "pads": len(board.pads), "nets": len(board.nets)})
    return EXIT_OK


_HANDLERS = {
    "check": _cmd_check,
    "transform": _cmd_transform,
    "predict": _cmd_predict,
    "export": _cmd_export,
    "materials": _cmd_materials,
    "fit": _cmd_fit,
    "ingest": _cmd_ingest,
}

_DATA_ERRORS = (
    DataError,
    NativeFormatError,
    GerberError,
    ExcellonError,
    AssemblyError,
    TransformError,
    FitError,
    ModelError,
    SubstrateError,
    FabError,
    KeyError,
)


def run(cfg: RunConfig) -> int:
    try:
        return _HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATAERR
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IOERR


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = parse_command(argv)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except DataError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATAERR
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IOERR
    except SystemExit as exc:
        return int(exc.code or 0)
    if cfg.extra.get("verbose"):
        logging.getLogger().setLevel(logging.INFO)
    return run(cfg)
