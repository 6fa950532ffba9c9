"""LAS 2.0 reading and writing.

Only unwrapped files are supported.  Curves are matched to the four analysis
properties through a mnemonic alias table; everything else is kept as an
opaque extra curve.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .wells import (
    PROPERTIES,
    CoordSystem,
    DepthUnit,
    PropertyKind,
    WellError,
    WellHeader,
    WellLog,
    convert_units,
    parse_depth_unit,
    UnitError,
)

log = logging.getLogger(__name__)

DEFAULT_ALIASES: dict[str, PropertyKind] = {
    "NPHI": PropertyKind.NPHI,
    "NEU": PropertyKind.NPHI,
    "NPOR": PropertyKind.NPHI,
    "TNPH": PropertyKind.NPHI,
    "GR": PropertyKind.GR,
    "GRC": PropertyKind.GR,
    "SGR": PropertyKind.GR,
    "RHOB": PropertyKind.RHOB,
    "DEN": PropertyKind.RHOB,
    "RHOZ": PropertyKind.RHOB,
    "ZDEN": PropertyKind.RHOB,
    "DT": PropertyKind.VP,
    "AC": PropertyKind.VP,
    "DTC": PropertyKind.VP,
    "DTCO": PropertyKind.VP,
    "VP": PropertyKind.VP,
}

# Units emitted for the four properties on write.
_WRITE_UNITS = {
    PropertyKind.NPHI: "V/V",
    PropertyKind.GR: "GAPI",
    PropertyKind.RHOB: "G/C3",
    PropertyKind.VP: "US/F",
}

_X_KEYS = ("X", "XCOORD", "XWELL", "EAST", "EASTING", "X_LOC")
_Y_KEYS = ("Y", "YCOORD", "YWELL", "NORTH", "NORTHING", "Y_LOC")
_LAT_KEYS = ("LAT", "LATI", "LATITUDE")
_LON_KEYS = ("LON", "LONG", "LONGITUDE")


class LasParseError(ValueError):
    """Structured parse failure; ``line`` is 1-based or None when not line-specific."""

    def __init__(self, message: str, line: int | None = None):
        self.message = message
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class MnemonicLine:
    mnemonic: str
    unit: str
    value: str
    description: str
    line: int = 0


@dataclass
class LasDocument:
    sections: list[tuple[str, list[MnemonicLine]]] = field(default_factory=list)
    data_block: list[tuple[int, list[str]]] = field(default_factory=list)
    data_line: int | None = None

    def section(self, tag: str) -> list[MnemonicLine] | None:
        for name, lines in self.sections:
            if name == tag:
                return lines
        return None

    def section_line(self, tag: str) -> int | None:
        for name, lines in self.sections:
            if name == tag:
                return lines[0].line - 1 if lines else None
        return None


def load_aliases(path: str | os.PathLike | None) -> dict[str, PropertyKind]:
    """Built-in aliases overlaid with a JSON mapping ``{"MNEMONIC": "NPHI", ...}``."""
    table = dict(DEFAULT_ALIASES)
    if path is None:
        return table
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: alias file must contain a JSON object")
    for mnem, kind in raw.items():
        table[str(mnem).strip().upper()] = PropertyKind(str(kind).strip().upper())
    return table


def parse_mnemonic_line(text: str, lineno: int = 0) -> MnemonicLine:
    """Split ``MNEM.UNIT  VALUE : DESCRIPTION``."""
    dot = text.find(".")
    if dot < 0:
        raise LasParseError(f"header line without '.' delimiter: {text.strip()!r}", lineno)
    mnemonic = text[:dot].strip()
    if not mnemonic:
        raise LasParseError("empty mnemonic", lineno)
    rest = text[dot + 1:]
    space = len(rest)
    for i, ch in enumerate(rest):
        if ch.isspace():
            space = i
            break
    unit = rest[:space]
    rest = rest[space:]
    colon = rest.rfind(":")
    if colon >= 0:
        value, description = rest[:colon], rest[colon + 1:]
    else:
        value, description = rest, ""
    if ":" in unit:
        # "MNEM.:desc" with no unit and no value
        unit, _, tail = unit.partition(":")
        description = tail + description
    return MnemonicLine(mnemonic.upper(), unit.strip(), value.strip(), description.strip(), lineno)


def read_document(text: str) -> LasDocument:
    doc = LasDocument()
    current: list[MnemonicLine] | None = None
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("~"):
            tag = line[1:2].upper()
            if not tag:
                raise LasParseError("empty section tag", lineno)
            if tag == "A":
                if doc.data_line is not None:
                    raise LasParseError("second ~A section", lineno)
                in_data = True
                doc.data_line = lineno
                current = None
                continue
            if in_data:
                raise LasParseError(f"section ~{tag} after the data section", lineno)
            current = []
            doc.sections.append((tag, current))
            continue
        if in_data:
            doc.data_block.append((lineno, line.split()))
        elif current is None:
            raise LasParseError("content before the first section", lineno)
        elif doc.sections[-1][0] == "O":
            continue  # free text
        else:
            current.append(parse_mnemonic_line(raw, lineno))
    return doc


def _lookup(lines: list[MnemonicLine], *keys: str) -> MnemonicLine | None:
    for ml in lines:
        if ml.mnemonic in keys:
            return ml
    return None


def _float(ml: MnemonicLine, what: str) -> float:
    text = ml.value or ""
    try:
        value = float(text.split()[0]) if text else float("nan")
    except (ValueError, IndexError):
        raise LasParseError(f"{what} value {text!r} is not numeric", ml.line) from None
    if math.isnan(value):
        raise LasParseError(f"{what} has no value", ml.line)
    return value


def _optional_float(ml: MnemonicLine | None) -> float | None:
    if ml is None or not ml.value:
        return None
    try:
        v = float(ml.value.split()[0])
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _null_forms(ml: MnemonicLine) -> tuple[set[str], float]:
    value = _float(ml, "NULL")
    forms = {ml.value.split()[0], repr(value), f"{value:g}", f"{value:.4f}", f"{value:.6f}"}
    return forms, value


def _is_null(token: str, value: float, forms: set[str], null: float) -> bool:
    if token in forms:
        return True
    return abs(value - null) <= 1e-9 * max(abs(null), 1e-300)


def _coordinates(lines, override: CoordSystem | None):
    lat = _optional_float(_lookup(lines, *_LAT_KEYS))
    lon = _optional_float(_lookup(lines, *_LON_KEYS))
    x_ml = _lookup(lines, *_X_KEYS)
    x = _optional_float(x_ml)
    y = _optional_float(_lookup(lines, *_Y_KEYS))
    if x is not None and y is not None:
        if override is not None:
            return x, y, override
        unit = x_ml.unit.upper()
        if unit in ("M", "METERS", "METRES", "FT", "F"):
            return x, y, CoordSystem.PROJECTED
        if unit.startswith("DEG"):
            return x, y, CoordSystem.GEOGRAPHIC
        # unitless: decide by value range
        geographic = abs(x) <= 180.0 and abs(y) <= 90.0
        return x, y, CoordSystem.GEOGRAPHIC if geographic else CoordSystem.PROJECTED
    if lat is not None and lon is not None:
        return lon, lat, override or CoordSystem.GEOGRAPHIC
    return None, None, None


def parse_las(text: str | bytes, aliases: dict[str, PropertyKind] | None = None,
              coord_system: CoordSystem | None = None, name: str | None = None) -> WellLog:
    """Parse a LAS 2.0 document into a metric :class:`WellLog`.

    Raises :class:`LasParseError` for anything malformed.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    aliases = DEFAULT_ALIASES if aliases is None else aliases
    doc = read_document(text)

    version = doc.section("V")
    if version is not None:
        vers = _lookup(version, "VERS")
        if vers is not None and vers.value and vers.value.split()[0] not in ("1.2", "2.0", "2", "1.20", "2.00"):
            raise LasParseError(f"unsupported LAS version {vers.value!r}", vers.line)
        wrap = _lookup(version, "WRAP")
        if wrap is not None and wrap.value.upper().startswith("Y"):
            raise LasParseError("wrapped data (WRAP YES) is not supported", wrap.line)

    well_sec = doc.section("W")
    if well_sec is None:
        raise LasParseError("missing ~W (well information) section")
    w_line = doc.section_line("W")
    entries = {}
    for key in ("STRT", "STOP", "STEP", "NULL"):
        ml = _lookup(well_sec, key)
        if ml is None:
            raise LasParseError(f"missing mandatory well entry {key}", w_line)
        entries[key] = ml

    curve_sec = doc.section("C")
    if not curve_sec:
        raise LasParseError("missing or empty ~C (curve information) section")
    if doc.data_line is None:
        raise LasParseError("missing ~A (data) section")

    start = _float(entries["STRT"], "STRT")
    stop = _float(entries["STOP"], "STOP")
    step = _float(entries["STEP"], "STEP")
    if not step > 0:
        raise LasParseError(f"STEP must be positive, got {step}", entries["STEP"].line)
    null_forms, null = _null_forms(entries["NULL"])

    unit_text = entries["STRT"].unit or curve_sec[0].unit or "M"
    try:
        unit = parse_depth_unit(unit_text)
    except UnitError as exc:
        raise LasParseError(str(exc), entries["STRT"].line) from None

    mnemonics = [ml.mnemonic for ml in curve_sec]
    n_curves = len(mnemonics)
    if n_curves < 2:
        raise LasParseError("curve section must declare depth and at least one curve", curve_sec[0].line)

    rows = []
    for lineno, tokens in doc.data_block:
        if len(tokens) != n_curves:
            raise LasParseError(f"expected {n_curves} values, found {len(tokens)}", lineno)
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            bad = next(t for t in tokens if not _is_number(t))
            raise LasParseError(f"non-numeric data token {bad!r}", lineno) from None
        for i, (tok, v) in enumerate(zip(tokens, values)):
            if math.isnan(v) or _is_null(tok, v, null_forms, null):
                values[i] = math.nan
            elif math.isinf(v):
                raise LasParseError(f"infinite data token {tok!r}", lineno)
        rows.append(values)
    if len(rows) < 2:
        raise LasParseError("data section needs at least two rows", doc.data_line)
    data = np.array(rows, dtype=np.float64)
    lines = [ln for ln, _ in doc.data_block]

    depth = data[:, 0]
    if np.isnan(depth).any():
        bad = int(np.flatnonzero(np.isnan(depth))[0])
        raise LasParseError("null depth value", lines[bad])
    offsets = (depth - start) / step
    expected = np.arange(len(depth))
    misplaced = np.flatnonzero(np.abs(offsets - expected) >= 0.5)
    if misplaced.size:
        i = int(misplaced[0])
        raise LasParseError(f"depth {depth[i]} off the regular grid (STRT {start}, STEP {step})", lines[i])
    grid_stop = start + (len(depth) - 1) * step
    if abs(grid_stop - stop) > 0.5 * step:
        raise LasParseError(f"STOP {stop} inconsistent with {len(depth)} rows from STRT {start} "
                            f"at STEP {step} (expected {grid_stop})", entries["STOP"].line)

    curves: dict[PropertyKind, np.ndarray] = {}
    sources: dict[PropertyKind, list[str]] = {}
    extra: dict[str, np.ndarray] = {}
    for col, ml in enumerate(curve_sec[1:], start=1):
        base = ml.mnemonic.split(":")[0].strip()
        kind = aliases.get(ml.mnemonic) or aliases.get(base)
        if kind is not None:
            sources.setdefault(kind, []).append(ml.mnemonic)
            curves[kind] = data[:, col]
        else:
            key = ml.mnemonic
            n = 2
            while key in extra:
                key = f"{ml.mnemonic}:{n}"
                n += 1
            extra[key] = data[:, col]
    dupes = {k.value: v for k, v in sources.items() if len(v) > 1}
    if dupes:
        listing = "; ".join(f"{k}: {', '.join(v)}" for k, v in sorted(dupes.items()))
        raise LasParseError(f"duplicate curves for the same property ({listing})", curve_sec[0].line - 1)

    well_ml = _lookup(well_sec, "WELL")
    well_name = name or (well_ml.value or well_ml.description if well_ml else "") or "UNNAMED"
    x, y, cs = _coordinates(well_sec, coord_system)
    try:
        header = WellHeader(well_name=well_name, start_depth=start, stop_depth=grid_stop, step=step,
                            null_value=null, depth_unit=unit, x=x, y=y, coord_system=cs)
        well = WellLog(header, curves, extra)
    except WellError as exc:
        raise LasParseError(str(exc)) from None
    return convert_units(well)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _fmt(value: float) -> str:
    return repr(float(value))


def write_las(well: WellLog) -> bytes:
    """Serialize a well as LAS 2.0 text (values written exactly, absent as NULL)."""
    h = well.header
    unit = "M" if h.depth_unit is DepthUnit.METERS else "F"
    null = _fmt(h.null_value)
    out = [
        "~VERSION INFORMATION",
        " VERS.   2.0 : CWLS LOG ASCII STANDARD - VERSION 2.0",
        " WRAP.   NO  : ONE LINE PER DEPTH STEP",
        "~WELL INFORMATION",
        f" STRT.{unit} {_fmt(h.start_depth)} : START DEPTH",
        f" STOP.{unit} {_fmt(h.stop_depth)} : STOP DEPTH",
        f" STEP.{unit} {_fmt(h.step)} : STEP",
        f" NULL.   {null} : NULL VALUE",
        f" WELL.   {h.well_name} : WELL",
    ]
    if h.has_coordinates:
        if h.coord_system is CoordSystem.GEOGRAPHIC:
            out.append(f" LATI.DEG {_fmt(h.y)} : LATITUDE")
            out.append(f" LONG.DEG {_fmt(h.x)} : LONGITUDE")
        else:
            out.append(f" XCOORD.M {_fmt(h.x)} : X COORDINATE")
            out.append(f" YCOORD.M {_fmt(h.y)} : Y COORDINATE")
    out.append("~CURVE INFORMATION")
    out.append(f" DEPT.{unit} : DEPTH")
    columns = [well.depths]
    for kind in PROPERTIES:
        out.append(f" {kind.value}.{_WRITE_UNITS[kind]} : {kind.value}")
        columns.append(well[kind])
    for mnem, values in well.extra.items():
        out.append(f" {mnem}. : {mnem}")
        columns.append(values)
    out.append("~A")
    table = np.column_stack(columns)
    for row in table:
        out.append(" ".join(null if math.isnan(v) else _fmt(v) for v in row))
    return ("\n".join(out) + "\n").encode("ascii")


def read_las(path: str | os.PathLike, aliases=None, coord_system=None) -> WellLog:
    with open(path, "rb") as fh:
        return parse_las(fh.read(), aliases=aliases, coord_system=coord_system)


@dataclass(frozen=True)
class LoadError:
    path: str
    message: str


def _las_files(directory: Path) -> list[Path]:
    return sorted((p for p in directory.iterdir() if p.is_file() and p.suffix.lower() == ".las"),
                  key=lambda p: p.name)


def load_corpus(directory: str | os.PathLike, aliases=None, coord_system=None,
                jobs: int = 1) -> tuple[list[WellLog], list[LoadError]]:
    """Parse every ``*.las`` file in a directory, ordered by file name.

    Unparseable files end up in the error list; the batch never aborts.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory {directory} does not exist")
    paths = _las_files(directory)

    def one(path: Path):
        try:
            return read_las(path, aliases, coord_system), None
        except (LasParseError, OSError, UnicodeError) as exc:
            return None, LoadError(path.name, str(exc))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, paths))
    else:
        results = [one(p) for p in paths]
    wells = [w for w, _ in results if w is not None]
    errors = [e for _, e in results if e is not None]
    for err in errors:
        log.warning("skipping %s: %s", err.path, err.message)
    return wells, errors
