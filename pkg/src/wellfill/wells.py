"""Domain types shared by every other module: properties, headers, wells, gaps."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

FEET_TO_METERS = 0.3048


class PropertyKind(str, Enum):
    NPHI = "NPHI"
    GR = "GR"
    RHOB = "RHOB"
    VP = "VP"


PROPERTIES: tuple[PropertyKind, ...] = tuple(PropertyKind)


class DepthUnit(str, Enum):
    METERS = "m"
    FEET = "ft"


class CoordSystem(str, Enum):
    PROJECTED = "projected_meters"
    GEOGRAPHIC = "geographic_degrees"


class WellError(ValueError):
    """A well violates a structural invariant."""


class UnitError(ValueError):
    pass


class DepthOutOfRange(ValueError):
    pass


_UNIT_ALIASES = {
    "m": DepthUnit.METERS,
    "meter": DepthUnit.METERS,
    "meters": DepthUnit.METERS,
    "metre": DepthUnit.METERS,
    "metres": DepthUnit.METERS,
    "f": DepthUnit.FEET,
    "ft": DepthUnit.FEET,
    "feet": DepthUnit.FEET,
    "foot": DepthUnit.FEET,
}


def parse_depth_unit(text: str) -> DepthUnit:
    """Map a unit string as found in LAS headers ("M", "F", "FT", ...) to a DepthUnit."""
    if isinstance(text, DepthUnit):
        return text
    key = str(text).strip().lower().rstrip(".")
    try:
        return _UNIT_ALIASES[key]
    except KeyError:
        raise UnitError(f"unrecognized depth unit {text!r}") from None


def parse_property(text: str) -> PropertyKind:
    if isinstance(text, PropertyKind):
        return text
    try:
        return PropertyKind(str(text).strip().upper())
    except ValueError:
        raise ValueError(f"unknown property {text!r}; expected one of "
                         f"{', '.join(p.value for p in PROPERTIES)}") from None


@dataclass(frozen=True)
class WellHeader:
    well_name: str
    start_depth: float
    stop_depth: float
    step: float
    null_value: float = -999.25
    depth_unit: DepthUnit = DepthUnit.METERS
    x: float | None = None
    y: float | None = None
    coord_system: CoordSystem | None = None

    def __post_init__(self):
        if not (self.step > 0):
            raise WellError(f"{self.well_name}: step must be positive, got {self.step}")
        if not (self.stop_depth > self.start_depth):
            raise WellError(f"{self.well_name}: stop depth {self.stop_depth} "
                            f"not below start depth {self.start_depth}")
        intervals = (self.stop_depth - self.start_depth) / self.step
        if abs(intervals - round(intervals)) * self.step > 1e-6 * self.step:
            raise WellError(f"{self.well_name}: extent {self.stop_depth - self.start_depth} "
                            f"is not a multiple of step {self.step}")

    @property
    def n_rows(self) -> int:
        return int(round((self.stop_depth - self.start_depth) / self.step)) + 1

    @property
    def extent(self) -> float:
        return self.stop_depth - self.start_depth

    @property
    def has_coordinates(self) -> bool:
        return self.x is not None and self.y is not None


@dataclass(frozen=True)
class Curve:
    kind: PropertyKind
    values: np.ndarray  # float64, NaN marks an absent measurement

    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)


def _frozen(values, n: int, label: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise WellError(f"curve {label} has shape {arr.shape}, expected ({n},)")
    if np.isinf(arr).any():
        raise WellError(f"curve {label} contains infinite values")
    arr.setflags(write=False)
    return arr


class WellLog:
    """A regular depth grid with the four analysis curves plus opaque extras.

    Absent measurements are NaN.  Curves not supplied are entirely absent.
    Instances are treated as immutable; all arrays are read-only.
    """

    def __init__(self, header: WellHeader, curves: Mapping[PropertyKind, Iterable[float]],
                 extra: Mapping[str, Iterable[float]] | None = None):
        self.header = header
        n = header.n_rows
        self.curves: dict[PropertyKind, Curve] = {}
        for kind in PROPERTIES:
            raw = curves.get(kind)
            values = np.full(n, np.nan) if raw is None else raw
            arr = _frozen(values, n, kind.value)
            if np.any(arr == header.null_value):
                raise WellError(f"{header.well_name}: curve {kind.value} stores the null sentinel")
            self.curves[kind] = Curve(kind, arr)
        unknown = set(curves) - set(PROPERTIES)
        if unknown:
            raise WellError(f"not analysis properties: {sorted(map(str, unknown))}")
        self.extra: dict[str, np.ndarray] = {
            name: _frozen(vals, n, name) for name, vals in (extra or {}).items()
        }

    @classmethod
    def from_grid(cls, name: str, start: float, step: float,
                  curves: Mapping[PropertyKind, Iterable[float]], **header_fields) -> "WellLog":
        n = len(next(iter(curves.values())))
        header = WellHeader(well_name=name, start_depth=start,
                            stop_depth=start + (n - 1) * step, step=step, **header_fields)
        return cls(header, curves)

    @property
    def name(self) -> str:
        return self.header.well_name

    @property
    def n_rows(self) -> int:
        return self.header.n_rows

    @property
    def depths(self) -> np.ndarray:
        h = self.header
        return h.start_depth + h.step * np.arange(h.n_rows, dtype=np.float64)

    def __getitem__(self, kind: PropertyKind) -> np.ndarray:
        return self.curves[kind].values

    def matrix(self) -> np.ndarray:
        """(n_rows, 4) array of the analysis curves in PROPERTIES order."""
        return np.column_stack([self.curves[k].values for k in PROPERTIES])

    def with_curves(self, curves: Mapping[PropertyKind, Iterable[float]], **header_changes) -> "WellLog":
        merged = {k: self.curves[k].values for k in PROPERTIES}
        merged.update(curves)
        header = replace(self.header, **header_changes) if header_changes else self.header
        return WellLog(header, merged, self.extra)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WellLog):
            return NotImplemented
        if self.header != other.header:
            return False
        for kind in PROPERTIES:
            if not np.array_equal(self[kind], other[kind], equal_nan=True):
                return False
        if self.extra.keys() != other.extra.keys():
            return False
        return all(np.array_equal(v, other.extra[k], equal_nan=True) for k, v in self.extra.items())

    __hash__ = None

    def __repr__(self) -> str:
        h = self.header
        return (f"WellLog({h.well_name!r}, {h.start_depth}-{h.stop_depth} {h.depth_unit.value}, "
                f"step={h.step}, rows={h.n_rows})")


@dataclass(frozen=True)
class Gap:
    """Maximal run of missing rows in one property curve."""

    property: PropertyKind
    start_row: int
    row_count: int
    start_depth: float
    span: float

    def __post_init__(self):
        if self.row_count <= 0 or self.span <= 0:
            raise WellError(f"gap must have positive size, got rows={self.row_count} span={self.span}")

    @property
    def stop_row(self) -> int:
        """Exclusive end row."""
        return self.start_row + self.row_count

    @property
    def rows(self) -> range:
        return range(self.start_row, self.stop_row)


def row_at_depth(well: WellLog, depth: float) -> int:
    """Nearest grid row for a depth within the logged range."""
    h = well.header
    slack = 1e-9 * max(abs(h.start_depth), abs(h.stop_depth), h.step)
    if depth < h.start_depth - slack or depth > h.stop_depth + slack:
        raise DepthOutOfRange(f"depth {depth} outside [{h.start_depth}, {h.stop_depth}] "
                              f"of well {h.well_name}")
    row = int(math.floor((depth - h.start_depth) / h.step + 0.5))
    return min(max(row, 0), h.n_rows - 1)


def complete_rows(well: WellLog) -> set[int]:
    mask = ~np.isnan(well.matrix()).any(axis=1)
    return set(np.flatnonzero(mask).tolist())


def complete_mask(well: WellLog) -> np.ndarray:
    return ~np.isnan(well.matrix()).any(axis=1)


def convert_units(well: WellLog) -> WellLog:
    """Return the well with its depth grid in meters (1 ft = 0.3048 m exactly)."""
    h = well.header
    unit = parse_depth_unit(h.depth_unit)
    if unit is DepthUnit.METERS:
        if h.depth_unit is DepthUnit.METERS:
            return well
        return WellLog(replace(h, depth_unit=DepthUnit.METERS),
                       {k: well[k] for k in PROPERTIES}, well.extra)
    header = replace(h, start_depth=h.start_depth * FEET_TO_METERS,
                     stop_depth=h.stop_depth * FEET_TO_METERS,
                     step=h.step * FEET_TO_METERS, depth_unit=DepthUnit.METERS)
    return WellLog(header, {k: well[k] for k in PROPERTIES}, well.extra)
