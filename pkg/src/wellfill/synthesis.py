"""Artificial gap injection with retained ground truth.

Gap centres follow the density p(u) = 2u over relative depth u, so gaps are
more likely towards the bottom of the borehole.  Sizes are drawn from a
normal distribution and scaled by a factor that decreases linearly with
relative depth, so deeper gaps are smaller.  The factor runs from 1.25 to
0.75 and is divided by its mean under p(u) (11/12), which keeps the realised
mean size at the nominal value.

Overlapping artificial gaps are separated by the least-squares displacement
that keeps their order (an isotonic regression on the start rows).  This
keeps count and size distribution intact and barely moves the centres.
Gaps that land on a real gap are re-drawn.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import isotonic_regression

from .gaps import MIN_GAP_SPAN, detect_all_gaps, leading_run
from .rng import StableRng, child_seed
from .wells import PROPERTIES, Gap, PropertyKind, WellLog

log = logging.getLogger(__name__)

FACTOR_TOP = 1.25
FACTOR_BOTTOM = 0.75
# mean of (1.25 - 0.5 u) under p(u) = 2u
_FACTOR_MEAN = FACTOR_TOP - (FACTOR_TOP - FACTOR_BOTTOM) * 2.0 / 3.0
MAX_ATTEMPTS = 100


class InfeasibleInjection(ValueError):
    pass


class IncompleteRestoration(ValueError):
    pass


@dataclass(frozen=True)
class GapSpec:
    mean_size: float = 150.0
    size_stddev: float = 50.0
    gaps_per_km: float = 2.0
    seed: int = 0
    aligned: bool = True

    def __post_init__(self):
        if not self.mean_size > 0:
            raise ValueError("mean_size must be positive")
        if self.size_stddev < 0 or self.gaps_per_km < 0:
            raise ValueError("size_stddev and gaps_per_km must be non-negative")


def depth_factor(u):
    """Size multiplier at relative depth u in [0, 1]; averages 1 under p(u) = 2u."""
    return (FACTOR_TOP - (FACTOR_TOP - FACTOR_BOTTOM) * np.asarray(u)) / _FACTOR_MEAN


@dataclass
class InjectionResult:
    """Modified well plus the blanked cells.

    ``cell_rows``/``cell_kinds``/``cell_values`` list every blanked cell sorted by
    (row, property); ``ground_truth`` is the same information as a mapping
    ``(row, PropertyKind) -> value``.
    """

    modified_well: WellLog
    intervals: list[tuple[int, int]]  # (start_row, row_count), sorted
    injected: list[Gap]
    cell_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    cell_kinds: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    cell_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    requested: int = 0

    @property
    def well_name(self) -> str:
        return self.modified_well.name

    @property
    def blanked(self) -> list[tuple[int, PropertyKind]]:
        return list(zip(self.cell_rows.tolist(), [PROPERTIES[i] for i in self.cell_kinds.tolist()]))

    @cached_property
    def ground_truth(self) -> dict[tuple[int, PropertyKind], float]:
        return dict(zip(self.blanked, self.cell_values.tolist()))

    def blanked_rows(self, kind: PropertyKind) -> np.ndarray:
        return self.cell_rows[self.cell_kinds == PROPERTIES.index(kind)]

    def truth_values(self, kind: PropertyKind) -> np.ndarray:
        return self.cell_values[self.cell_kinds == PROPERTIES.index(kind)]

    def interval_of(self, row: int) -> int:
        for i, (a, n) in enumerate(self.intervals):
            if a <= row < a + n:
                return i
        raise KeyError(row)

    def ground_truth_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["well", "property", "row", "depth", "value"])
        h = self.modified_well.header
        for row, kind, value in zip(self.cell_rows.tolist(), self.cell_kinds.tolist(),
                                    self.cell_values.tolist()):
            w.writerow([h.well_name, PROPERTIES[kind].value, row,
                        repr(h.start_depth + row * h.step), repr(value)])
        return buf.getvalue()


def read_ground_truth_csv(text: str) -> dict[tuple[int, PropertyKind], float]:
    out = {}
    for rec in csv.DictReader(io.StringIO(text)):
        out[(int(rec["row"]), PropertyKind(rec["property"]))] = float(rec["value"])
    return out


def _blocked_rows(well: WellLog) -> np.ndarray:
    """Rows inside real gaps or omitted tops of any property."""
    blocked = np.zeros(well.n_rows, dtype=bool)
    for gap in detect_all_gaps(well):
        blocked[gap.start_row:gap.stop_row] = True
    for kind in PROPERTIES:
        blocked[:leading_run(well, kind)] = True
    return blocked


class _Sampler:
    def __init__(self, well: WellLog, spec: GapSpec, rng: StableRng, min_span: float):
        h = well.header
        self.rng = rng
        self.spec = spec
        self.n_rows = h.n_rows
        self.step = h.step
        self.extent = h.extent
        self.min_rows = int(math.floor(min_span / h.step + 1e-9)) + 1
        self.max_rows = max(self.min_rows, int(math.floor(self.extent / 2 / h.step)))

    def draw(self):
        u = math.sqrt(self.rng.uniform())
        size = self.rng.normal(self.spec.mean_size, self.spec.size_stddev)
        size = min(max(size, self.step), self.extent / 2) * float(depth_factor(u))
        rows = int(math.floor(size / self.step + 0.5))
        rows = min(max(rows, self.min_rows), self.max_rows)
        kind = None if self.spec.aligned else PROPERTIES[self.rng.integers(len(PROPERTIES))]
        return u, rows, kind


def _layout(draws, n_rows: int) -> list[int] | None:
    """Start rows placing every draw without overlap (1-row separation) in [1, n_rows-1)."""
    lo, hi = 1, n_rows - 1
    order = sorted(range(len(draws)), key=lambda i: (draws[i][0], i))
    rows = np.array([draws[i][1] for i in order], dtype=np.float64)
    if rows.sum() + len(rows) - 1 > hi - lo:
        return None
    offsets = np.concatenate([[0.0], np.cumsum(rows + 1.0)[:-1]])
    centres = np.array([draws[i][0] for i in order]) * (n_rows - 1)
    z = centres - rows / 2.0 - offsets
    z = isotonic_regression(z).x
    z = np.clip(z, lo, hi - rows[-1] - offsets[-1])
    starts_sorted = np.floor(z + 0.5) + offsets
    starts = [0] * len(draws)
    for pos, i in enumerate(order):
        starts[i] = int(starts_sorted[pos])
    return starts


def inject_gaps(well: WellLog, spec: GapSpec, min_span: float = MIN_GAP_SPAN) -> InjectionResult:
    """Blank statistically realistic gaps in a well, keeping the removed values.

    The random stream is derived from ``(spec.seed, well name)`` so results do
    not depend on the order wells are processed in.
    """
    h = well.header
    n_gaps = int(math.floor(spec.gaps_per_km * h.extent / 1000.0 + 0.5))
    if n_gaps == 0:
        return InjectionResult(well, [], [])
    rng = StableRng(child_seed(spec.seed, "gaps", h.well_name))
    sampler = _Sampler(well, spec, rng, min_span)
    blocked = _blocked_rows(well)
    draws = [sampler.draw() for _ in range(n_gaps)]

    available = int((~blocked[1:-1]).sum())
    if sum(d[1] for d in draws) > available:
        raise InfeasibleInjection(
            f"{h.well_name}: {sum(d[1] for d in draws)} rows requested, {available} available")

    attempts = [1] * n_gaps
    active = list(range(n_gaps))
    while True:
        starts = _layout([draws[i] for i in active], h.n_rows)
        if starts is None:
            raise InfeasibleInjection(f"{h.well_name}: gaps do not fit in the logged interval")
        bad = []
        for pos, i in enumerate(active):
            a, n = starts[pos], draws[i][1]
            if blocked[max(a - 1, 0):min(a + n + 1, h.n_rows)].any():
                bad.append(i)
        if not bad:
            break
        for i in bad:
            if attempts[i] >= MAX_ATTEMPTS:
                log.warning("%s: dropping artificial gap after %d placements hit real gaps",
                            h.well_name, MAX_ATTEMPTS)
                active.remove(i)
            else:
                attempts[i] += 1
                draws[i] = sampler.draw()
        if not active:
            return InjectionResult(well, [], [], requested=n_gaps)

    placed = sorted((starts[pos], draws[i][1], draws[i][2]) for pos, i in enumerate(active))
    curves = {k: np.array(well[k]) for k in PROPERTIES}
    cell_rows, cell_kinds, cell_values = [], [], []
    injected = []
    for a, n, kind in placed:
        kinds = PROPERTIES if kind is None else (kind,)
        for k in kinds:
            seg = curves[k][a:a + n]
            present = np.flatnonzero(~np.isnan(seg))
            cell_rows.append(a + present)
            cell_kinds.append(np.full(present.size, PROPERTIES.index(k)))
            cell_values.append(seg[present].copy())
            seg[:] = np.nan
            injected.append(Gap(k, a, n, h.start_depth + a * h.step, n * h.step))
    rows_arr = np.concatenate(cell_rows)
    kinds_arr = np.concatenate(cell_kinds)
    values_arr = np.concatenate(cell_values)
    order = np.lexsort((kinds_arr, rows_arr))
    modified = WellLog(h, curves, well.extra)
    return InjectionResult(modified, [(a, n) for a, n, _ in placed], injected,
                           rows_arr[order].astype(np.int64), kinds_arr[order].astype(np.int64),
                           values_arr[order], n_gaps)


def restore(result: InjectionResult) -> WellLog:
    """Put the ground truth back; fails if any blanked cell has no recorded value."""
    well = result.modified_well
    curves = {k: np.array(well[k]) for k in PROPERTIES}
    if "ground_truth" not in result.__dict__:
        for i, kind in enumerate(PROPERTIES):
            sel = result.cell_kinds == i
            curves[kind][result.cell_rows[sel]] = result.cell_values[sel]
        return WellLog(well.header, curves, well.extra)
    truth = result.ground_truth
    missing = [cell for cell in result.blanked if cell not in truth]
    if missing:
        row, kind = missing[0]
        raise IncompleteRestoration(f"{len(missing)} blanked cells lack ground truth "
                                    f"(first: row {row}, {kind.value})")
    for (row, kind), value in truth.items():
        curves[kind][row] = value
    return WellLog(well.header, curves, well.extra)
