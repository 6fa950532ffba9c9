"""Gap detection, missingness statistics, gap coincidence and well filtering."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .wells import PROPERTIES, Gap, PropertyKind, WellLog, complete_mask

MIN_GAP_SPAN = 0.3


def missing_runs(missing: np.ndarray) -> list[tuple[int, int]]:
    """(start, length) of every run of True values, in order."""
    m = np.asarray(missing, dtype=bool)
    if not m.any():
        return []
    padded = np.concatenate([[False], m, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    starts, stops = edges[0::2], edges[1::2]
    return [(int(a), int(b - a)) for a, b in zip(starts, stops)]


def detect_gaps(well: WellLog, prop: PropertyKind, min_span: float = MIN_GAP_SPAN) -> list[Gap]:
    """Maximal missing runs longer than ``min_span`` meters, excluding a run at row 0.

    span = row_count * step; the comparison is strict, so at 0.15 m steps two
    missing rows (0.30 m) are not a gap and three are.
    """
    step = well.header.step
    depths0 = well.header.start_depth
    gaps = []
    for start, length in missing_runs(np.isnan(well[prop])):
        if start == 0:
            continue
        span = length * step
        if span <= min_span + 1e-9 * step:
            continue
        gaps.append(Gap(prop, start, length, depths0 + start * step, span))
    return gaps


def detect_all_gaps(well: WellLog, min_span: float = MIN_GAP_SPAN) -> list[Gap]:
    out = []
    for kind in PROPERTIES:
        out.extend(detect_gaps(well, kind, min_span))
    return out


def leading_run(well: WellLog, prop: PropertyKind) -> int:
    """Number of missing rows at the top of the curve (intentional omission)."""
    present = np.flatnonzero(~np.isnan(well[prop]))
    return int(present[0]) if present.size else well.n_rows


def _quartiles(values: np.ndarray) -> tuple[float, float, float]:
    q1, q2, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    return float(q1), float(q2), float(q3)


@dataclass(frozen=True)
class PropertyGapStats:
    property: PropertyKind
    missing_fraction: float
    gap_count: int
    gaps_per_km: float
    mean_span: float = float("nan")
    std_span: float = float("nan")
    min_span: float = float("nan")
    q1_span: float = float("nan")
    median_span: float = float("nan")
    q3_span: float = float("nan")
    max_span: float = float("nan")


@dataclass(frozen=True)
class GapStats:
    per_property: dict[PropertyKind, PropertyGapStats]
    complete_fraction: float
    gaps_per_km: float
    total_rows: int
    total_km: float
    n_wells: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["property", "missing_fraction", "gap_count", "gaps_per_km", "mean_span_m",
                    "std_span_m", "min_span_m", "q1_span_m", "median_span_m", "q3_span_m",
                    "max_span_m", "complete_fraction", "total_gaps_per_km"])
        for kind in PROPERTIES:
            s = self.per_property[kind]
            w.writerow([kind.value, _num(s.missing_fraction), s.gap_count, _num(s.gaps_per_km),
                        _num(s.mean_span), _num(s.std_span), _num(s.min_span), _num(s.q1_span),
                        _num(s.median_span), _num(s.q3_span), _num(s.max_span),
                        _num(self.complete_fraction), _num(self.gaps_per_km)])
        return buf.getvalue()


def _num(v: float) -> str:
    return "" if v != v else repr(float(v))


def missingness(wells: list[WellLog], min_span: float = MIN_GAP_SPAN) -> GapStats:
    """Corpus-level missing fractions, complete-row fraction and gap span statistics.

    Missing fractions count every absent row, including omitted tops.  Gap
    rates use the summed logged extent (stop - start) as denominator.
    """
    if not wells:
        raise ValueError("missingness needs at least one well")
    total_rows = sum(w.n_rows for w in wells)
    total_km = sum(w.header.extent for w in wells) / 1000.0
    complete = sum(int(complete_mask(w).sum()) for w in wells)
    per = {}
    n_gaps = 0
    for kind in PROPERTIES:
        missing = sum(int(np.isnan(w[kind]).sum()) for w in wells)
        spans = np.array([g.span for w in wells for g in detect_gaps(w, kind, min_span)])
        n_gaps += spans.size
        fields = dict(property=kind, missing_fraction=missing / total_rows, gap_count=int(spans.size),
                      gaps_per_km=spans.size / total_km if total_km > 0 else float("nan"))
        if spans.size:
            q1, q2, q3 = _quartiles(spans)
            fields.update(mean_span=float(spans.mean()), std_span=float(spans.std()),
                          min_span=float(spans.min()), q1_span=q1, median_span=q2, q3_span=q3,
                          max_span=float(spans.max()))
        per[kind] = PropertyGapStats(**fields)
    return GapStats(per, complete / total_rows, n_gaps / total_km if total_km > 0 else float("nan"),
                    total_rows, total_km, len(wells))


# -- coincidence ------------------------------------------------------------

START_TOLERANCE = 10.0
SIZE_TOLERANCE = 0.10


def gaps_coincide(a: Gap, b: Gap, start_tol: float = START_TOLERANCE,
                  size_tol: float = SIZE_TOLERANCE) -> bool:
    if a.property == b.property:
        return False
    if abs(a.start_depth - b.start_depth) > start_tol + 1e-9:
        return False
    return abs(a.span - b.span) / max(a.span, b.span) <= size_tol + 1e-12


@dataclass
class CoincidenceGraph:
    nodes: list[Gap]
    edges: list[tuple[int, int]]
    components: list[list[int]] = field(default_factory=list)

    def component_order(self, component: list[int]) -> int:
        """Number of distinct properties affected by a component."""
        return len({self.nodes[i].property for i in component})

    def order_histogram(self) -> dict[int, int]:
        hist = {k: 0 for k in range(1, len(PROPERTIES) + 1)}
        for comp in self.components:
            hist[self.component_order(comp)] += 1
        return hist


def _components(n: int, edges: list[tuple[int, int]]) -> list[list[int]]:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda c: c[0])


def coincidence_graph(well: WellLog, min_span: float = MIN_GAP_SPAN) -> CoincidenceGraph:
    """Gaps of one well as nodes; edges join gaps of different properties that coincide."""
    nodes = sorted(detect_all_gaps(well, min_span), key=lambda g: (g.start_depth, PROPERTIES.index(g.property)))
    return graph_from_gaps(nodes)


def graph_from_gaps(nodes: list[Gap]) -> CoincidenceGraph:
    edges = []
    order = sorted(range(len(nodes)), key=lambda i: nodes[i].start_depth)
    # sweep by start depth; only pairs within the start tolerance can be linked
    for pos, i in enumerate(order):
        for j in order[pos + 1:]:
            if nodes[j].start_depth - nodes[i].start_depth > START_TOLERANCE + 1e-9:
                break
            if gaps_coincide(nodes[i], nodes[j]):
                edges.append((min(i, j), max(i, j)))
    edges.sort()
    return CoincidenceGraph(nodes, edges, _components(len(nodes), edges))


def corpus_order_histogram(wells: list[WellLog], min_span: float = MIN_GAP_SPAN) -> dict[int, int]:
    total = {k: 0 for k in range(1, len(PROPERTIES) + 1)}
    for well in wells:
        for k, v in coincidence_graph(well, min_span).order_histogram().items():
            total[k] += v
    return total


def histogram_csv(hist: dict[int, int]) -> str:
    total = sum(hist.values())
    lines = ["order,components,fraction"]
    for k in sorted(hist):
        frac = hist[k] / total if total else 0.0
        lines.append(f"{k},{hist[k]},{frac!r}")
    return "\n".join(lines) + "\n"


# -- filtering --------------------------------------------------------------

@dataclass(frozen=True)
class FilterCriteria:
    min_depth: float = 1500.0
    max_gap: float = 50.0
    min_complete_ratio: float = 0.5
    ratio_mode: str = "total"  # complete/total; "incomplete" -> complete/incomplete

    def __post_init__(self):
        if not (self.min_depth > 0 and self.max_gap > 0 and self.min_complete_ratio > 0):
            raise ValueError("filter thresholds must be strictly positive")
        if self.ratio_mode not in ("total", "incomplete"):
            raise ValueError(f"ratio_mode must be 'total' or 'incomplete', got {self.ratio_mode!r}")


@dataclass(frozen=True)
class Rejection:
    well_name: str
    criterion: str
    value: float
    threshold: float

    def __str__(self):
        return f"{self.well_name}: {self.criterion} ({self.value:g} vs {self.threshold:g})"


def complete_ratio(well: WellLog, mode: str = "total") -> float:
    n_complete = int(complete_mask(well).sum())
    if mode == "total":
        return n_complete / well.n_rows
    incomplete = well.n_rows - n_complete
    return float("inf") if incomplete == 0 else n_complete / incomplete


def check_well(well: WellLog, criteria: FilterCriteria) -> Rejection | None:
    """First violated criterion, checked in the order depth, gap size, completeness."""
    extent = well.header.extent
    if extent < criteria.min_depth:
        return Rejection(well.name, "min_depth", extent, criteria.min_depth)
    spans = [g.span for g in detect_all_gaps(well)]
    if spans and max(spans) > criteria.max_gap:
        return Rejection(well.name, "max_gap", max(spans), criteria.max_gap)
    ratio = complete_ratio(well, criteria.ratio_mode)
    if ratio < criteria.min_complete_ratio:
        return Rejection(well.name, "min_complete_ratio", ratio, criteria.min_complete_ratio)
    return None


def filter_wells(wells: list[WellLog], criteria: FilterCriteria | None = None
                 ) -> tuple[list[WellLog], list[Rejection]]:
    criteria = criteria or FilterCriteria()
    accepted, rejected = [], []
    for well in wells:
        reason = check_well(well, criteria)
        if reason is None:
            accepted.append(well)
        else:
            rejected.append(reason)
    return accepted, rejected
