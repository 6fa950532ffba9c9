"""Training strategies, gap evaluation, neighbor sweeps and property correlations."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .features import Dataset, build_dataset, feature_matrix, well_means
from .gaps import detect_gaps
from .metrics import UndefinedMape, mape_detail, mse
from .models.io import fit_regressor
from .rng import StableRng, child_seed
from .synthesis import GapSpec, InjectionResult, inject_gaps
from .wells import PROPERTIES, CoordSystem, PropertyKind, WellLog, complete_mask, parse_property

log = logging.getLogger(__name__)

MAX_NEIGHBORS = 10
EARTH_RADIUS_KM = 6371.0
DEFAULT_TEST_WELLS = 50


class StrategyError(ValueError):
    pass


class LeakError(RuntimeError):
    pass


class CoordinateError(ValueError):
    pass


@dataclass(frozen=True)
class Strategy:
    kind: str  # "local" | "global" | "neighbors"
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("local", "global", "neighbors"):
            raise StrategyError(f"unknown strategy {self.kind!r}")
        if self.kind == "neighbors" and not 0 <= self.k <= MAX_NEIGHBORS:
            raise StrategyError(f"neighbors:k needs 0 <= k <= {MAX_NEIGHBORS}, got {self.k}")
        if self.kind != "neighbors" and self.k != 0:
            raise StrategyError(f"strategy {self.kind} takes no k")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        t = text.strip().lower()
        if t.startswith("neighbors"):
            _, _, k = t.partition(":")
            try:
                n = int(k) if k else MAX_NEIGHBORS
            except ValueError:
                raise StrategyError(f"bad neighbor count in {text!r}") from None
            return cls("neighbors", n)
        return cls(t)

    def __str__(self) -> str:
        return f"neighbors:{self.k}" if self.kind == "neighbors" else self.kind


# -- geography --------------------------------------------------------------

def _coords(well: WellLog):
    h = well.header
    if not h.has_coordinates:
        return None
    return h.x, h.y, h.coord_system or CoordSystem.PROJECTED


def well_distance(a: WellLog, b: WellLog) -> float:
    """Euclidean meters for projected wells; great-circle km for geographic (x=lon, y=lat)."""
    ca, cb = _coords(a), _coords(b)
    missing = [w.name for w, c in ((a, ca), (b, cb)) if c is None]
    if missing:
        raise CoordinateError(f"wells without coordinates: {', '.join(missing)}")
    if ca[2] != cb[2]:
        raise CoordinateError(f"{a.name} and {b.name} use different coordinate systems")
    if ca[2] == CoordSystem.GEOGRAPHIC:
        lon1, lat1, lon2, lat2 = map(math.radians, (ca[0], ca[1], cb[0], cb[1]))
        h = (math.sin((lat2 - lat1) / 2) ** 2
             + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
        return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))
    return math.hypot(cb[0] - ca[0], cb[1] - ca[1])


def nearest_wells(origin: WellLog, others: list[WellLog], k: int) -> list[WellLog]:
    """The k closest wells (excluding the origin), ties broken by name."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return []
    pool = [w for w in others if w.name != origin.name]
    missing = [w.name for w in [origin, *pool] if not w.header.has_coordinates]
    if missing:
        raise CoordinateError(f"wells without coordinates: {', '.join(sorted(missing))}")
    ranked = sorted(pool, key=lambda w: (well_distance(origin, w), w.name))
    return ranked[:k]


# -- evaluation -------------------------------------------------------------

@dataclass
class GapResult:
    start_row: int
    row_count: int
    start_depth: float
    n_test_rows: int
    mse: float
    mape: float


@dataclass
class WellResult:
    well: str
    target: PropertyKind
    model: str
    strategy: str
    mse: float = float("nan")
    mape: float = float("nan")
    n_test_rows: int = 0
    n_unpredictable: int = 0
    n_mape_excluded: int = 0
    n_train_rows: int = 0
    error: str = ""
    gaps: list[GapResult] = field(default_factory=list)
    rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    truth: np.ndarray = field(default_factory=lambda: np.zeros(0))
    predicted: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def key(self):
        return (PROPERTIES.index(self.target), self.model, self.strategy, self.well)

    @property
    def ok(self) -> bool:
        return not self.error


def _num(v: float) -> str:
    return "" if v != v else repr(float(v))


@dataclass
class EvalReport:
    results: list[WellResult] = field(default_factory=list)

    def sorted(self) -> "EvalReport":
        return EvalReport(sorted(self.results, key=lambda r: r.key))

    def extend(self, other: "EvalReport") -> None:
        self.results.extend(other.results)

    @property
    def n_failed(self) -> int:
        return sum(not r.ok for r in self.results)

    def aggregate(self) -> list[dict]:
        """Unweighted mean over successful wells per (target, model, strategy)."""
        groups: dict[tuple, list[WellResult]] = {}
        for r in sorted(self.results, key=lambda r: r.key):
            groups.setdefault(r.key[:3], []).append(r)
        out = []
        for (t, model, strategy), rs in groups.items():
            ok = [r for r in rs if r.ok]
            mapes = [r.mape for r in ok if r.mape == r.mape]
            out.append({"target": PROPERTIES[t], "model": model, "strategy": strategy,
                        "n_wells": len(ok), "n_failed": len(rs) - len(ok),
                        "mse": float(np.mean([r.mse for r in ok])) if ok else float("nan"),
                        "mape": float(np.mean(mapes)) if mapes else float("nan")})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["well", "target", "model", "strategy", "mse", "mape", "n_test_rows",
                    "n_unpredictable", "n_mape_excluded", "n_train_rows", "error"])
        for r in sorted(self.results, key=lambda r: r.key):
            w.writerow([r.well, r.target.value, r.model, r.strategy, _num(r.mse), _num(r.mape),
                        r.n_test_rows, r.n_unpredictable, r.n_mape_excluded, r.n_train_rows, r.error])
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["target", "model", "strategy", "n_wells", "n_failed", "mean_mse", "mean_mape"])
        for a in self.aggregate():
            w.writerow([a["target"].value, a["model"], a["strategy"], a["n_wells"], a["n_failed"],
                        _num(a["mse"]), _num(a["mape"])])
        return buf.getvalue()

    def gaps_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["well", "target", "model", "strategy", "start_row", "row_count", "start_depth",
                    "n_test_rows", "mse", "mape"])
        for r in sorted(self.results, key=lambda r: r.key):
            for g in r.gaps:
                w.writerow([r.well, r.target.value, r.model, r.strategy, g.start_row, g.row_count,
                            repr(g.start_depth), g.n_test_rows, _num(g.mse), _num(g.mape)])
        return buf.getvalue()

    def predictions_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["well", "target", "model", "strategy", "row", "truth", "predicted"])
        for r in sorted(self.results, key=lambda r: r.key):
            for row, t, p in zip(r.rows.tolist(), r.truth.tolist(), r.predicted.tolist()):
                w.writerow([r.well, r.target.value, r.model, r.strategy, row, repr(t), repr(p)])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'target':<6} {'model':<6} {'strategy':<12} {'wells':>5} {'MSE':>12} {'MAPE %':>8}"]
        for a in self.aggregate():
            lines.append(f"{a['target'].value:<6} {a['model']:<6} {a['strategy']:<12} {a['n_wells']:>5} "
                         f"{a['mse']:>12.5g} {a['mape']:>8.3f}")
        return "\n".join(lines)


@dataclass
class TestCase:
    """One test well after injection, with the rows evaluated for one target."""

    well: WellLog
    injection: InjectionResult
    target: PropertyKind
    rows: np.ndarray
    truth: np.ndarray
    X: np.ndarray
    n_unpredictable: int

    @property
    def provenance(self) -> set[tuple[str, int]]:
        return {(self.well.name, int(r)) for r in self.rows}


def prepare_test(well: WellLog, target: PropertyKind, gap_spec: GapSpec) -> TestCase:
    """Inject gaps and build test features from ground-truth siblings.

    Well means come from the modified well, so no blanked value reaches the
    features.
    """
    target = parse_property(target)
    inj = inject_gaps(well, gap_spec)
    modified = inj.modified_well
    rows = inj.blanked_rows(target)
    truth = inj.truth_values(target)
    sib_ok = np.ones(rows.size, dtype=bool)
    for k in PROPERTIES:
        if k != target:
            sib_ok &= ~np.isnan(well[k][rows])
    rows, truth = rows[sib_ok], truth[sib_ok]
    all_blanked = np.unique(inj.cell_rows)
    means = well_means(modified, all_blanked)
    X = feature_matrix(modified, target, rows, means, sibling_source=well)
    return TestCase(well, inj, target, rows, truth, X, int((~sib_ok).sum()))


def audit_leaks(train: Dataset, test_provenance: set[tuple[str, int]]) -> None:
    overlap = train.provenance() & test_provenance
    if overlap:
        well, row = sorted(overlap)[0]
        raise LeakError(f"{len(overlap)} test rows in the training set (first: {well} row {row})")


def _model_label(model) -> str:
    return model if isinstance(model, str) else getattr(model, "__name__", "custom")


def _score(case: TestCase, predicted: np.ndarray, result: WellResult) -> WellResult:
    result.rows, result.truth, result.predicted = case.rows, case.truth, predicted
    result.n_test_rows = int(case.rows.size)
    result.mse = mse(case.truth, predicted)
    try:
        md = mape_detail(case.truth, predicted)
        result.mape, result.n_mape_excluded = md.value, md.n_excluded
    except UndefinedMape as exc:
        result.error = str(exc)
    h = case.well.header
    for a, n in case.injection.intervals:
        sel = (case.rows >= a) & (case.rows < a + n)
        if not sel.any():
            continue
        try:
            g_mape = mape_detail(case.truth[sel], predicted[sel]).value
        except UndefinedMape:
            g_mape = float("nan")
        result.gaps.append(GapResult(a, n, h.start_depth + a * h.step, int(sel.sum()),
                                     mse(case.truth[sel], predicted[sel]), g_mape))
    return result


def _fit_and_score(case: TestCase, train_wells: list[WellLog], exclude: set, model, strategy: str,
                   seed: int, options: dict | None) -> WellResult:
    result = WellResult(case.well.name, case.target, _model_label(model), strategy,
                        n_unpredictable=case.n_unpredictable)
    if case.rows.size == 0:
        result.error = "no predictable test rows"
        return result
    train = build_dataset(train_wells, case.target, exclude)
    audit_leaks(train, exclude)
    result.n_train_rows = len(train)
    reg = fit_regressor(model, train.X, train.y, child_seed(seed, "model", case.well.name, case.target.value),
                        options, case.target)
    return _score(case, reg.predict(case.X), result)


def _safe(fn, case_name, target, model, strategy) -> WellResult:
    try:
        return fn()
    except LeakError:
        raise
    except Exception as exc:  # per-well failures are reported, never fatal
        log.warning("%s/%s/%s/%s failed: %s", case_name, target.value, _model_label(model), strategy, exc)
        return WellResult(case_name, target, _model_label(model), strategy, error=f"{type(exc).__name__}: {exc}")


def _map(fn, items, jobs: int):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def run_strategy(wells: list[WellLog], test_wells, target: PropertyKind, model: str | Callable,
                 strategy: Strategy | str, gap_spec: GapSpec | None = None, seed: int = 0,
                 jobs: int = 1, options: dict | None = None) -> EvalReport:
    """Evaluate one (target, model, strategy) on every test well.

    Gaps are injected into each test well with ``seed``; training never sees
    any injected row.  Global training pools every well (test wells in their
    modified form) and fits one model shared by all test wells.
    """
    if isinstance(strategy, str):
        strategy = Strategy.parse(strategy)
    target = parse_property(target)
    spec = replace(gap_spec or GapSpec(), seed=seed)
    by_name = {w.name: w for w in wells}
    names = [t if isinstance(t, str) else t.name for t in test_wells]
    unknown = [n for n in names if n not in by_name]
    if unknown:
        raise ValueError(f"test wells not in the corpus: {', '.join(unknown)}")
    label = str(strategy)

    def prep(name):
        try:
            return prepare_test(by_name[name], target, spec), None
        except Exception as exc:
            return None, WellResult(name, target, _model_label(model), label, error=f"{type(exc).__name__}: {exc}")

    prepared = _map(prep, sorted(names), jobs)
    failed = [r for _, r in prepared if r is not None]
    cases = [c for c, _ in prepared if c is not None]

    if strategy.kind == "global":
        results = failed + _run_global(wells, cases, target, model, label, seed, options)
        return EvalReport(sorted(results, key=lambda r: r.key))

    def one(case: TestCase):
        neighbors = nearest_wells(case.well, wells, strategy.k) if strategy.kind == "neighbors" else []
        train_wells = [case.injection.modified_well, *neighbors]
        return _safe(lambda: _fit_and_score(case, train_wells, case.provenance, model, label, seed, options),
                     case.well.name, target, model, label)

    results = failed + _map(one, cases, jobs)
    return EvalReport(sorted(results, key=lambda r: r.key))


def _run_global(wells, cases: list[TestCase], target, model, label, seed, options) -> list[WellResult]:
    modified = {c.well.name: c.injection.modified_well for c in cases}
    train_wells = [modified.get(w.name, w) for w in wells]
    exclude = set().union(*(c.provenance for c in cases)) if cases else set()
    usable = [c for c in cases if c.rows.size]
    results = [WellResult(c.well.name, target, _model_label(model), label,
                          n_unpredictable=c.n_unpredictable, error="no predictable test rows")
               for c in cases if not c.rows.size]
    if not usable:
        return results
    try:
        train = build_dataset(train_wells, target, exclude)
        audit_leaks(train, exclude)
        reg = fit_regressor(model, train.X, train.y, child_seed(seed, "model", "global", target.value),
                            options, target)
    except LeakError:
        raise
    except Exception as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return results + [WellResult(c.well.name, target, _model_label(model), label, error=msg) for c in usable]
    for c in usable:
        r = WellResult(c.well.name, target, _model_label(model), label,
                       n_unpredictable=c.n_unpredictable, n_train_rows=len(train))
        results.append(_safe(lambda c=c, r=r: _score(c, reg.predict(c.X), r), c.well.name, target, model, label))
    return results


def evaluate(wells: list[WellLog], test_wells, targets, models, strategies, gap_spec: GapSpec | None = None,
             seed: int = 0, jobs: int = 1, options: dict | None = None) -> EvalReport:
    """Every (target, model, strategy) combination, merged in sorted order."""
    report = EvalReport()
    for target in targets:
        for model in models:
            for strategy in strategies:
                opts = (options or {}).get(_model_label(model), {}) if options else None
                report.extend(run_strategy(wells, test_wells, target, model, strategy, gap_spec, seed,
                                           jobs, opts))
    return report.sorted()


def select_test_wells(wells: list[WellLog], n: int = DEFAULT_TEST_WELLS, seed: int = 0) -> list[str]:
    """A seeded random subset of ``n`` well names (all wells when fewer), sorted."""
    names = sorted(w.name for w in wells)
    if n >= len(names):
        return names
    perm = StableRng(child_seed(seed, "test-wells")).permutation(len(names))
    return sorted(names[i] for i in perm[:n])


# -- neighbor sweep ---------------------------------------------------------

@dataclass
class SweepPoint:
    k: int
    mape: float
    mse: float
    neighbors: list[str]
    n_train_rows: int


@dataclass
class SweepResult:
    well: str
    target: PropertyKind
    model: str
    points: list[SweepPoint]
    truncated: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["well", "target", "model", "k", "mape", "mse", "n_train_rows", "neighbors"])
        for p in self.points:
            w.writerow([self.well, self.target.value, self.model, p.k, _num(p.mape), _num(p.mse),
                        p.n_train_rows, " ".join(p.neighbors)])
        return buf.getvalue()


def neighbor_sweep(wells: list[WellLog], test_well: WellLog | str, target: PropertyKind, model,
                   gap_spec: GapSpec | None = None, k_max: int = MAX_NEIGHBORS, seed: int = 0,
                   options: dict | None = None, jobs: int = 1) -> SweepResult:
    """Retrain on the test well plus its k nearest wells for k = 0..k_max.

    Every k is scored on the same injected gaps of the test well.
    """
    if not 0 <= k_max <= MAX_NEIGHBORS:
        raise StrategyError(f"k_max must lie in [0, {MAX_NEIGHBORS}]")
    target = parse_property(target)
    by_name = {w.name: w for w in wells}
    well = by_name[test_well] if isinstance(test_well, str) else test_well
    spec = replace(gap_spec or GapSpec(), seed=seed)
    case = prepare_test(well, target, spec)
    if case.rows.size == 0:
        raise ValueError(f"{well.name}: no predictable test rows for {target.value}")
    ranked = nearest_wells(well, wells, min(k_max, len([w for w in wells if w.name != well.name])))
    truncated = len(ranked) < k_max
    if truncated:
        log.warning("%s: only %d neighbors available, sweep stops at k=%d", well.name, len(ranked), len(ranked))

    def one(k):
        r = _fit_and_score(case, [case.injection.modified_well, *ranked[:k]], case.provenance,
                           model, f"neighbors:{k}", seed, options)
        return SweepPoint(k, r.mape, r.mse, [w.name for w in ranked[:k]], r.n_train_rows)

    points = _map(one, range(len(ranked) + 1), jobs)
    return SweepResult(well.name, target, _model_label(model), points, truncated)


# -- correlations -----------------------------------------------------------

@dataclass
class CorrelationMatrix:
    values: np.ndarray  # 4x4, NaN where undefined
    mode: str
    n_wells: int

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["property"] + [k.value for k in PROPERTIES])
        for i, k in enumerate(PROPERTIES):
            w.writerow([k.value] + [("undefined" if v != v else repr(float(v))) for v in self.values[i]])
        return buf.getvalue()


def _pearson(M: np.ndarray) -> np.ndarray:
    """Pairwise Pearson over the rows of M; NaN where a column has zero variance."""
    C = M - M.mean(axis=0)
    ss = np.sqrt((C ** 2).sum(axis=0))
    p = M.shape[1]
    out = np.full((p, p), np.nan)
    for i in range(p):
        out[i, i] = 1.0
        for j in range(i + 1, p):
            if ss[i] > 0 and ss[j] > 0:
                r = float(C[:, i] @ C[:, j]) / (ss[i] * ss[j])
                out[i, j] = out[j, i] = min(1.0, max(-1.0, r))
    return out


def correlations(wells: list[WellLog], mode: str = "per-well") -> CorrelationMatrix:
    """Property correlations over complete rows.

    ``per-well`` averages each well's matrix, using only the wells where an
    entry is defined; ``global`` pools every complete row.
    """
    if not wells:
        raise ValueError("correlations need at least one well")
    blocks = []
    for w in wells:
        M = w.matrix()[complete_mask(w)]
        if mode == "per-well" and M.shape[0] < 2:
            raise ValueError(f"{w.name}: fewer than 2 complete rows")
        blocks.append(M)
    if mode == "global":
        M = np.vstack(blocks)
        if M.shape[0] < 2:
            raise ValueError("fewer than 2 complete rows in the corpus")
        return CorrelationMatrix(_pearson(M), mode, len(wells))
    if mode != "per-well":
        raise ValueError(f"mode must be 'per-well' or 'global', got {mode!r}")
    stack = np.stack([_pearson(M) for M in blocks])
    counts = (~np.isnan(stack)).sum(axis=0)
    sums = np.nansum(stack, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return CorrelationMatrix(avg, mode, len(wells))


# -- completion -------------------------------------------------------------

@dataclass
class FilledCell:
    row: int
    depth: float
    value: float  # NaN when the row could not be predicted
    model: str
    strategy: str


def complete_well(well: WellLog, target: PropertyKind, regressor, strategy: str = "model") -> tuple[WellLog, list[FilledCell]]:
    """Fill every detected gap of ``target`` with model predictions.

    Rows whose three siblings are not all present stay absent and are listed
    in the audit with a NaN value.
    """
    target = parse_property(target)
    rows = np.array([r for g in detect_gaps(well, target) for r in g.rows], dtype=np.int64)
    if rows.size == 0:
        return well, []
    ok = np.ones(rows.size, dtype=bool)
    for k in PROPERTIES:
        if k != target:
            ok &= ~np.isnan(well[k][rows])
    values = np.full(rows.size, np.nan)
    if ok.any():
        X = feature_matrix(well, target, rows[ok], well_means(well))
        values[ok] = regressor.predict(X)
    curve = np.array(well[target])
    curve[rows] = values
    label = getattr(regressor, "kind", _model_label(regressor))
    depths = well.depths
    audit = [FilledCell(int(r), float(depths[r]), float(v), label, strategy)
             for r, v in zip(rows.tolist(), values.tolist())]
    return well.with_curves({target: curve}), audit


def audit_csv(well_name: str, target: PropertyKind, cells: list[FilledCell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["well", "property", "row", "depth", "value", "model", "strategy", "filled"])
    for c in cells:
        filled = c.value == c.value
        w.writerow([well_name, target.value, c.row, repr(c.depth), repr(c.value) if filled else "",
                    c.model, c.strategy, "yes" if filled else "no"])
    return buf.getvalue()
