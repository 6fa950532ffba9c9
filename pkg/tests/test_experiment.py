import math

import numpy as np
import pytest

from wellfill.experiment import (
    EARTH_RADIUS_KM, CoordinateError, EvalReport, LeakError, Strategy, StrategyError, audit_csv, audit_leaks,
    complete_well, correlations, evaluate, nearest_wells, neighbor_sweep, prepare_test, run_strategy,
    select_test_wells, well_distance,
)
from wellfill.features import build_dataset
from wellfill.models import fit_regressor
from wellfill.synth import generate, preset
from wellfill.synthesis import GapSpec
from wellfill.wells import PROPERTIES, CoordSystem, PropertyKind, WellLog

from conftest import make_well

NPHI, GR, RHOB, VP = PROPERTIES
SMALL_GAPS = GapSpec(mean_size=30.0, size_stddev=10.0, gaps_per_km=5.0)
FAST = {"n_trees": 10}


@pytest.fixture(scope="module")
def corpus():
    return generate(preset("standard", n_wells=5, extent=600.0, step=0.5, seed=3))


# -- strategies and geography -----------------------------------------------

def test_strategy_parsing():
    assert Strategy.parse("local") == Strategy("local")
    assert Strategy.parse("Global") == Strategy("global")
    assert Strategy.parse("neighbors:3") == Strategy("neighbors", 3)
    assert Strategy.parse("neighbors") == Strategy("neighbors", 10)
    assert str(Strategy.parse("neighbors:0")) == "neighbors:0"
    for bad in ("neighbors:12", "neighbors:-1", "neighbors:x", "regional"):
        with pytest.raises(StrategyError):
            Strategy.parse(bad)


def _at(name, x, y, cs=CoordSystem.PROJECTED):
    return make_well(name, n=5, x=x, y=y, coord_system=cs)


def test_nearest_wells_pythagorean_and_ties():
    origin = _at("O", 0.0, 0.0)
    far, near = _at("B", 6.0, 8.0), _at("A", 3.0, 4.0)
    ranked = nearest_wells(origin, [far, origin, near], 2)
    assert [w.name for w in ranked] == ["A", "B"]
    assert [well_distance(origin, w) for w in ranked] == [5.0, 10.0]
    assert nearest_wells(origin, [far, near], 0) == []
    twins = [_at("Z", 1.0, 1.0), _at("M", 1.0, 1.0)]
    assert [w.name for w in nearest_wells(origin, twins, 2)] == ["M", "Z"]


def test_nearest_wells_missing_coordinates_named():
    with pytest.raises(CoordinateError, match="NOCOORD"):
        nearest_wells(_at("O", 0.0, 0.0), [make_well("NOCOORD", n=5)], 1)


def test_great_circle_distance():
    a = _at("A", 0.0, 0.0, CoordSystem.GEOGRAPHIC)
    b = _at("B", 0.0, 1.0, CoordSystem.GEOGRAPHIC)
    assert well_distance(a, b) == pytest.approx(EARTH_RADIUS_KM * math.pi / 180, rel=1e-12)
    ams, rtm = _at("AMS", 4.8952, 52.3702, CoordSystem.GEOGRAPHIC), _at("RTM", 4.4777, 51.9244, CoordSystem.GEOGRAPHIC)
    assert well_distance(ams, rtm) == pytest.approx(57.4, abs=0.5)
    with pytest.raises(CoordinateError):
        well_distance(a, _at("P", 0.0, 0.0))


def test_synthetic_grid_neighbor_order():
    wells = generate(preset("standard", n_wells=9, extent=20.0, step=1.0, real_gaps=None, grid_spacing=1000.0))
    centre = wells[4]  # middle of the 3x3 grid
    ranked = [w.name for w in nearest_wells(centre, wells, 8)]
    assert ranked[:4] == ["SYN-001", "SYN-003", "SYN-005", "SYN-007"]
    assert ranked[4:] == ["SYN-000", "SYN-002", "SYN-006", "SYN-008"]


# -- test preparation ---------------------------------------------------------

def test_prepare_test_uses_ground_truth_siblings_and_clean_means(corpus):
    well = corpus[0]
    case = prepare_test(well, GR, SMALL_GAPS)
    assert case.rows.size > 0
    blanked = set(case.injection.blanked_rows(GR).tolist())
    assert set(case.rows.tolist()) <= blanked
    assert np.array_equal(case.truth, well[GR][case.rows])
    assert np.array_equal(case.X[:, 0], well[NPHI][case.rows])
    assert np.isnan(case.injection.modified_well[NPHI][case.rows]).all()
    all_blanked = np.unique(case.injection.cell_rows)
    keep = np.setdiff1d(np.flatnonzero(~np.isnan(well[RHOB])), all_blanked)
    assert case.X[0, 5] == pytest.approx(well[RHOB][keep].mean(), rel=1e-12)
    assert np.all(case.X[:, 3:7] == case.X[0, 3:7])


def test_audit_leaks():
    d = build_dataset([make_well(n=10)], NPHI)
    audit_leaks(d, {("W-1", 20), ("OTHER", 3)})
    with pytest.raises(LeakError):
        audit_leaks(d, {("W-1", 4)})


# -- strategies end to end -----------------------------------------------------

def _oracle_factory(well, target):
    by_depth = dict(zip(np.round(well.depths, 6).tolist(), well[target].tolist()))

    def perfect(Xs, y):
        return type("Perfect", (), {"predict": lambda self, X: np.array([by_depth[round(d, 6)] for d in X[:, 7]])})()
    return perfect


def test_perfect_oracle_stub_scores_zero(corpus):
    well = corpus[1]
    rep = run_strategy(corpus, [well.name], VP, _oracle_factory(well, VP), "local", SMALL_GAPS, seed=2)
    (r,) = rep.results
    assert r.ok and r.n_test_rows > 0
    assert (r.mse, r.mape) == (0.0, 0.0)
    assert all(g.mse == 0.0 for g in r.gaps)


def test_neighbors_zero_equals_local(corpus):
    names = [w.name for w in corpus[:2]]
    local = run_strategy(corpus, names, RHOB, "gb", "local", SMALL_GAPS, seed=4, options=FAST)
    zero = run_strategy(corpus, names, RHOB, "gb", "neighbors:0", SMALL_GAPS, seed=4, options=FAST)
    for a, b in zip(local.results, zero.results):
        assert (a.mse, a.mape, a.n_train_rows) == (b.mse, b.mape, b.n_train_rows)
        assert np.array_equal(a.predicted, b.predicted)


def test_neighbors_train_on_more_rows(corpus):
    local = run_strategy(corpus, ["SYN-000"], NPHI, "lr", "local", SMALL_GAPS, seed=1)
    two = run_strategy(corpus, ["SYN-000"], NPHI, "lr", "neighbors:2", SMALL_GAPS, seed=1)
    assert two.results[0].n_train_rows > 2 * local.results[0].n_train_rows
    assert np.array_equal(two.results[0].rows, local.results[0].rows)


def test_global_trains_one_model(corpus):
    names = [w.name for w in corpus[:3]]
    rep = run_strategy(corpus, names, GR, "lr", "global", SMALL_GAPS, seed=5)
    assert len({r.n_train_rows for r in rep.results}) == 1
    assert all(r.ok for r in rep.results)
    local = run_strategy(corpus, names, GR, "lr", "local", SMALL_GAPS, seed=5)
    assert [r.rows.tolist() for r in rep.results] == [r.rows.tolist() for r in local.results]


def test_aggregate_is_unweighted_mean_and_failures_are_reported(corpus):
    broken = make_well("BROKEN", n=1201, step=0.5, missing={VP: range(1201)})
    wells = [*corpus, broken]
    rep = run_strategy(wells, [w.name for w in wells], VP, "lr", "local", SMALL_GAPS, seed=6)
    assert rep.n_failed == 1
    (failed,) = [r for r in rep.results if not r.ok]
    assert failed.well == "BROKEN"
    ok = [r for r in rep.results if r.ok]
    (agg,) = rep.aggregate()
    assert agg["mse"] == pytest.approx(sum(r.mse for r in ok) / len(ok), rel=1e-15)
    assert agg["mape"] == pytest.approx(sum(r.mape for r in ok) / len(ok), rel=1e-15)
    assert (agg["n_wells"], agg["n_failed"]) == (len(corpus), 1)
    assert "BROKEN" in rep.to_csv()


def test_evaluate_is_deterministic_and_jobs_independent(corpus):
    args = (corpus, ["SYN-000", "SYN-002"], [NPHI, VP], ["lr", "gb"], [Strategy("local"), Strategy("neighbors", 1)])
    a = evaluate(*args, gap_spec=SMALL_GAPS, seed=8, options={"gb": FAST})
    b = evaluate(*args, gap_spec=SMALL_GAPS, seed=8, jobs=3, options={"gb": FAST})
    assert len(a.results) == 2 * 2 * 2 * 2
    for fmt in ("to_csv", "aggregate_csv", "gaps_csv", "predictions_csv"):
        assert getattr(a, fmt)() == getattr(b, fmt)()
    assert a.table().splitlines()[0].split()[:3] == ["target", "model", "strategy"]


def test_linear_law_recovered_locally():
    wells = generate(preset("linear", n_wells=2, extent=600.0, step=0.5, seed=1))
    lr = run_strategy(wells, [w.name for w in wells], NPHI, "lr", "local", SMALL_GAPS, seed=3)
    gb = run_strategy(wells, [w.name for w in wells], NPHI, "gb", "local", SMALL_GAPS, seed=3)
    assert all(r.mape < 0.1 for r in lr.results)
    assert all(r.mape < 5.0 for r in gb.results)


def test_select_test_wells():
    wells = [make_well(f"W{i:02d}", n=5) for i in range(12)]
    a = select_test_wells(wells, 5, seed=1)
    assert a == select_test_wells(list(reversed(wells)), 5, seed=1)
    assert len(a) == 5 and a == sorted(a)
    assert select_test_wells(wells, 50) == sorted(w.name for w in wells)


# -- neighbor sweep -----------------------------------------------------------

def test_sweep_k0_matches_local_and_truncates(corpus):
    res = neighbor_sweep(corpus, "SYN-001", NPHI, "gb", SMALL_GAPS, k_max=10, seed=2, options=FAST)
    assert res.truncated and [p.k for p in res.points] == [0, 1, 2, 3, 4]
    local = run_strategy(corpus, ["SYN-001"], NPHI, "gb", "local", SMALL_GAPS, seed=2, options=FAST)
    assert res.points[0].mape == local.results[0].mape
    assert res.points[0].mse == local.results[0].mse
    assert res.points[3].neighbors == [w.name for w in nearest_wells(corpus[1], corpus, 3)]
    assert res.to_csv().splitlines()[0] == "well,target,model,k,mape,mse,n_train_rows,neighbors"
    with pytest.raises(StrategyError):
        neighbor_sweep(corpus, "SYN-001", NPHI, "gb", SMALL_GAPS, k_max=11)


# -- correlations ---------------------------------------------------------------

def _well_with_correlation(name, r, n=50, seed=0):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=n), rng.normal(size=n)
    a -= a.mean()
    b -= b.mean()
    b -= (a @ b) / (a @ a) * a
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)
    curves = {NPHI: 1.0 + a, GR: 1.0 + r * a + math.sqrt(1 - r * r) * b, RHOB: 2.0 - a, VP: 5.0 + b}
    return WellLog.from_grid(name, 0.0, 1.0, curves)


def test_correlation_examples():
    w1, w2 = _well_with_correlation("A", 0.2, seed=1), _well_with_correlation("B", 0.6, seed=2)
    per = correlations([w1, w2], "per-well")
    assert per.values[0, 1] == pytest.approx(0.4, abs=1e-12)
    assert per.values[0, 2] == pytest.approx(-1.0, abs=1e-12)
    assert correlations([w1], "global").values[0, 1] == pytest.approx(0.2, abs=1e-12)
    for cm in (per, correlations([w1, w2], "global")):
        assert np.array_equal(cm.values, cm.values.T)
        assert np.all(np.diag(cm.values) == 1.0)
        assert np.all(np.abs(cm.values) <= 1.0)


def test_zero_variance_entry_is_undefined():
    w = make_well(n=30)
    flat = w.with_curves({VP: np.full(30, 80.0)})
    cm = correlations([flat], "per-well")
    assert np.isnan(cm.values[3, 0]) and cm.values[3, 3] == 1.0
    assert cm.to_csv().splitlines()[4].startswith("VP,undefined,undefined,undefined,1.0")
    # averaging skips wells where the entry is undefined
    cm = correlations([flat, w], "per-well")
    assert cm.values[3, 0] == pytest.approx(correlations([w]).values[3, 0])


def test_correlation_errors():
    with pytest.raises(ValueError):
        correlations([make_well(n=5, missing={GR: range(1, 5)})], "per-well")
    with pytest.raises(ValueError):
        correlations([make_well(n=5)], "pooled")


# -- completion ------------------------------------------------------------------

def test_complete_well_fills_gaps_and_leaves_unpredictable_rows():
    w = make_well(n=300, missing={GR: range(100, 140), NPHI: range(130, 135)})
    data = build_dataset([w], GR)
    reg = fit_regressor("lr", data.X, data.y, target=GR)
    filled, cells = complete_well(w, GR, reg, "local")
    assert len(cells) == 40
    assert np.isnan(filled[GR][130:135]).all()
    assert not np.isnan(filled[GR][100:130]).any() and not np.isnan(filled[GR][135:140]).any()
    assert np.array_equal(filled[NPHI], w[NPHI], equal_nan=True)
    text = audit_csv(w.name, GR, cells)
    assert text.count(",no\n") == 5 and text.count(",yes\n") == 35
    untouched, none = complete_well(make_well(n=50), GR, reg)
    assert none == [] and untouched == make_well(n=50)


def test_targets_accept_property_names(corpus):
    by_enum = run_strategy(corpus, ["SYN-000"], VP, "lr", "local", SMALL_GAPS, seed=3)
    by_name = run_strategy(corpus, ["SYN-000"], "vp", "lr", "local", SMALL_GAPS, seed=3)
    assert by_name.to_csv() == by_enum.to_csv()
    with pytest.raises(ValueError, match="unknown property"):
        run_strategy(corpus, ["SYN-000"], "DT", "lr", "local", SMALL_GAPS)
