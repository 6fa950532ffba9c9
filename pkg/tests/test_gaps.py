import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wellfill.gaps import (
    FilterCriteria, check_well, coincidence_graph, complete_ratio, corpus_order_histogram, detect_all_gaps,
    detect_gaps, filter_wells, gaps_coincide, graph_from_gaps, histogram_csv, leading_run, missing_runs,
    missingness,
)
from wellfill.wells import PROPERTIES, Gap, PropertyKind, WellLog

from conftest import coincidence_fixture, make_well

NPHI, GR, RHOB, VP = PROPERTIES


def _gap(kind, start_depth, span):
    return Gap(kind, int(start_depth * 10), max(1, int(span * 10)), start_depth, span)


def test_missing_runs():
    assert missing_runs(np.array([0, 1, 1, 0, 1, 0, 0, 1], bool)) == [(1, 2), (4, 1), (7, 1)]
    assert missing_runs(np.zeros(5, bool)) == []


@pytest.mark.parametrize("rows,expected", [
    ([10, 11, 12], [(10, 3, 0.45)]),
    ([10, 11], []),
    (list(range(0, 100)), []),
    ([5, 6, 7, 20, 21, 22, 23], [(5, 3, 0.45), (20, 4, 0.60)]),
])
def test_detect_gaps_examples(rows, expected):
    w = make_well(n=200, missing={GR: rows})
    got = [(g.start_row, g.row_count, g.span) for g in detect_gaps(w, GR)]
    assert [(a, b) for a, b, _ in got] == [(a, b) for a, b, _ in expected]
    assert [s for *_, s in got] == pytest.approx([s for *_, s in expected], abs=1e-12)
    assert detect_gaps(w, NPHI) == []


def test_leading_run():
    w = make_well(n=50, missing={VP: range(0, 7)})
    assert leading_run(w, VP) == 7
    assert leading_run(w, GR) == 0
    assert leading_run(make_well(n=5, missing={VP: range(5)}), VP) == 5


@given(st.lists(st.booleans(), min_size=3, max_size=120), st.sampled_from([0.1, 0.15, 0.5]))
def test_detect_gaps_properties(pattern, step):
    n = len(pattern)
    missing = np.array(pattern)
    gr = np.where(missing, math.nan, 1.0)
    w = WellLog.from_grid("p", 0.0, step, {GR: gr})
    gaps = detect_gaps(w, GR)
    covered = set()
    prev_stop = -1
    for g in gaps:
        assert g.start_row > prev_stop  # sorted and disjoint
        prev_stop = g.stop_row
        assert missing[g.start_row:g.stop_row].all()
        assert g.start_row > 0 and not missing[g.start_row - 1]
        assert g.stop_row == n or not missing[g.stop_row]
        assert g.span > 0.3
        covered.update(g.rows)
    expected = set()
    for a, length in missing_runs(missing):
        if a > 0 and length * step > 0.3 + 1e-9:
            expected.update(range(a, a + length))
    assert covered == expected


def test_missingness_examples():
    w = make_well(n=100, missing={VP: range(20, 63)})
    s = missingness([w])
    assert s.per_property[VP].missing_fraction == pytest.approx(0.43)
    assert s.per_property[VP].gap_count == 1
    assert s.per_property[VP].mean_span == pytest.approx(43 * 0.15)
    assert s.complete_fraction == pytest.approx(0.57)

    full = missingness([make_well(n=100), make_well("W-2", n=50)])
    assert full.complete_fraction == 1.0
    assert all(full.per_property[k].gap_count == 0 for k in PROPERTIES)
    assert full.gaps_per_km == 0.0
    with pytest.raises(ValueError):
        missingness([])


def test_missingness_rates_and_quartiles():
    # 1000 rows at 0.15 m: extent 149.85 m; three GR gaps of 4, 6 and 10 rows
    w = make_well(n=1000, missing={GR: [*range(100, 104), *range(300, 306), *range(600, 610)], NPHI: range(0, 5)})
    s = missingness([w])
    g = s.per_property[GR]
    assert g.gap_count == 3
    assert g.gaps_per_km == pytest.approx(3 / 0.14985)
    assert (g.min_span, g.median_span, g.max_span) == pytest.approx((0.6, 0.9, 1.5))
    assert g.q1_span <= g.median_span <= g.q3_span
    assert s.per_property[NPHI].missing_fraction == pytest.approx(0.005)
    assert s.per_property[NPHI].gap_count == 0
    lines = s.to_csv().splitlines()
    assert lines[0].startswith("property,missing_fraction,gap_count")
    assert lines[2].startswith("GR,0.02,3,")


def test_coincidence_examples():
    a = _gap(NPHI, 1000.0, 100.0)
    assert gaps_coincide(a, _gap(GR, 1005.0, 95.0))
    assert not gaps_coincide(a, _gap(GR, 1020.0, 100.0))
    assert not gaps_coincide(a, _gap(GR, 1000.0, 80.0))
    assert not gaps_coincide(a, _gap(NPHI, 1000.0, 100.0))
    g = graph_from_gaps([a, _gap(GR, 1005.0, 95.0)])
    assert g.edges == [(0, 1)]
    assert g.order_histogram() == {1: 0, 2: 1, 3: 0, 4: 0}
    assert graph_from_gaps([a]).order_histogram() == {1: 1, 2: 0, 3: 0, 4: 0}


@given(st.lists(st.tuples(st.sampled_from(PROPERTIES), st.floats(0, 100), st.floats(0.5, 30)), max_size=25))
def test_coincidence_graph_properties(specs):
    nodes = [_gap(k, s, sp) for k, s, sp in specs]
    g = graph_from_gaps(nodes)
    brute = {(i, j) for i in range(len(nodes)) for j in range(i + 1, len(nodes)) if gaps_coincide(nodes[i], nodes[j])}
    assert set(g.edges) == brute
    assert all(gaps_coincide(nodes[j], nodes[i]) for i, j in g.edges)
    assert sorted(i for c in g.components for i in c) == list(range(len(nodes)))
    assert sum(len(c) for c in g.components) == len(nodes)
    assert all(1 <= g.component_order(c) <= 4 for c in g.components)


def test_coincidence_fixture_recovered():
    well, expected = coincidence_fixture()
    assert coincidence_graph(well).order_histogram() == expected
    assert corpus_order_histogram([well]) == expected
    assert histogram_csv(expected).splitlines()[1] == "1,83,0.83"


def test_filter_examples():
    n = int(2000 / 0.15) + 1
    ok = make_well("OK", n=n, missing={GR: range(1000, 1200)})  # 30 m gap
    shallow = make_well("SHALLOW", n=int(1000 / 0.15) + 1)
    holey = make_well("HOLEY", n=n, missing={VP: range(1000, 1400)})  # 60 m gap
    sparse = make_well("SPARSE", n=n, missing={NPHI: [i for i in range(1, n) if i % 3 != 0]})
    accepted, rejected = filter_wells([ok, shallow, holey, sparse])
    assert [w.name for w in accepted] == ["OK"]
    assert [(r.well_name, r.criterion) for r in rejected] == [
        ("SHALLOW", "min_depth"), ("HOLEY", "max_gap"), ("SPARSE", "min_complete_ratio")]
    assert filter_wells(accepted)[0] == accepted


def test_filter_first_violation_and_ratio_modes():
    short_and_holey = make_well("BAD", n=1000, missing={VP: range(10, 600)})
    assert check_well(short_and_holey, FilterCriteria()).criterion == "min_depth"
    w = make_well(n=100, missing={GR: range(40, 100)})
    assert complete_ratio(w) == pytest.approx(0.4)
    assert complete_ratio(w, "incomplete") == pytest.approx(40 / 60)
    crit = FilterCriteria(min_depth=1.0, max_gap=100.0, min_complete_ratio=0.5, ratio_mode="incomplete")
    assert check_well(w, crit) is None
    assert check_well(w, FilterCriteria(1.0, 100.0, 0.5)).criterion == "min_complete_ratio"
    with pytest.raises(ValueError):
        FilterCriteria(min_depth=0)
    with pytest.raises(ValueError):
        FilterCriteria(ratio_mode="other")


def test_detect_all_gaps_covers_each_property():
    w = make_well(n=100, missing={k: range(10 + 10 * i, 14 + 10 * i) for i, k in enumerate(PROPERTIES)})
    assert [g.property for g in detect_all_gaps(w)] == list(PROPERTIES)
