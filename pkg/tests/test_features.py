import io
import statistics

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gdpx.classifier import ClassifiedFlight, FlightClass
from gdpx.errors import MissingQuarter
from gdpx.features import (
    AIRPORT_COLUMNS, CAUSE_COLUMNS, FEATURE_COLUMNS, FeatureVector, airport_dummies, extract, mean_std,
    par_stats, parse_features, scope_ete, serialize_features, time_variation_stats,
)
from gdpx.flightdata import Cause

from conftest import hm, make_flight, make_program

IF, EF = FlightClass.IN_SCOPE, FlightClass.EXEMPT


def pair(f, klass, delay=0):
    edct = None if f.edct_wheels_off is None else f.edct_wheels_off - f.fp_wheels_off
    return ClassifiedFlight(f.flight_id, "EWR-1", klass, delay, edct), f


def short_program(**kw):
    # two quarters: 13:00 and 13:15
    return make_program(start=hm(13), end=hm(13, 30), **kw)


def test_column_set():
    assert len(FEATURE_COLUMNS) == 41 and len(set(FEATURE_COLUMNS)) == 41
    assert FEATURE_COLUMNS[:4] == ("et", "gt", "ct", "cnt_r") and FEATURE_COLUMNS[-1] == "apt_others"


def test_par_stats_zero_when_equal():
    assert all(v == 0 for v in par_stats(short_program(), {52: 8.0, 53: 8.0}).values())


def test_par_stats_hand_example():
    s = par_stats(short_program(), {52: 8.0, 53: 10.0})
    assert s["u_par_initial"] == 1.0 and s["s_par_initial"] == 1.0
    assert s["u_par_revise"] == 0 and s["s_par_revise"] == 0


def test_par_stats_revised_series():
    p = short_program(final_par=((52, 8.0), (53, 6.0)))
    s = par_stats(p, {52: 8.0, 53: 8.0})
    assert (s["u_par_final"], s["s_par_final"]) == (1.0, 1.0)
    assert (s["u_par_revise"], s["s_par_revise"]) == (1.0, 1.0)


def test_par_stats_stop_at_cancel():
    p = make_program(start=hm(13), end=hm(14), cancel=hm(13, 30))
    s = par_stats(p, {52: 8.0, 53: 10.0})   # quarters 54, 55 need no rate
    assert s["u_par_initial"] == 1.0


def test_missing_quarter():
    with pytest.raises(MissingQuarter):
        par_stats(short_program(), {52: 8.0})


@given(st.lists(st.integers(0, 200), min_size=2, max_size=2), st.integers(-50, 50))
def test_par_stats_shift_invariant(rates, c):
    p = short_program(par=((52, 8.0), (53, 9.0)), final_par=((52, 7.0),))
    base = par_stats(p, {52: rates[0] / 10, 53: rates[1] / 10})
    shifted = make_program(start=hm(13), end=hm(13, 30), par=((52, 8.0 + c), (53, 9.0 + c)),
                           final_par=((52, 7.0 + c),))
    moved = par_stats(shifted, {52: rates[0] / 10 + c, 53: rates[1] / 10 + c})
    for k in base:
        assert moved[k] == pytest.approx(base[k], abs=1e-9)


@given(st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=1, max_size=60))
def test_std_matches_two_pass_reference(xs):
    m, s = mean_std(xs)
    ref = statistics.pstdev(xs)
    assert s == pytest.approx(ref, rel=1e-12, abs=1e-9)
    assert s >= 0


def test_gate_out_deltas():
    a = make_flight("A", fp_off=hm(14), edct=hm(14, 30), go=hm(14, 30) - 10 - 4, off=hm(14, 30))
    b = make_flight("B", fp_off=hm(14), edct=hm(14, 30), go=hm(14, 30) - 10 + 6, off=hm(14, 30))
    s = time_variation_stats([pair(a, IF), pair(b, IF)])
    assert (s["d_go_if"], s["s_go_if"]) == (1.0, 5.0)


def test_on_time_in_scope_zero():
    a = make_flight("A", fp_off=hm(14), edct=hm(14, 30))
    s = time_variation_stats([pair(a, IF)])
    assert s["d_go_if"] == s["s_go_if"] == s["d_to_if"] == s["d_ete_if"] == 0


def test_no_exempt_flags():
    flags = []
    s = time_variation_stats([pair(make_flight(edct=hm(14, 30)), IF)], flags)
    assert all(s[k] == 0 for k in ("d_go_ex", "s_go_ex", "d_to_ef", "s_to_ef", "d_ete_ef", "s_ete_ef"))
    assert "empty_class:exempt" in flags


def test_exempt_deltas_use_flight_plan():
    f = make_flight(fp_off=hm(14), off=hm(14, 12), go=hm(13, 55), on=hm(15, 20), ete=60)
    s = time_variation_stats([pair(f, EF)])
    assert s["d_go_ex"] == 5 and s["d_to_ef"] == 7 and s["d_ete_ef"] == 8


def test_airport_groups():
    counts = {"EWR": 80, "SFO": 60, "BOS": 12, "ATL": 100}
    assert set(airport_dummies("EWR", counts).values()) == {0.0}
    assert airport_dummies("SFO", counts)["apt_sfo"] == 1.0
    assert airport_dummies("BOS", counts)["apt_others"] == 1.0
    assert airport_dummies("ATL", counts)["apt_others"] == 1.0
    assert airport_dummies("BOS", counts, threshold=10)["apt_bos"] == 1.0


def test_scope_ete():
    p = make_program()
    fs = [make_flight("A", origin="KBOS", ete=60, edct=hm(15)),
          make_flight("B", origin="KORD", ete=120, edct=hm(15)),
          make_flight("C", origin="CYYZ", ete=90, edct=hm(15)),
          make_flight("D", origin="KLAX", ete=300)]
    pairs = [pair(fs[0], IF), pair(fs[1], IF), pair(fs[2], IF), pair(fs[3], EF)]
    assert scope_ete(pairs, p) == (1.5, 1.5)


def test_extract_full_vector():
    p = make_program(start=hm(13), end=hm(14), release=hm(12), cause=Cause.SNOW_ICE, airport="SFO")
    fs = [make_flight("A", dest="SFO", fp_off=hm(11, 30), edct=hm(13), sched_arr=hm(14)),
          make_flight("B", dest="SFO", origin="KLAX", fp_off=hm(12), sched_arr=hm(13, 30))]
    pairs = [pair(fs[0], IF, 60), pair(fs[1], EF)]
    rates = {q: 8.0 for q in range(52, 56)}
    fv = extract(p, pairs, rates, 12.5, annual_mean_rate=10.0, gdp_counts={"SFO": 60})
    v = fv.values
    assert list(v) == list(FEATURE_COLUMNS)
    assert (v["et"], v["gt"], v["ct"], v["cnt_r"]) == (1.0, 1.0, 0.0, 0.0)
    assert (v["cnt_if"], v["cnt_ef"], v["cnt_cf"]) == (1, 1, 0)
    assert v["prehold"] == 0.5 and v["d_arr"] == -2.0 and v["c_snow"] == 1.0
    assert v["apt_sfo"] == 1.0 and fv.outcome == 12.5
    assert sum(v[c] for c in CAUSE_COLUMNS.values()) <= 1
    assert sum(v[c] for c in AIRPORT_COLUMNS) <= 1


def test_features_round_trip():
    vals = {c: float(i) / 3 for i, c in enumerate(FEATURE_COLUMNS)}
    rows = [FeatureVector("K1", "EWR", vals, 1.25), FeatureVector("K2", "SFO", vals, None)]
    back = parse_features(io.StringIO(serialize_features(rows)))
    assert [(r.gdp_key, r.values, r.outcome) for r in back] == [(r.gdp_key, r.values, r.outcome) for r in rows]
    assert np.array(back[0].row()).shape == (41,)
