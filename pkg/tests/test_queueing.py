import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdpx.errors import InvariantViolation, NoRestrictedFlights, UnderdefinedCapacity
from gdpx.queueing import (
    ArrivalIndex, QueueDoesNotDrain, QueueingDiagram, build_diagram, check_diagram, diagram_from_times,
    excess_delay, model_wheels_on, study_window,
)
from gdpx.synth import oracle_queue

from conftest import hm, make_flight


def cum(xs):
    return np.asarray(xs, dtype=np.int64)


def diagram(A, P, Am, q0=0):
    return QueueingDiagram("EWR", q0, cum(A), cum(P), cum(Am), np.ones(len(A)))


def test_model_wheels_on_examples():
    f = make_flight(fp_off=hm(16), ete=110, on=hm(18))
    assert model_wheels_on(f, 0) == hm(18)
    assert model_wheels_on(f, 45) == hm(17, 15)


def test_three_flights_capacity_two():
    d = diagram_from_times([0, 1, 2], [0, 1, 2], {0: 2, 1: 2, 2: 2})
    assert d.A_model.tolist() == [2, 3]
    assert d.P_model.tolist() == [3, 3]


def test_uncongested_equals_planned():
    model = [0, 20, 40, 41, 95]
    d = diagram_from_times(model, model, {q: 5 for q in range(10)})
    assert d.A_model.tolist() == d.P_model.tolist() == d.A.tolist()


def test_excess_examples():
    r = excess_delay(diagram([0, 2, 3], [2, 3, 3], [2, 3, 3]), rf_count=3)
    assert r.excess_delay_min == 45 and r.excess_per_rf_min == 15
    r = excess_delay(diagram([1, 2, 3], [3, 3, 3], [1, 2, 3]), rf_count=1)
    assert r.airborne_increase_min == 45 and r.excess_delay_min == 0


def test_no_restricted_flights_carries_total():
    with pytest.raises(NoRestrictedFlights) as exc:
        excess_delay(diagram([0, 2, 3], [2, 3, 3], [2, 3, 3]), rf_count=0)
    assert exc.value.result.excess_delay_min == 45


def test_check_diagram_rejects_lagging_counterfactual():
    with pytest.raises(InvariantViolation):
        check_diagram(diagram([2, 3, 3], [2, 3, 3], [1, 3, 3]))


def test_build_diagram_from_records():
    fs = [(make_flight("A", fp_off=hm(10), edct=hm(10, 45)), 45), (make_flight("B", fp_off=hm(10)), 0)]
    d = build_diagram(fs, {q: 4 for q in range(40, 50)})
    assert d.q0 == hm(11) // 15 and d.A_model[-1] == 2
    assert excess_delay(d, 1).excess_delay_min == 45


def test_fractional_capacity_carries():
    # 0.5 per quarter: one slot every second quarter
    d = diagram_from_times([0] * 3, [0] * 3, {}, default_rate=0.5, horizon=range(0, 1))
    served = np.diff(np.concatenate([[0], d.A_model]))
    assert served.tolist() == [0, 1, 0, 1, 0, 1]


def test_underdefined_capacity():
    with pytest.raises(UnderdefinedCapacity):
        diagram_from_times([0, 15], [0, 15], {0: 1})


def test_queue_does_not_drain():
    with pytest.raises(QueueDoesNotDrain):
        diagram_from_times([0], [0], {}, default_rate=0.0)


def test_empty():
    d = diagram_from_times([], [], {})
    assert len(d.A) == 0 and excess_delay(d, 1).excess_delay_min == 0


def test_study_window_whole_days():
    assert study_window(hm(13), hm(19)) == (0, 1440)
    assert study_window(hm(20), 1440 + hm(2)) == (0, 2880)
    assert study_window(1440, 1440 + 60) == (1440, 2880)


def test_arrival_index_skips_cancelled():
    idx = ArrivalIndex([make_flight("A"), make_flight("B", cancelled=True)])
    assert [f.flight_id for f in idx.landing("EWR", 0, 1440)] == ["A"]


rates = st.one_of(st.integers(0, 10).map(float), st.integers(0, 100).map(lambda x: x / 10))


@st.composite
def instances(draw):
    n = draw(st.integers(1, 50))
    span = draw(st.integers(1, 96))
    actual = draw(st.lists(st.integers(0, 15 * span - 1), min_size=n, max_size=n))
    delay = draw(st.lists(st.integers(0, 240), min_size=n, max_size=n))
    model = [max(0, a - d) for a, d in zip(actual, delay)]
    cap = {q: draw(rates) for q in range(span)}
    return actual, model, cap


def oracle_counts(model, cap, default, q0, m):
    served = oracle_queue({f"f{i:02d}": t for i, t in enumerate(model)}, cap, default_rate=default, anchor=0)
    qs = np.array([served[f"f{i:02d}"] // 15 for i in range(len(model))]) - q0
    assert qs.max() < m
    return served, np.cumsum(np.bincount(qs, minlength=m))


@settings(max_examples=200, deadline=None)
@given(instances())
def test_matches_reference_queue(inst):
    actual, model, cap = inst
    d = diagram_from_times(actual, model, cap, default_rate=1.0, anchor=0)
    served, counts = oracle_counts(model, cap, 1.0, d.q0, len(d.A_model))
    assert d.A_model.tolist() == counts.tolist()
    assert d.A[-1] == d.P_model[-1] == d.A_model[-1] == len(actual)
    assert np.all(d.A_model <= d.P_model)


@settings(max_examples=100, deadline=None)
@given(instances())
def test_floor_observed_keeps_counterfactual_ahead(inst):
    actual, model, cap = inst
    d = diagram_from_times(actual, model, cap, default_rate=1.0, anchor=0, floor_observed=True)
    check_diagram(d)
    assert excess_delay(d, 1).excess_delay_min >= 0


@settings(max_examples=100, deadline=None)
@given(instances(), st.data())
def test_more_delay_never_less_excess(inst, data):
    actual, model, cap = inst
    i = data.draw(st.integers(0, len(actual) - 1))
    extra = data.draw(st.integers(1, 120))
    bumped = list(model)
    bumped[i] = max(0, bumped[i] - extra)

    base = diagram_from_times(actual, model, cap, default_rate=1.0, anchor=0)
    other = diagram_from_times(actual, bumped, cap, default_rate=1.0, anchor=0)
    # compare on a common quarter grid
    lo = min(base.q0, other.q0)
    hi = max(base.q0 + len(base.A), other.q0 + len(other.A))

    def area(d):
        pad_l = d.q0 - lo
        am = np.concatenate([np.zeros(pad_l, int), d.A_model, np.full(hi - d.q0 - len(d.A), d.A_model[-1])])
        a = np.concatenate([np.zeros(pad_l, int), d.A, np.full(hi - d.q0 - len(d.A), d.A[-1])])
        return int(np.sum(am - a))

    assert area(other) >= area(base)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 600), min_size=1, max_size=40))
def test_zero_delay_counterfactual_is_actual(actual):
    d = diagram_from_times(actual, actual, {}, default_rate=0.3, anchor=0, floor_observed=True)
    assert d.A_model.tolist() == d.A.tolist() == d.P_model.tolist()
