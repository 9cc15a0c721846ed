"""Deterministic queueing diagram for the no-GDP counterfactual.

Three cumulative quarter-hour curves are built for one airport:

* ``A``       actual wheels-on counts,
* ``P_model`` model planned wheels-on (actual wheels-on less the GDP delay),
* ``A_model`` model served arrivals: per quarter, the minimum of the capacity
  and the backlog plus new model demand, first come first served.

Capacity is given as flights per quarter hour and may be fractional.  Rates
are resolved to 1e-6 flights; the fractional remainder carries from quarter to
quarter while whole slots left unused in a quarter are lost.  The number of
slots in quarter ``q`` is therefore ``floor(C(q)) - floor(C(q-1))`` with ``C``
the running rate sum from the anchor quarter, whatever the demand.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import GdpxError, InvariantViolation, NoRestrictedFlights, UnderdefinedCapacity
from .flightdata import QUARTER_MIN, FlightRecord

CAPACITY_SCALE = 1_000_000
MAX_DRAIN_QUARTERS = 96 * 14


class QueueDoesNotDrain(GdpxError):
    def __init__(self, quarter, backlog):
        self.quarter = quarter
        self.backlog = backlog
        super().__init__(f"backlog of {backlog} flights still queued at quarter {quarter}")


def model_wheels_on(f: FlightRecord, gdp_delay_min: int) -> int:
    """Wheels-on had the flight left the gate ``gdp_delay_min`` earlier.

    Actual taxi-out and airborne durations are kept as observed, so this
    telescopes to ``actual_wheels_on - gdp_delay_min``.
    """
    gate_out = f.actual_gate_out - gdp_delay_min
    return gate_out + f.taxi_out_min + f.airborne_min


@dataclass(frozen=True)
class QueueingDiagram:
    airport: str
    q0: int
    A: np.ndarray
    P_model: np.ndarray
    A_model: np.ndarray
    capacity: np.ndarray  # rate applied per quarter, flights / quarter
    default_used: bool = False
    gdp_window: Optional[tuple] = field(default=None, compare=False)

    @property
    def quarters(self) -> range:
        return range(self.q0, self.q0 + len(self.A))

    @property
    def n_flights(self) -> int:
        return int(self.A[-1]) if len(self.A) else 0


@dataclass(frozen=True)
class ExcessDelayResult:
    excess_delay_min: float
    excess_per_rf_min: Optional[float]
    airborne_increase_min: float
    rf_count: int


def _micro(rate: float) -> int:
    return int(round(float(rate) * CAPACITY_SCALE))


def build_diagram(flights, capacity: Mapping[int, float], horizon: Optional[range] = None,
                  default_rate: Optional[float] = None, airport: str = "",
                  anchor: Optional[int] = None, floor_observed: bool = False) -> QueueingDiagram:
    """Queueing diagram for ``flights``, a sequence of (FlightRecord, gdp_delay_min)."""
    actual = np.fromiter((f.actual_wheels_on for f, _ in flights), dtype=np.int64, count=len(flights))
    model = np.fromiter((model_wheels_on(f, d) for f, d in flights), dtype=np.int64, count=len(flights))
    return diagram_from_times(actual, model, capacity, horizon=horizon, default_rate=default_rate,
                              airport=airport, anchor=anchor, floor_observed=floor_observed)


def diagram_from_times(actual_on, model_on, capacity: Mapping[int, float],
                       horizon: Optional[range] = None, default_rate: Optional[float] = None,
                       airport: str = "", anchor: Optional[int] = None,
                       floor_observed: bool = False) -> QueueingDiagram:
    """Array form of :func:`build_diagram` (minutes since epoch per flight).

    ``horizon`` fixes the first quarter and a minimum extent; it is extended
    past its end until the queue drains.  ``anchor`` is the quarter where
    fractional capacity starts accumulating (default: first horizon quarter).
    With ``floor_observed`` a quarter's capacity is raised to the number of
    actual arrivals observed in it.
    """
    actual_on = np.asarray(actual_on, dtype=np.int64)
    model_on = np.asarray(model_on, dtype=np.int64)
    if actual_on.shape != model_on.shape:
        raise ValueError("actual and model arrays differ in length")
    qa = actual_on // QUARTER_MIN
    qm = model_on // QUARTER_MIN
    if len(qa):
        lo = int(min(qa.min(), qm.min()))
        hi = int(max(qa.max(), qm.max()))
    else:
        lo = hi = None
    if horizon is not None:
        if lo is not None and (lo < horizon.start or hi >= horizon.stop):
            raise ValueError("horizon does not cover every actual and model wheels-on quarter")
        lo, hi = horizon.start, max(horizon.stop - 1, horizon.start if hi is None else hi)
    if lo is None:
        empty = np.zeros(0, dtype=np.int64)
        return QueueingDiagram(airport, 0, empty, empty, empty, np.zeros(0))
    anchor = lo if anchor is None else anchor
    if anchor > lo:
        raise ValueError("anchor quarter must not follow the first horizon quarter")

    n = hi - lo + 1
    new_actual = np.bincount(qa - lo, minlength=n)
    new_model = np.bincount(qm - lo, minlength=n)
    default_used = False

    def rate_at(q):
        nonlocal default_used
        r = capacity.get(q)
        if r is None:
            if default_rate is None:
                raise UnderdefinedCapacity(q)
            default_used = True
            r = default_rate
        return r

    credit = 0
    for q in range(anchor, lo):
        credit = (credit + _micro(rate_at(q))) % CAPACITY_SCALE

    served = []
    rates = []
    backlog = 0
    q = lo
    while q <= hi or backlog:
        i = q - lo
        if i > n + MAX_DRAIN_QUARTERS:
            raise QueueDoesNotDrain(q, backlog)
        r = rate_at(q)
        if floor_observed and i < n and new_actual[i] > r:
            r = float(new_actual[i])
        rates.append(r)
        credit += _micro(r)
        slots, credit = divmod(credit, CAPACITY_SCALE)
        demand = backlog + (int(new_model[i]) if i < n else 0)
        s = min(slots, demand)
        served.append(s)
        backlog = demand - s
        q += 1

    m = len(served)
    pad = m - n
    A = np.cumsum(np.concatenate([new_actual, np.zeros(pad, dtype=np.int64)]))
    P = np.cumsum(np.concatenate([new_model, np.zeros(pad, dtype=np.int64)]))
    A_model = np.cumsum(np.asarray(served, dtype=np.int64))
    return QueueingDiagram(airport, lo, A.astype(np.int64), P.astype(np.int64), A_model,
                           np.asarray(rates, dtype=float), default_used)


def check_diagram(d: QueueingDiagram) -> None:
    if not len(d.A):
        return
    for name in ("A", "P_model", "A_model"):
        curve = getattr(d, name)
        if np.any(np.diff(curve) < 0):
            raise InvariantViolation(d.airport, f"{name} is not non-decreasing")
    if not d.A[-1] == d.P_model[-1] == d.A_model[-1]:
        raise InvariantViolation(d.airport, "curves end at different totals")
    if np.any(d.A_model > d.P_model):
        raise InvariantViolation(d.airport, "model service precedes model demand")
    if np.any(d.A_model < d.A):
        raise InvariantViolation(d.airport, "counterfactual arrivals lag actual arrivals")


def excess_delay(d: QueueingDiagram, rf_count: int) -> ExcessDelayResult:
    """Areas between the curves, each quarter weighted by 15 minutes.

    Raises :class:`NoRestrictedFlights` (carrying the totals) when
    ``rf_count`` is zero.
    """
    check_diagram(d)
    excess = float(QUARTER_MIN * np.sum(d.A_model - d.A))
    airborne = float(QUARTER_MIN * np.sum(d.P_model - d.A_model))
    if rf_count <= 0:
        raise NoRestrictedFlights(ExcessDelayResult(excess, None, airborne, 0))
    return ExcessDelayResult(excess, excess / rf_count, airborne, rf_count)


# ---------------------------------------------------------------------------
# study selection

def study_window(start: int, planned_end: int) -> tuple:
    """Whole UTC days (minutes since epoch) spanning ``[start, planned_end)``."""
    lo = (start // 1440) * 1440
    hi = ((planned_end - 1) // 1440 + 1) * 1440
    return lo, hi


class ArrivalIndex:
    """Non-cancelled arrivals per airport, sorted by actual wheels-on."""

    def __init__(self, flights):
        groups: dict[str, list] = {}
        for f in flights:
            if not f.cancelled:
                groups.setdefault(f.dest, []).append(f)
        self._flights = {}
        self._on = {}
        for dest, fs in groups.items():
            fs.sort(key=lambda f: (f.actual_wheels_on, f.flight_id))
            self._flights[dest] = fs
            self._on[dest] = [f.actual_wheels_on for f in fs]

    def landing(self, airport: str, lo: int, hi: int) -> list[FlightRecord]:
        keys = self._on.get(airport)
        if keys is None:
            return []
        return self._flights[airport][bisect.bisect_left(keys, lo):bisect.bisect_left(keys, hi)]
