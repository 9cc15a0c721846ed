"""Flight detection for one GDP and executed GDP delay per restricted flight.

GDP-involved flights (SRTA inside the program window) fall into exactly one
of in-scope, cancel-delay or exempt; every other flight is uninvolved.
"""
from __future__ import annotations

import bisect
import csv
import enum
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import MalformedRow, MissingEdct, SchemaError
from .flightdata import DEFAULT_TAXI_IN_MIN, FlightRecord, srta
from .lifecycle import GdpProgram

CLASSIFIED_COLUMNS = ("flight_id", "gdp_key", "class", "gdp_delay_min", "edct_delay_min")


class FlightClass(enum.Enum):
    IN_SCOPE = "in_scope"
    CANCEL_DELAY = "cancel_delay"
    EXEMPT = "exempt"
    UNINVOLVED = "uninvolved"

    @property
    def restricted(self) -> bool:
        return self in (FlightClass.IN_SCOPE, FlightClass.CANCEL_DELAY)


@dataclass(frozen=True, slots=True)
class ClassifiedFlight:
    flight_id: str
    gdp_key: str
    klass: FlightClass
    gdp_delay_min: int
    edct_delay_min: Optional[int]


def classify(f: FlightRecord, p: GdpProgram, taxi_in_min: int = DEFAULT_TAXI_IN_MIN) -> FlightClass:
    if f.dest != p.airport:
        raise ValueError(f"{f.flight_id} lands at {f.dest}, program {p.gdp_key} is at {p.airport}")
    if f.cancelled:
        return FlightClass.UNINVOLVED
    s = srta(f, taxi_in_min)
    if not p.start <= s < p.planned_end:
        return FlightClass.UNINVOLVED
    scoped = f.origin in p.scope_us or f.origin in p.scope_ca
    if scoped and p.start <= s < p.effective_end and f.actual_wheels_off > p.release_time:
        return FlightClass.IN_SCOPE
    if (scoped and p.cancel_time is not None
            and max(p.start, p.cancel_time) <= s < p.planned_end
            and f.fp_wheels_off < p.cancel_time
            and f.edct_wheels_off is not None):
        return FlightClass.CANCEL_DELAY
    return FlightClass.EXEMPT


def gdp_delay(f: FlightRecord, p: GdpProgram, c: FlightClass, eq3_condition: str = "release") -> int:
    """Executed GDP delay (minutes, clamped at 0) for a restricted flight.

    In-scope flights planned to leave at or after the threshold get the full
    EDCT delay; earlier ones are charged only from the release time.  The
    threshold is the release time by default, ``eq3_condition="start"``
    switches it to the program start.  Cancel-delay flights are charged up to
    the cancellation instant at most.
    """
    if not c.restricted:
        return 0
    if f.edct_wheels_off is None:
        raise MissingEdct(f.flight_id)
    edct_delay = f.edct_wheels_off - f.fp_wheels_off
    if c is FlightClass.IN_SCOPE:
        if eq3_condition == "start":
            threshold = p.start
        elif eq3_condition == "release":
            threshold = p.release_time
        else:
            raise ValueError(f"eq3_condition must be 'release' or 'start', not {eq3_condition!r}")
        if f.fp_wheels_off >= threshold:
            raw = edct_delay
        else:
            raw = f.edct_wheels_off - p.release_time
    else:
        raw = min(edct_delay, p.cancel_time - f.fp_wheels_off)
    return max(0, raw)


def classify_flight(f: FlightRecord, p: GdpProgram, taxi_in_min: int = DEFAULT_TAXI_IN_MIN,
                    eq3_condition: str = "release") -> ClassifiedFlight:
    c = classify(f, p, taxi_in_min)
    edct_delay = None if f.edct_wheels_off is None else f.edct_wheels_off - f.fp_wheels_off
    return ClassifiedFlight(f.flight_id, p.gdp_key, c, gdp_delay(f, p, c, eq3_condition), edct_delay)


def prehold(pairs: Iterable[tuple], p: GdpProgram) -> float:
    """Hours of ground holding in-scope flights accrued before the release."""
    total = 0
    for cf, f in pairs:
        if cf.klass is FlightClass.IN_SCOPE:
            total += max(0, p.release_time - f.fp_wheels_off)
    return total / 60.0


class FlightIndex:
    """Flights grouped by destination and sorted by SRTA for window lookups."""

    def __init__(self, flights: list[FlightRecord], taxi_in_min: int = DEFAULT_TAXI_IN_MIN):
        self.taxi_in_min = taxi_in_min
        self.by_id = {f.flight_id: f for f in flights}
        groups: dict[str, list] = {}
        for f in flights:
            groups.setdefault(f.dest, []).append(f)
        self._flights = {}
        self._srta = {}
        for dest, fs in groups.items():
            fs.sort(key=lambda f: (srta(f, taxi_in_min), f.flight_id))
            self._flights[dest] = fs
            self._srta[dest] = [srta(f, taxi_in_min) for f in fs]

    def arriving(self, airport: str, lo: int, hi: int) -> list[FlightRecord]:
        """Flights into ``airport`` with SRTA in ``[lo, hi)``, in SRTA order."""
        keys = self._srta.get(airport)
        if keys is None:
            return []
        return self._flights[airport][bisect.bisect_left(keys, lo):bisect.bisect_left(keys, hi)]

    def at(self, airport: str) -> list[FlightRecord]:
        return self._flights.get(airport, [])


def classify_program(index: FlightIndex, p: GdpProgram, eq3_condition: str = "release") -> list[tuple]:
    """(ClassifiedFlight, FlightRecord) for every GDP-involved flight of ``p``."""
    out = []
    for f in index.arriving(p.airport, p.start, p.planned_end):
        cf = classify_flight(f, p, index.taxi_in_min, eq3_condition)
        if cf.klass is not FlightClass.UNINVOLVED:
            out.append((cf, f))
    return out


def serialize_classified(rows: Iterable[ClassifiedFlight]) -> str:
    lines = [",".join(CLASSIFIED_COLUMNS)]
    for c in rows:
        edct = "" if c.edct_delay_min is None else str(c.edct_delay_min)
        lines.append(f"{c.flight_id},{c.gdp_key},{c.klass.value},{c.gdp_delay_min},{edct}")
    return "\n".join(lines) + "\n"


def parse_classified(stream) -> list[ClassifiedFlight]:
    fh = stream if hasattr(stream, "read") else open(stream, newline="", encoding="utf-8")
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CLASSIFIED_COLUMNS:
            raise SchemaError(CLASSIFIED_COLUMNS, header or [])
        out = []
        for row in reader:
            line = reader.line_num
            if len(row) != len(CLASSIFIED_COLUMNS):
                raise MalformedRow(line, "*", "wrong cell count")
            try:
                klass = FlightClass(row[2])
            except ValueError:
                raise MalformedRow(line, "class", f"unknown class {row[2]!r}") from None
            try:
                delay = int(row[3])
                edct = None if row[4] == "" else int(row[4])
            except ValueError as exc:
                raise MalformedRow(line, "gdp_delay_min", str(exc)) from None
            out.append(ClassifiedFlight(row[0], row[1], klass, delay, edct))
        return out
    finally:
        if fh is not stream:
            fh.close()
