"""Domain records, time handling and strict CSV ingestion.

All times are integer minutes (UTC) from a per-run epoch at midnight.  The
three input tables are parsed without coercion: anything that does not match
the schema is rejected with the offending line and column.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from datetime import date, datetime
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .errors import DuplicateKey, InvariantViolation, MalformedRow, SchemaError

QUARTER_MIN = 15
DEFAULT_TAXI_IN_MIN = 10

FLIGHT_COLUMNS = (
    "flight_id", "origin", "dest", "sched_gate_arr", "fp_gate_out", "fp_wheels_off",
    "ete_min", "unimpeded_taxi_out_min", "edct_wheels_off", "actual_gate_out",
    "actual_wheels_off", "actual_wheels_on", "actual_gate_in", "cancelled",
)
QUARTER_COLUMNS = ("airport", "quarter_start", "arr_rate")
ADVISORY_COLUMNS = (
    "gdp_key", "airport", "kind", "adl_time", "start", "end", "par_schedule",
    "scope_us", "scope_ca", "cause",
)


class Cause(enum.Enum):
    WIND = "wind"
    SNOW_ICE = "snow_ice"
    LOW_CEILING = "low_ceiling"
    THUNDERSTORMS = "thunderstorms"
    RUNWAY_CONSTRUCTION = "runway_construction"


class EventKind(enum.Enum):
    RELEASE = "release"
    REVISION = "revision"
    CANCEL = "cancel"


# ---------------------------------------------------------------------------
# time handling

def as_epoch(value) -> date:
    """Normalise an epoch given as ``date``, ``datetime`` or ``YYYY-MM-DD``."""
    if isinstance(value, datetime):
        if value.time() != datetime.min.time():
            raise ValueError(f"epoch must be midnight UTC, got {value.isoformat()}")
        return value.date()
    if isinstance(value, date):
        return value
    return date.fromisoformat(str(value).strip()[:10])


@lru_cache(maxsize=4096)
def _day_offset(day_text: str, epoch_ordinal: int) -> int:
    return (date.fromisoformat(day_text).toordinal() - epoch_ordinal) * 1440


@lru_cache(maxsize=4096)
def _day_text(day: int, epoch_ordinal: int) -> str:
    return date.fromordinal(epoch_ordinal + day).isoformat()


def parse_time(text: str, epoch) -> int:
    """``YYYY-MM-DDTHH:MMZ`` -> minutes since ``epoch``."""
    return _parse_minutes(text, as_epoch(epoch).toordinal())


def _parse_minutes(text: str, ordinal: int) -> int:
    if (len(text) != 17 or text[4] != "-" or text[7] != "-" or text[10] != "T"
            or text[13] != ":" or text[16] != "Z"):
        raise ValueError(f"not a YYYY-MM-DDTHH:MMZ timestamp: {text!r}")
    hh, mm = text[11:13], text[14:16]
    if not (hh.isdigit() and mm.isdigit()):
        raise ValueError(f"bad clock time in {text!r}")
    h, m = int(hh), int(mm)
    if h > 23 or m > 59:
        raise ValueError(f"clock time out of range in {text!r}")
    return _day_offset(text[:10], ordinal) + 60 * h + m


def format_time(minutes: int, epoch) -> str:
    return _format_minutes(int(minutes), as_epoch(epoch).toordinal())


def _format_minutes(minutes: int, ordinal: int) -> str:
    day, rem = divmod(minutes, 1440)
    h, m = divmod(rem, 60)
    return f"{_day_text(day, ordinal)}T{h:02d}:{m:02d}Z"


def quarter_index(t: int) -> int:
    return t // QUARTER_MIN


def format_rate(rate: float) -> str:
    rate = float(rate)
    if rate.is_integer():
        return str(int(rate))
    return repr(rate)


# ---------------------------------------------------------------------------
# records

@dataclass(frozen=True, slots=True)
class FlightRecord:
    flight_id: str
    origin: str
    dest: str
    sched_gate_arr: int
    fp_gate_out: int
    fp_wheels_off: int
    ete_min: int
    unimpeded_taxi_out_min: int
    edct_wheels_off: Optional[int]
    actual_gate_out: Optional[int]
    actual_wheels_off: Optional[int]
    actual_wheels_on: Optional[int]
    actual_gate_in: Optional[int]
    cancelled: bool = False

    @property
    def taxi_out_min(self) -> int:
        return self.actual_wheels_off - self.actual_gate_out

    @property
    def airborne_min(self) -> int:
        return self.actual_wheels_on - self.actual_wheels_off


@dataclass(frozen=True, slots=True)
class QuarterHourRecord:
    airport: str
    quarter: int
    arr_rate: float


@dataclass(frozen=True)
class AdvisoryEvent:
    gdp_key: str
    airport: str
    kind: EventKind
    adl_time: int
    start: Optional[int] = None
    end: Optional[int] = None
    par: Optional[tuple] = None  # ((quarter, rate), ...) breakpoints, increasing
    scope_us: Optional[frozenset] = None
    scope_ca: Optional[frozenset] = None
    cause: Optional[Cause] = None


def srta(f: FlightRecord, taxi_in_min: int = DEFAULT_TAXI_IN_MIN) -> int:
    """Scheduled runway time of arrival: scheduled gate arrival less taxi-in."""
    return f.sched_gate_arr - taxi_in_min


def check_flight(f: FlightRecord) -> None:
    if f.ete_min <= 0:
        raise InvariantViolation(f.flight_id, f"ete_min must be > 0, got {f.ete_min}")
    if f.unimpeded_taxi_out_min < 0:
        raise InvariantViolation(f.flight_id, "unimpeded_taxi_out_min must be >= 0")
    times = [f.sched_gate_arr, f.fp_gate_out, f.fp_wheels_off, f.edct_wheels_off,
             f.actual_gate_out, f.actual_wheels_off, f.actual_wheels_on, f.actual_gate_in]
    if any(t is not None and t < 0 for t in times):
        raise InvariantViolation(f.flight_id, "time precedes run epoch")
    if f.cancelled:
        return
    actual = (f.actual_gate_out, f.actual_wheels_off, f.actual_wheels_on, f.actual_gate_in)
    if any(t is None for t in actual):
        raise InvariantViolation(f.flight_id, "non-cancelled flight lacks actual times")
    if not (actual[0] <= actual[1] <= actual[2] <= actual[3]):
        raise InvariantViolation(f.flight_id, "actual times out of order")


# ---------------------------------------------------------------------------
# CSV plumbing

def _open_text(stream):
    if isinstance(stream, (str, Path)):
        return open(stream, newline="", encoding="utf-8")
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(stream.decode("utf-8"), newline="")
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8", newline="")


def _rows(stream, columns):
    fh = _open_text(stream)
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != tuple(columns):
            raise SchemaError(columns, header or [])
        for row in reader:
            yield reader.line_num, row
    finally:
        if fh is not stream:
            fh.close()


_INDEX = {cols: {c: i for i, c in enumerate(cols)}
          for cols in (FLIGHT_COLUMNS, QUARTER_COLUMNS, ADVISORY_COLUMNS)}


class _Row:
    """Field accessor that reports failures as MalformedRow(line, column)."""

    __slots__ = ("line", "cells", "index", "ordinal")

    def __init__(self, line, cells, columns, epoch):
        if len(cells) != len(columns):
            raise MalformedRow(line, "*", f"expected {len(columns)} cells, got {len(cells)}")
        self.line = line
        self.cells = cells
        self.index = _INDEX[columns]
        self.ordinal = epoch.toordinal()

    def raw(self, col):
        return self.cells[self.index[col]]

    def text(self, col, required=True):
        v = self.raw(col)
        if v == "":
            if required:
                raise MalformedRow(self.line, col, "empty")
            return None
        if v != v.strip():
            raise MalformedRow(self.line, col, "surrounding whitespace")
        return v

    def time(self, col, required=True):
        v = self.text(col, required)
        if v is None:
            return None
        try:
            return _parse_minutes(v, self.ordinal)
        except ValueError as exc:
            raise MalformedRow(self.line, col, str(exc)) from None

    def integer(self, col):
        v = self.text(col)
        if not (v.isdigit() or (v[0] == "-" and v[1:].isdigit())):
            raise MalformedRow(self.line, col, f"not an integer: {v!r}")
        return int(v)

    def real(self, col):
        v = self.text(col)
        try:
            x = float(v)
        except ValueError:
            raise MalformedRow(self.line, col, f"not a number: {v!r}") from None
        if not math.isfinite(x):
            raise MalformedRow(self.line, col, f"not finite: {v!r}")
        return x

    def absent(self, col):
        if self.raw(col) != "":
            raise MalformedRow(self.line, col, "must be empty for this row kind")


def _collect(errors, exc):
    if errors is None:
        raise exc
    errors.append(exc)


# ---------------------------------------------------------------------------
# flights.csv

def parse_flights(stream, epoch, errors: Optional[list] = None) -> list[FlightRecord]:
    """Parse ``flights.csv``.

    With ``errors=None`` the first bad row raises.  Passing a list switches to
    collect mode: bad rows are appended there and skipped, so that
    ``rows == len(result) + len(errors)``.
    """
    epoch = as_epoch(epoch)
    out = []
    seen = set()
    for line, cells in _rows(stream, FLIGHT_COLUMNS):
        try:
            r = _Row(line, cells, FLIGHT_COLUMNS, epoch)
            flag = r.text("cancelled")
            if flag not in ("true", "false"):
                raise MalformedRow(line, "cancelled", f"expected true/false, got {flag!r}")
            cancelled = flag == "true"
            f = FlightRecord(
                flight_id=r.text("flight_id"),
                origin=r.text("origin"),
                dest=r.text("dest"),
                sched_gate_arr=r.time("sched_gate_arr"),
                fp_gate_out=r.time("fp_gate_out"),
                fp_wheels_off=r.time("fp_wheels_off"),
                ete_min=r.integer("ete_min"),
                unimpeded_taxi_out_min=r.integer("unimpeded_taxi_out_min"),
                edct_wheels_off=r.time("edct_wheels_off", required=False),
                actual_gate_out=r.time("actual_gate_out", required=not cancelled),
                actual_wheels_off=r.time("actual_wheels_off", required=not cancelled),
                actual_wheels_on=r.time("actual_wheels_on", required=not cancelled),
                actual_gate_in=r.time("actual_gate_in", required=not cancelled),
                cancelled=cancelled,
            )
            check_flight(f)
            if f.flight_id in seen:
                raise DuplicateKey(f.flight_id, line)
        except (MalformedRow, InvariantViolation, DuplicateKey) as exc:
            _collect(errors, exc)
            continue
        seen.add(f.flight_id)
        out.append(f)
    return out


def serialize_flights(flights: Iterable[FlightRecord], epoch) -> str:
    ordinal = as_epoch(epoch).toordinal()

    def t(v):
        return "" if v is None else _format_minutes(v, ordinal)

    lines = [",".join(FLIGHT_COLUMNS)]
    for f in flights:
        lines.append(",".join((
            f.flight_id, f.origin, f.dest, t(f.sched_gate_arr), t(f.fp_gate_out),
            t(f.fp_wheels_off), str(f.ete_min), str(f.unimpeded_taxi_out_min),
            t(f.edct_wheels_off), t(f.actual_gate_out), t(f.actual_wheels_off),
            t(f.actual_wheels_on), t(f.actual_gate_in), "true" if f.cancelled else "false",
        )))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# quarters.csv

def parse_quarters(stream, epoch, errors: Optional[list] = None) -> list[QuarterHourRecord]:
    epoch = as_epoch(epoch)
    out = []
    seen = set()
    for line, cells in _rows(stream, QUARTER_COLUMNS):
        try:
            r = _Row(line, cells, QUARTER_COLUMNS, epoch)
            airport = r.text("airport")
            t = r.time("quarter_start")
            if t % QUARTER_MIN:
                raise MalformedRow(line, "quarter_start", "not aligned to a quarter hour")
            if t < 0:
                raise InvariantViolation(airport, "quarter precedes run epoch")
            rate = r.real("arr_rate")
            if rate < 0:
                raise MalformedRow(line, "arr_rate", "negative rate")
            key = (airport, t // QUARTER_MIN)
            if key in seen:
                raise DuplicateKey(key, line)
        except (MalformedRow, InvariantViolation, DuplicateKey) as exc:
            _collect(errors, exc)
            continue
        seen.add(key)
        out.append(QuarterHourRecord(airport, key[1], rate))
    return out


def serialize_quarters(records: Iterable[QuarterHourRecord], epoch) -> str:
    lines = [",".join(QUARTER_COLUMNS)]
    for q in records:
        lines.append(f"{q.airport},{format_time(q.quarter * QUARTER_MIN, epoch)},{format_rate(q.arr_rate)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# advisories.csv

def load_cause_map(path=None) -> dict[str, Cause]:
    """Free-text cause -> Cause lookup (keys case-folded)."""
    if path is None:
        text = resources.files("gdpx").joinpath("data/causes.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["text", "cause"]:
        raise SchemaError(["text", "cause"], reader.fieldnames or [])
    return {row["text"].strip().casefold(): Cause(row["cause"].strip()) for row in reader}


def _parse_par(r: _Row):
    v = r.text("par_schedule", required=False)
    if v is None:
        return None
    points = []
    for item in v.split(";"):
        stamp, sep, rate = item.partition("=")
        try:
            if not sep:
                raise ValueError(f"expected quarter_start=rate, got {item!r}")
            t = _parse_minutes(stamp, r.ordinal)
            x = float(rate)
        except ValueError as exc:
            raise MalformedRow(r.line, "par_schedule", str(exc)) from None
        if t % QUARTER_MIN:
            raise MalformedRow(r.line, "par_schedule", f"{stamp} not quarter aligned")
        if not math.isfinite(x) or x < 0:
            raise MalformedRow(r.line, "par_schedule", f"bad rate {rate!r}")
        points.append((t // QUARTER_MIN, x))
    if any(b[0] <= a[0] for a, b in zip(points, points[1:])):
        raise MalformedRow(r.line, "par_schedule", "breakpoints not strictly increasing")
    return tuple(points)


def _parse_scope(r: _Row, col):
    v = r.text(col, required=False)
    if v is None:
        return frozenset()
    codes = v.split("|")
    if any(not c or c != c.strip() for c in codes):
        raise MalformedRow(r.line, col, f"bad airport list {v!r}")
    return frozenset(codes)


def parse_advisories(stream, epoch, errors: Optional[list] = None,
                     cause_map: Optional[dict] = None) -> list[AdvisoryEvent]:
    """Parse ``advisories.csv``.

    Output groups events by ``gdp_key`` (first-appearance order) and sorts
    each group by ADL time; equal ADL times within a key are rejected.
    """
    epoch = as_epoch(epoch)
    causes = load_cause_map() if cause_map is None else cause_map
    groups: dict[str, list] = {}
    for line, cells in _rows(stream, ADVISORY_COLUMNS):
        try:
            r = _Row(line, cells, ADVISORY_COLUMNS, epoch)
            key = r.text("gdp_key")
            airport = r.text("airport")
            try:
                kind = EventKind(r.text("kind"))
            except ValueError:
                raise MalformedRow(line, "kind", f"unknown kind {r.raw('kind')!r}") from None
            adl = r.time("adl_time")
            if kind is EventKind.CANCEL:
                for col in ADVISORY_COLUMNS[4:]:
                    r.absent(col)
                ev = AdvisoryEvent(key, airport, kind, adl)
            else:
                cause_text = r.text("cause", required=kind is EventKind.RELEASE)
                cause = None
                if cause_text is not None:
                    cause = causes.get(cause_text.casefold())
                    if cause is None:
                        raise MalformedRow(line, "cause", f"unknown cause {cause_text!r}")
                us, ca = _parse_scope(r, "scope_us"), _parse_scope(r, "scope_ca")
                has_scope = bool(us or ca)
                if kind is EventKind.RELEASE and not has_scope:
                    raise MalformedRow(line, "scope_us", "release carries no scope")
                ev = AdvisoryEvent(
                    key, airport, kind, adl,
                    start=r.time("start", required=kind is EventKind.RELEASE),
                    end=r.time("end", required=kind is EventKind.RELEASE),
                    par=_parse_par(r),
                    scope_us=us if has_scope else None,
                    scope_ca=ca if has_scope else None,
                    cause=cause,
                )
                if kind is EventKind.RELEASE and ev.par is None:
                    raise MalformedRow(line, "par_schedule", "release carries no PAR")
                if ev.start is not None and ev.end is not None and ev.start >= ev.end:
                    raise InvariantViolation(key, "start must precede end")
            group = groups.setdefault(key, [])
            if group and group[0].airport != airport:
                raise InvariantViolation(key, "events disagree on airport")
            if any(e.adl_time == adl for e in group):
                raise InvariantViolation(key, f"two events share ADL time (line {line})")
        except (MalformedRow, InvariantViolation) as exc:
            _collect(errors, exc)
            continue
        group.append(ev)
    out = []
    for group in groups.values():
        out.extend(sorted(group, key=lambda e: e.adl_time))
    return out


def serialize_advisories(events: Iterable[AdvisoryEvent], epoch) -> str:
    ordinal = as_epoch(epoch).toordinal()

    def t(v):
        return "" if v is None else _format_minutes(v, ordinal)

    lines = [",".join(ADVISORY_COLUMNS)]
    for e in events:
        par = "" if e.par is None else ";".join(
            f"{_format_minutes(q * QUARTER_MIN, ordinal)}={format_rate(x)}" for q, x in e.par)
        us = "" if e.scope_us is None else "|".join(sorted(e.scope_us))
        ca = "" if e.scope_ca is None else "|".join(sorted(e.scope_ca))
        cause = "" if e.cause is None else e.cause.value
        lines.append(",".join((e.gdp_key, e.airport, e.kind.value, t(e.adl_time), t(e.start),
                               t(e.end), par, us, ca, cause)))
    return "\n".join(lines) + "\n"


def infer_epoch(*paths) -> date:
    """Midnight UTC of the earliest date stamp found in the given CSV files."""
    earliest = None
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            next(fh, None)
            for line in fh:
                for cell in line.split(","):
                    if len(cell) >= 17 and cell[10:11] == "T":
                        d = cell[:10]
                        if earliest is None or d < earliest:
                            earliest = d
    if earliest is None:
        raise ValueError("no timestamps found to infer an epoch from")
    return date.fromisoformat(earliest)

