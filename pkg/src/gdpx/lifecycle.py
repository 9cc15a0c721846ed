"""Reconstruct GDP programs from their release / revision / cancel advisories."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Optional

from .errors import InvariantViolation, OrphanEvent, OutOfWindow, OverlapError
from .flightdata import AdvisoryEvent, Cause, EventKind, format_time, quarter_index


@dataclass(frozen=True)
class GdpProgram:
    gdp_key: str
    airport: str
    release_time: int
    revisions: tuple
    cancel_time: Optional[int]
    start: int
    planned_end: int
    initial_par: tuple  # ((quarter, rate), ...) step breakpoints
    final_par: tuple
    scope_us: frozenset
    scope_ca: frozenset
    cause: Cause

    @property
    def cancelled(self) -> bool:
        return self.cancel_time is not None

    @property
    def effective_end(self) -> int:
        """End of the in-scope window: planned end, or cancellation if earlier."""
        if self.cancel_time is None:
            return self.planned_end
        return min(self.planned_end, self.cancel_time)

    @property
    def scope(self) -> frozenset:
        return self.scope_us | self.scope_ca

    def quarters(self, end: Optional[int] = None) -> range:
        """Quarter indices touched by ``[start, end)`` (default planned end)."""
        end = self.planned_end if end is None else end
        if end <= self.start:
            return range(quarter_index(self.start), quarter_index(self.start))
        return range(quarter_index(self.start), quarter_index(end - 1) + 1)

    @property
    def cnt_r(self) -> int:
        return len(self.revisions)


@dataclass(frozen=True)
class LifecycleTimes:
    et_hr: float
    gt_hr: float
    ct_hr: float
    cnt_r: int


def _merge_par(old: tuple, new: tuple) -> tuple:
    # a revised schedule takes effect from its first breakpoint onward
    first = new[0][0]
    return tuple(p for p in old if p[0] < first) + tuple(new)


def _build(key: str, events: list) -> GdpProgram:
    rel = events[0]
    if rel.kind is not EventKind.RELEASE:
        raise OrphanEvent(key)
    if rel.start is None or rel.end is None or not rel.par or rel.cause is None:
        raise InvariantViolation(key, "release must carry start, end, PAR and cause")
    if rel.scope_us is None and rel.scope_ca is None:
        raise InvariantViolation(key, "release must carry a scope")
    start, end = rel.start, rel.end
    par = tuple(rel.par)
    us, ca = rel.scope_us or frozenset(), rel.scope_ca or frozenset()
    cause = rel.cause
    revisions = []
    cancel = None
    for ev in events[1:]:
        if cancel is not None:
            raise InvariantViolation(key, "event after cancellation")
        if ev.kind is EventKind.RELEASE:
            raise InvariantViolation(key, "second release for one program")
        if ev.kind is EventKind.CANCEL:
            cancel = ev.adl_time
            continue
        revisions.append(ev)
        if ev.start is not None:
            start = ev.start
        if ev.end is not None:
            end = ev.end
        if ev.par:
            par = _merge_par(par, ev.par)
        if ev.scope_us is not None or ev.scope_ca is not None:
            us, ca = ev.scope_us or frozenset(), ev.scope_ca or frozenset()
        if ev.cause is not None:
            cause = ev.cause
    p = GdpProgram(key, rel.airport, rel.adl_time, tuple(revisions), cancel, start, end,
                   tuple(rel.par), par, us, ca, cause)
    check_program(p)
    return p


def check_program(p: GdpProgram) -> None:
    if not p.release_time <= p.start < p.planned_end:
        raise InvariantViolation(p.gdp_key, "need release_time <= start < planned_end")
    if p.cancel_time is not None and not p.release_time <= p.cancel_time <= p.planned_end:
        raise InvariantViolation(p.gdp_key, "cancel time outside [release, planned_end]")
    q0 = quarter_index(p.start)
    for series in (p.initial_par, p.final_par):
        if not series or series[0][0] > q0:
            raise InvariantViolation(p.gdp_key, "PAR schedule does not cover GDP start")


def assemble_programs(events: list[AdvisoryEvent]) -> list[GdpProgram]:
    """Merge advisory events into one program per ``gdp_key``.

    Events are re-sorted by ADL time within each key, so the result does not
    depend on input order.  Programs come back sorted by (airport, start, key);
    overlapping windows at one airport raise :class:`OverlapError`.
    """
    groups: dict[str, list] = {}
    for ev in events:
        groups.setdefault(ev.gdp_key, []).append(ev)
    programs = []
    for key, evs in groups.items():
        evs = sorted(evs, key=lambda e: (e.adl_time, e.kind is not EventKind.RELEASE))
        if len({e.airport for e in evs}) != 1:
            raise InvariantViolation(key, "events disagree on airport")
        programs.append(_build(key, evs))
    programs.sort(key=lambda p: (p.airport, p.start, p.gdp_key))
    for a, b in zip(programs, programs[1:]):
        if a.airport == b.airport and b.start < a.planned_end:
            raise OverlapError(a.airport, a.gdp_key, b.gdp_key)
    return programs


def program_times(p: GdpProgram) -> LifecycleTimes:
    ct = 0.0
    if p.cancel_time is not None and p.cancel_time < p.planned_end:
        ct = (p.planned_end - p.cancel_time) / 60.0
    return LifecycleTimes(
        et_hr=(p.planned_end - p.start) / 60.0,
        gt_hr=(p.start - p.release_time) / 60.0,
        ct_hr=ct,
        cnt_r=p.cnt_r,
    )


def par_at(p: GdpProgram, q: int, which: str = "final") -> float:
    """Program rate (flights per quarter) in force during quarter ``q``."""
    if q not in p.quarters():
        raise OutOfWindow(q)
    return par_series(p, which, [q])[0]


def par_series(p: GdpProgram, which: str, quarters) -> list[float]:
    if which not in ("initial", "final"):
        raise ValueError(f"which must be 'initial' or 'final', not {which!r}")
    series = p.initial_par if which == "initial" else p.final_par
    breaks = [b[0] for b in series]
    return [series[bisect.bisect_right(breaks, q) - 1][1] for q in quarters]


def program_to_dict(p: GdpProgram, epoch) -> dict:
    t = lambda v: None if v is None else format_time(v, epoch)  # noqa: E731
    times = program_times(p)
    return {
        "gdp_key": p.gdp_key,
        "airport": p.airport,
        "release_time": t(p.release_time),
        "start": t(p.start),
        "planned_end": t(p.planned_end),
        "cancel_time": t(p.cancel_time),
        "revision_times": [t(r.adl_time) for r in p.revisions],
        "initial_par": [[t(q * 15), r] for q, r in p.initial_par],
        "final_par": [[t(q * 15), r] for q, r in p.final_par],
        "scope_us": sorted(p.scope_us),
        "scope_ca": sorted(p.scope_ca),
        "cause": p.cause.value,
        "et_hr": times.et_hr,
        "gt_hr": times.gt_hr,
        "ct_hr": times.ct_hr,
        "cnt_r": times.cnt_r,
    }
