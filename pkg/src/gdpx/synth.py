"""Synthetic GDP scenarios with planted ground truth.

The generator draws arrival schedules per airport-day, issues GDPs whose
EDCTs come from ration-by-schedule slot assignment, and derives actual times
from the controlled departures plus optional noise.  The ground truth uses
:func:`oracle_queue`, a per-flight first-come-first-served reference that
shares no code with the aggregated recursion in :mod:`gdpx.queueing`.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .errors import ConfigError
from .flightdata import (
    QUARTER_MIN, AdvisoryEvent, Cause, EventKind, FlightRecord, QuarterHourRecord,
    as_epoch, format_time, serialize_advisories, serialize_flights, serialize_quarters,
)
from .queueing import MAX_DRAIN_QUARTERS, study_window

SCHEMA_VERSION = 1

TABLE_AIRPORTS = ("EWR", "SFO", "LGA", "ORD", "BOS", "JFK", "PHL", "SEA")
OTHER_AIRPORTS = ("ATL", "DFW", "DEN", "LAX", "IAH", "CLT", "MIA", "DCA", "MSP", "DTW",
                  "LAS", "PHX", "MCO", "SLC", "IAD", "BWI", "MDW", "SAN", "TPA", "PDX")
CA_ORIGINS = ("CYYZ", "CYUL", "CYVR", "CYYC", "CYEG", "CYOW", "CYWG", "CYHZ")


# ---------------------------------------------------------------------------
# reference FCFS queue

def _exact_rate(rate) -> Fraction:
    return Fraction(repr(float(rate)))


def oracle_queue(planned: Mapping[str, int], capacity: Mapping[int, float],
                 default_rate: Optional[float] = None, anchor: Optional[int] = None) -> dict:
    """Served (wheels-on) minute per flight id under FCFS with quarter capacity.

    Quarter ``q`` offers ``floor(C(q)) - floor(C(q-1))`` slots, ``C`` being the
    exact running sum of rates from ``anchor``.  Flights are taken in
    (planned time, id) order; each lands in the first quarter at or after its
    planned quarter that still has a slot, and never before its planned time.
    """
    if not planned:
        return {}
    order = sorted(planned, key=lambda k: (planned[k], k))
    first = min(planned.values()) // QUARTER_MIN
    anchor = first if anchor is None else anchor
    if anchor > first:
        raise ValueError("anchor must not follow the earliest planned quarter")

    cum = [Fraction(0)]  # cum[i] = C(anchor + i - 1)

    def slots(q):
        i = q - anchor
        while len(cum) <= i + 1:
            qq = anchor + len(cum) - 1
            r = capacity.get(qq, default_rate)
            if r is None:
                raise KeyError(f"no capacity for quarter {qq}")
            cum.append(cum[-1] + _exact_rate(r))
        return math.floor(cum[i + 1]) - math.floor(cum[i])

    left: dict[int, int] = {}
    skip: dict[int, int] = {}

    def find(q):
        path = []
        while True:
            if q in skip:
                path.append(q)
                q = skip[q]
                continue
            if q not in left:
                left[q] = slots(q)
            if left[q] > 0:
                break
            skip[q] = q + 1
            path.append(q)
            q += 1
            if q - first > len(planned) + MAX_DRAIN_QUARTERS + 96:
                raise RuntimeError("queue does not drain")
        for p in path:
            skip[p] = q
        return q

    served = {}
    for fid in order:
        t = planned[fid]
        q = find(t // QUARTER_MIN)
        left[q] -= 1
        served[fid] = max(t, q * QUARTER_MIN)
    return served


# ---------------------------------------------------------------------------
# ration by schedule

def slot_starts(par: Mapping[int, float], start: int, end: int, tail_rate: float, count: int) -> list:
    """Start minute of the first ``count`` arrival slots from ``start``.

    Slot ``m`` opens when cumulative program rate since ``start`` reaches
    ``m``; quarters from ``end`` on use ``tail_rate``.  ``par`` maps
    breakpoint quarters to rates, each holding until the next breakpoint.
    """
    if start % QUARTER_MIN:
        raise ConfigError("GDP start must be quarter-hour aligned")
    breaks = sorted(par)
    if not breaks or breaks[0] > start // QUARTER_MIN:
        raise ConfigError("PAR does not cover the GDP start")

    def rate(q):
        return par[breaks[bisect.bisect_right(breaks, q) - 1]]

    out = []
    cum = Fraction(0)
    q = start // QUARTER_MIN
    end_q = -(-end // QUARTER_MIN)
    idle = 0
    while len(out) < count:
        r = _exact_rate(rate(q) if q < end_q else tail_rate)
        m = math.ceil(cum)
        while m < cum + r and len(out) < count:
            out.append(q * QUARTER_MIN + math.floor(QUARTER_MIN * (m - cum) / r))
            m += 1
        idle = idle + 1 if r == 0 else 0
        if idle > MAX_DRAIN_QUARTERS:
            raise ConfigError("zero program rate leaves slots unreachable")
        cum += r
        q += 1
    return out


def rbs_assign(srtas: list, ete_min: list, par: Mapping[int, float], start: int, end: int,
               exempt: Optional[list] = None, tail_rate: Optional[float] = None) -> list:
    """Ration-by-schedule slot assignment.

    ``srtas`` must be sorted.  Exempt flights keep their SRTA and occupy the
    slot it falls in; the others take, in SRTA order, the earliest free slot
    that has not closed before their SRTA, with CTA = max(SRTA, slot start).
    Returns (CTA, CTD) per flight, CTD = CTA - ETE.
    """
    n = len(srtas)
    if any(b < a for a, b in zip(srtas, srtas[1:])):
        raise ValueError("srtas must be sorted")
    exempt = [False] * n if exempt is None else list(exempt)
    if tail_rate is None:
        tail_rate = par[max(q for q in par if q * QUARTER_MIN < end)]
    need = 2 * n + 2
    starts = slot_starts(par, start, end, tail_rate, need)

    def grow():
        starts[:] = slot_starts(par, start, end, tail_rate, 2 * len(starts))

    taken = set()
    for s, ex in zip(srtas, exempt):
        if ex:
            m = bisect.bisect_right(starts, s) - 1
            if m >= 0:
                taken.add(m)
    cta = list(srtas)
    last = -1
    for i, s in enumerate(srtas):
        if exempt[i]:
            continue
        m = max(bisect.bisect_right(starts, s) - 1, last + 1, 0)
        while True:
            while m + 1 >= len(starts):
                grow()
            if m not in taken and starts[m + 1] > s:
                break
            m += 1
        taken.add(m)
        last = m
        cta[i] = max(s, starts[m])
    return [(a, a - e) for a, e in zip(cta, ete_min)]


# ---------------------------------------------------------------------------
# scenario generation

@dataclass
class ScenarioConfig:
    seed: int = 7
    start_date: str = "2019-07-01"
    n_days: int = 7
    n_airports: int = 4
    flights_per_day: float = 270.0      # per airport, mean of a Poisson draw
    nominal_rate: float = 6.0           # ARR RATE outside GDPs, flights / quarter
    n_gdps: int = 10
    gdp_hours: tuple = (3.0, 7.0)
    gap_hours: tuple = (0.5, 2.5)       # release lead before start
    capacity_drop: tuple = (0.45, 0.7)  # ARR RATE factor while a GDP runs
    par_ratio: tuple = (0.8, 1.05)      # PAR / ARR RATE
    revision_prob: float = 0.4
    max_revisions: int = 3
    cancel_prob: float = 0.25
    scope_fraction: float = 0.7
    airline_cancel_prob: float = 0.0
    n_us_origins: int = 40
    n_ca_origins: int = 5
    taxi_in_min: int = 10
    # flight-time deviations: (mean, sd) in minutes, truncated at 3 sd
    gate_out_if: tuple = (0.0, 0.0)
    gate_out_ef: tuple = (0.0, 0.0)
    taxi_out: tuple = (0.0, 0.0)
    enroute: tuple = (0.0, 0.0)
    gdp_airport_skew: float = 1.0       # Zipf exponent over airports for GDP counts
    with_truth: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        bad = set(d) - known
        if bad:
            raise ConfigError(f"unknown scenario keys: {sorted(bad)}")
        d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**d)

    def validate(self):
        if self.n_days < 1 or self.n_airports < 1:
            raise ConfigError("need at least one day and one airport")
        if self.n_airports > len(TABLE_AIRPORTS) + len(OTHER_AIRPORTS):
            raise ConfigError("too many airports")
        if self.n_gdps > self.n_days * self.n_airports:
            raise ConfigError("at most one GDP per airport-day")
        lo, hi = self.gdp_hours
        if not 0 < lo <= hi <= 10:
            raise ConfigError("gdp_hours must lie in (0, 10]")
        if not 0 <= self.gap_hours[0] <= self.gap_hours[1] <= 6:
            raise ConfigError("gap_hours must lie in [0, 6]")
        if self.nominal_rate <= 0 or min(self.capacity_drop) <= 0 or min(self.par_ratio) <= 0:
            raise ConfigError("rates must be positive")
        if not 0 < self.n_ca_origins + self.n_us_origins:
            raise ConfigError("need origins")


@dataclass
class GroundTruth:
    flights: dict = field(default_factory=dict)   # flight_id -> {gdp_key, class, planted_delay_min, counterfactual_wheels_on}
    gdps: dict = field(default_factory=dict)      # gdp_key -> totals

    def to_json(self, epoch) -> str:
        flights = {}
        for fid in sorted(self.flights):
            rec = dict(self.flights[fid])
            if rec.get("counterfactual_wheels_on") is not None:
                rec["counterfactual_wheels_on"] = format_time(rec["counterfactual_wheels_on"], epoch)
            flights[fid] = rec
        doc = {"schema_version": SCHEMA_VERSION, "gdps": {k: self.gdps[k] for k in sorted(self.gdps)},
               "flights": flights}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


@dataclass
class Scenario:
    config: ScenarioConfig
    epoch: object
    flights: list
    quarters: list
    events: list
    truth: GroundTruth

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "flights": out / "flights.csv",
            "quarters": out / "quarters.csv",
            "advisories": out / "advisories.csv",
            "ground_truth": out / "ground_truth.json",
        }
        paths["flights"].write_text(serialize_flights(self.flights, self.epoch), encoding="utf-8")
        paths["quarters"].write_text(serialize_quarters(self.quarters, self.epoch), encoding="utf-8")
        paths["advisories"].write_text(serialize_advisories(self.events, self.epoch), encoding="utf-8")
        paths["ground_truth"].write_text(self.truth.to_json(self.epoch), encoding="utf-8")
        (out / "scenario_config.json").write_text(
            json.dumps(asdict(self.config), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return paths


def _trunc_normal(rng, mean, sd, size):
    if sd <= 0:
        return np.full(size, float(mean))
    z = rng.standard_normal(size)
    return mean + sd * np.clip(z, -3.0, 3.0)


def _round_rate(x):
    return round(float(x), 1)


def _origins(cfg, rng):
    us = [f"K{chr(65 + i // 26)}{chr(65 + i % 26)}X" for i in range(cfg.n_us_origins)]
    ca = list(CA_ORIGINS[:cfg.n_ca_origins])
    while len(ca) < cfg.n_ca_origins:
        ca.append(f"CZ{len(ca):02d}")
    codes = us + ca
    ete = rng.integers(45, 300, size=len(codes))
    ete[len(us):] = rng.integers(90, 330, size=len(ca))
    taxi = rng.integers(8, 22, size=len(codes))
    weight = rng.uniform(0.3, 1.0, size=len(codes))
    return codes, set(us), set(ca), ete, taxi, weight / weight.sum()


def _gdp_plan(cfg, rng, airports):
    """(airport index, day) pairs hosting a GDP, skewed across airports."""
    ranks = np.arange(1, len(airports) + 1, dtype=float)
    w = ranks ** -cfg.gdp_airport_skew
    w /= w.sum()
    chosen = set()
    counts = np.zeros(len(airports), dtype=int)
    while len(chosen) < cfg.n_gdps:
        a = int(rng.choice(len(airports), p=w))
        if counts[a] >= cfg.n_days:
            w[a] = 0
            w /= w.sum()
            continue
        d = int(rng.integers(cfg.n_days))
        if (a, d) not in chosen:
            chosen.add((a, d))
            counts[a] += 1
    return sorted(chosen)


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """Build a seeded scenario (flights, ARR RATEs, advisories, ground truth)."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    epoch = as_epoch(cfg.start_date)
    airports = list((TABLE_AIRPORTS + OTHER_AIRPORTS)[:cfg.n_airports])
    codes, us_set, ca_set, org_ete, org_taxi, org_w = _origins(cfg, rng)
    plan = set(_gdp_plan(cfg, rng, airports))

    flights: list = []
    quarters: list = []
    events: list = []
    truth = GroundTruth()
    seq = 0
    for a, apt in enumerate(airports):
        apt_quarters = []
        for day in range(cfg.n_days):
            day0 = day * 1440
            base = np.array([_round_rate(cfg.nominal_rate * rng.uniform(0.95, 1.1)) for _ in range(96)])
            n = int(rng.poisson(cfg.flights_per_day))
            srta = np.sort(day0 + rng.integers(360, 1380, size=n))
            org = rng.choice(len(codes), size=n, p=org_w)
            ete = org_ete[org] + rng.integers(0, 11, size=n)
            taxi = org_taxi[org]
            canc = rng.random(n) < cfg.airline_cancel_prob
            ids = [f"F{seq + i:07d}" for i in range(n)]
            seq += n
            fp_off = srta - ete
            edct = np.full(n, -1, dtype=np.int64)
            eff_off = fp_off.copy()          # wheels-off before noise
            go_base = fp_off - taxi          # gate-out reference before noise
            klass = np.array(["", ] * n, dtype=object)
            delay = np.zeros(n, dtype=np.int64)
            airborne_cap = np.full(n, np.iinfo(np.int64).max)   # exempt flights stay off before release
            key = None
            if (a, day) in plan:
                key = f"{apt}-{format_time(day0, epoch)[:10]}"
                ev, prog = _issue_gdp(cfg, rng, apt, key, day0, codes, us_set, ca_set)
                events.extend(ev)
                for q, r in prog["arr"].items():
                    base[q - day0 // QUARTER_MIN] = r
                start, end, release, cancel = prog["start"], prog["end"], prog["release"], prog["cancel"]
                scope = prog["scope"]
                win = np.flatnonzero((srta >= start) & (srta < end) & ~canc)
                if len(win):
                    in_scope = np.array([codes[org[i]] in scope for i in win])
                    exempt = ~in_scope | (fp_off[win] <= release)
                    slots = rbs_assign(list(srta[win]), list(ete[win]), prog["par"], start, end,
                                       exempt=list(exempt))
                    for j, i in enumerate(win):
                        if exempt[j]:
                            klass[i] = "exempt"
                            if in_scope[j]:
                                airborne_cap[i] = release
                            continue
                        ctd = slots[j][1]
                        edct[i] = ctd
                        s = srta[i]
                        if cancel is not None and s >= max(start, cancel):
                            if fp_off[i] < cancel:
                                eff_off[i] = min(ctd, cancel)
                                klass[i] = "cancel_delay"
                            else:
                                klass[i] = "exempt"
                        else:
                            eff_off[i] = ctd
                            klass[i] = "in_scope"
                        delay[i] = max(0, eff_off[i] - fp_off[i])
                        go_base[i] = (ctd if klass[i] == "in_scope" else eff_off[i]) - taxi[i]
            for k in range(96):
                apt_quarters.append(QuarterHourRecord(apt, day0 // QUARTER_MIN + k, float(base[k])))

            # actual times
            controlled = klass == "in_scope"
            go_dev = np.where(controlled, _trunc_normal(rng, *cfg.gate_out_if, n),
                              _trunc_normal(rng, *cfg.gate_out_ef, n))
            to_dev = _trunc_normal(rng, *cfg.taxi_out, n)
            en_dev = _trunc_normal(rng, *cfg.enroute, n)
            if key is not None:
                # deviations never undo more than the planted hold for restricted flights
                rest = (klass == "in_scope") | (klass == "cancel_delay")
                go_dev = np.where(rest, np.maximum(go_dev, -delay), go_dev)
            gate_out = go_base + np.rint(go_dev).astype(np.int64)
            if key is not None:
                gate_out = np.where(klass == "cancel_delay", eff_off - taxi, gate_out)
            taxi_act = np.maximum(1, taxi + np.rint(to_dev).astype(np.int64))
            wheels_off = gate_out + taxi_act
            over = wheels_off > airborne_cap
            gate_out = np.where(over, gate_out - (wheels_off - airborne_cap), gate_out)
            wheels_off = np.minimum(wheels_off, airborne_cap)
            if key is not None:
                wheels_off = np.where(klass == "cancel_delay", eff_off, wheels_off)
                gate_out = np.where(klass == "cancel_delay", eff_off - taxi_act, gate_out)
            airborne = np.maximum(10, ete + np.rint(en_dev).astype(np.int64))
            wheels_on = wheels_off + airborne
            gate_in = wheels_on + cfg.taxi_in_min
            gate_out = np.maximum(gate_out, 0)

            for i in range(n):
                c = bool(canc[i])
                flights.append(FlightRecord(
                    flight_id=ids[i], origin=codes[org[i]], dest=apt,
                    sched_gate_arr=int(srta[i]) + cfg.taxi_in_min,
                    fp_gate_out=int(fp_off[i] - taxi[i]), fp_wheels_off=int(fp_off[i]),
                    ete_min=int(ete[i]), unimpeded_taxi_out_min=int(taxi[i]),
                    edct_wheels_off=None if edct[i] < 0 else int(edct[i]),
                    actual_gate_out=None if c else int(gate_out[i]),
                    actual_wheels_off=None if c else int(wheels_off[i]),
                    actual_wheels_on=None if c else int(wheels_on[i]),
                    actual_gate_in=None if c else int(gate_in[i]),
                    cancelled=c,
                ))
                if key is not None and klass[i]:
                    truth.flights[ids[i]] = {"gdp_key": key, "class": klass[i],
                                             "planted_delay_min": int(delay[i]),
                                             "counterfactual_wheels_on": None}
        quarters.extend(apt_quarters)

    events.sort(key=lambda e: (e.gdp_key, e.adl_time))
    scen = Scenario(cfg, epoch, flights, quarters, events, truth)
    if cfg.with_truth:
        _ground_truth(scen)
    return scen


def _issue_gdp(cfg, rng, apt, key, day0, codes, us_set, ca_set):
    q_day = day0 // QUARTER_MIN
    dur_q = int(rng.integers(round(cfg.gdp_hours[0] * 4), round(cfg.gdp_hours[1] * 4) + 1))
    start_q = q_day + int(rng.integers(48, 64))
    start_q = min(start_q, q_day + 94 - dur_q)
    start_q = max(start_q, q_day + 26)
    end_q = start_q + dur_q
    gap_q = int(rng.integers(round(cfg.gap_hours[0] * 4), round(cfg.gap_hours[1] * 4) + 1))
    release = (start_q - gap_q) * QUARTER_MIN
    start, end = start_q * QUARTER_MIN, end_q * QUARTER_MIN

    drop = rng.uniform(*cfg.capacity_drop)
    ratio = rng.uniform(*cfg.par_ratio)
    arr_rate = _round_rate(max(0.1, cfg.nominal_rate * drop))
    par_rate = _round_rate(max(0.1, arr_rate * ratio))
    par0 = ((start_q, par_rate),)
    par = {q: par_rate for q in range(start_q, end_q)}
    arr = {q: arr_rate for q in range(start_q, end_q)}

    scope = {c for c in codes if rng.random() < cfg.scope_fraction}
    if not scope:
        scope = {codes[0]}
    us = frozenset(scope & us_set)
    ca = frozenset(scope & ca_set)
    cause = list(Cause)[int(rng.choice(5, p=[0.2, 0.15, 0.3, 0.3, 0.05]))]
    events = [AdvisoryEvent(key, apt, EventKind.RELEASE, release, start, end, par0, us, ca, cause)]

    last_adl = release
    if rng.random() < cfg.revision_prob:
        k = int(rng.integers(1, cfg.max_revisions + 1))
        for _ in range(k):
            lo_q = last_adl // QUARTER_MIN + 1
            hi_q = end_q - 3
            if hi_q <= lo_q:
                break
            adl_q = int(rng.integers(lo_q, hi_q))
            eff_q = max(adl_q + 1, start_q)
            rate = _round_rate(max(0.1, par[eff_q] * rng.uniform(0.85, 1.2)))
            new_end_q = end_q
            if rng.random() < 0.3:
                new_end_q = min(end_q + int(rng.integers(1, 5)), q_day + 95)
            for q in range(eff_q, new_end_q):
                par[q] = rate
            for q in range(end_q, new_end_q):
                arr[q] = arr_rate
            events.append(AdvisoryEvent(
                key, apt, EventKind.REVISION, adl_q * QUARTER_MIN,
                end=new_end_q * QUARTER_MIN if new_end_q != end_q else None,
                par=((eff_q, rate),)))
            end_q = new_end_q
            last_adl = adl_q * QUARTER_MIN
        end = end_q * QUARTER_MIN

    cancel = None
    if rng.random() < cfg.cancel_prob:
        lo_q = max(start_q + 4, last_adl // QUARTER_MIN + 1)
        if lo_q < end_q - 1:
            cq = int(rng.integers(lo_q, end_q - 1))
            cancel = cq * QUARTER_MIN
            events.append(AdvisoryEvent(key, apt, EventKind.CANCEL, cancel))
            for q in range(cq, end_q):
                arr[q] = _round_rate(cfg.nominal_rate)
    return events, {"start": start, "end": end, "release": release, "cancel": cancel,
                    "par": par, "arr": arr, "scope": us | ca}


def _ground_truth(scen: Scenario) -> None:
    """Per-GDP counterfactual via the reference queue on planted delays."""
    progs = {}
    for e in scen.events:
        p = progs.setdefault(e.gdp_key, {"airport": e.airport, "end": None})
        if e.start is not None:
            p["start"] = e.start
        if e.end is not None:
            p["end"] = e.end
    rates: dict = {}
    for q in scen.quarters:
        rates.setdefault(q.airport, {})[q.quarter] = q.arr_rate
    by_apt: dict = {}
    for f in scen.flights:
        if not f.cancelled:
            by_apt.setdefault(f.dest, []).append(f)
    for apt in by_apt:
        by_apt[apt].sort(key=lambda f: f.actual_wheels_on)
    for key in sorted(progs):
        p = progs[key]
        apt = p["airport"]
        lo, hi = study_window(p["start"], p["end"])
        ons = [f.actual_wheels_on for f in by_apt.get(apt, [])]
        study = {f.flight_id: f for f in by_apt.get(apt, [])[bisect.bisect_left(ons, lo):bisect.bisect_left(ons, hi)]}
        restricted = [fid for fid, t in scen.truth.flights.items()
                      if t["gdp_key"] == key and t["class"] in ("in_scope", "cancel_delay")]
        for fid in restricted:
            if fid not in study:
                study[fid] = next(f for f in by_apt[apt] if f.flight_id == fid)
        planned = {}
        observed: dict = {}
        for fid, f in study.items():
            t = scen.truth.flights.get(fid)
            d = t["planted_delay_min"] if t is not None and t["gdp_key"] == key else 0
            planned[fid] = f.actual_wheels_on - d
            qa = f.actual_wheels_on // QUARTER_MIN
            observed[qa] = observed.get(qa, 0) + 1
        apt_rates = rates.get(apt, {})
        default = float(np.mean(list(apt_rates.values())))
        cap = {}
        lo_q = min([lo // QUARTER_MIN] + [t // QUARTER_MIN for t in planned.values()] + list(observed))
        hi_q = max([t // QUARTER_MIN for t in planned.values()] + list(observed)) if planned else lo_q
        for q in range(lo_q, hi_q + MAX_DRAIN_QUARTERS):
            r = apt_rates.get(q, default)
            cap[q] = max(r, observed.get(q, 0))
        served = oracle_queue(planned, cap, default_rate=default, anchor=lo_q)
        excess = sum(study[fid].actual_wheels_on - served[fid] for fid in study)
        bucketed = QUARTER_MIN * sum(study[fid].actual_wheels_on // QUARTER_MIN - served[fid] // QUARTER_MIN
                                     for fid in study)
        planted = sum(scen.truth.flights[fid]["planted_delay_min"] for fid in restricted)
        for fid in restricted:
            scen.truth.flights[fid]["counterfactual_wheels_on"] = int(served[fid])
        rf = len(restricted)
        scen.truth.gdps[key] = {
            "airport": apt,
            "rf_count": rf,
            "planted_delay_min": int(planted),
            "excess_delay_min": float(excess),
            "excess_bucketed_min": float(bucketed),
            "excess_per_rf_min": (excess / rf) if rf else None,
        }


# ---------------------------------------------------------------------------
# synthetic regression data

def synth_feature_dataset(n: int = 1000, sigma: float = 5.0, seed: int = 0):
    """Design shaped like the 41-column feature set, with a known sparse coefficient vector.

    Returns ``(X, y, names, dummy_mask, beta, intercept)``; ``beta`` is in
    raw feature units and nonzero only for the planted signals.
    """
    from .features import DUMMY_COLUMNS, FEATURE_COLUMNS

    rng = np.random.default_rng(seed)
    p = len(FEATURE_COLUMNS)
    X = np.zeros((n, p))
    idx = {c: i for i, c in enumerate(FEATURE_COLUMNS)}
    continuous = [c for c in FEATURE_COLUMNS if c not in DUMMY_COLUMNS]
    for c in continuous:
        if c.startswith("cnt_"):
            X[:, idx[c]] = rng.poisson(30 if c != "cnt_r" else 1.2, size=n)
        elif c.startswith("s_"):
            X[:, idx[c]] = np.abs(rng.normal(6.0, 2.0, size=n))
        else:
            X[:, idx[c]] = rng.normal(0.0, 1.5, size=n) + rng.uniform(-2, 2)
    causes = ["c_snow", "c_lc", "c_ts", "c_rwy", None]
    pick = rng.choice(5, size=n, p=[0.1, 0.2, 0.3, 0.05, 0.35])
    for k, c in enumerate(causes):
        if c is not None:
            X[pick == k, idx[c]] = 1.0
    apts = ["apt_bos", "apt_jfk", "apt_lga", "apt_ord", "apt_phl", "apt_sea", "apt_sfo", "apt_others", None]
    pick = rng.choice(len(apts), size=n)
    for k, c in enumerate(apts):
        if c is not None:
            X[pick == k, idx[c]] = 1.0
    std = X.std(axis=0)
    std[std == 0] = 1.0
    signal_std_units = {"et": 4.0, "gt": -3.0, "cnt_r": 5.0, "sc_us_ete": 3.0, "u_par_final": 6.0,
                        "s_go_if": 5.0, "s_to_if": 3.0}
    beta = np.zeros(p)
    for c, b in signal_std_units.items():
        beta[idx[c]] = b / std[idx[c]]
    beta[idx["apt_ord"]] = 8.0
    intercept = 35.0 - float(X.mean(axis=0) @ beta)
    y = intercept + X @ beta + rng.normal(0.0, sigma, size=n)
    mask = np.array([c in DUMMY_COLUMNS for c in FEATURE_COLUMNS])
    return X, y, list(FEATURE_COLUMNS), mask, beta, intercept
