"""Per-GDP covariates and the excess-delay outcome."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .classifier import FlightClass
from .errors import MalformedRow, MissingQuarter, SchemaError
from .flightdata import Cause
from .lifecycle import GdpProgram, par_series, program_times

OTHERS_THRESHOLD = 52
BENCHMARK_AIRPORT = "EWR"
NAMED_AIRPORTS = ("BOS", "JFK", "LGA", "ORD", "PHL", "SEA", "SFO")

CAUSE_COLUMNS = {
    Cause.SNOW_ICE: "c_snow",
    Cause.LOW_CEILING: "c_lc",
    Cause.THUNDERSTORMS: "c_ts",
    Cause.RUNWAY_CONSTRUCTION: "c_rwy",
}
AIRPORT_COLUMNS = tuple(f"apt_{a.lower()}" for a in NAMED_AIRPORTS) + ("apt_others",)

FEATURE_COLUMNS = (
    "et", "gt", "ct", "cnt_r", "sc_us_ete", "sc_ca_ete", "cnt_ef", "cnt_if", "cnt_cf", "prehold",
    "c_snow", "c_lc", "c_ts", "c_rwy", "d_arr",
    "u_par_initial", "s_par_initial", "u_par_final", "s_par_final", "u_par_revise", "s_par_revise",
    "d_go_if", "s_go_if", "d_to_if", "s_to_if", "d_ete_if", "s_ete_if",
    "d_go_ex", "s_go_ex", "d_to_ef", "s_to_ef", "d_ete_ef", "s_ete_ef",
) + AIRPORT_COLUMNS
DUMMY_COLUMNS = frozenset(CAUSE_COLUMNS.values()) | frozenset(AIRPORT_COLUMNS)
OUTCOME = "excess_per_rf_min"
FEATURES_CSV_COLUMNS = ("gdp_key", "airport") + FEATURE_COLUMNS + (OUTCOME,)


@dataclass
class FeatureVector:
    gdp_key: str
    airport: str
    values: dict                      # column -> float, keys in FEATURE_COLUMNS
    outcome: Optional[float]
    flags: list = field(default_factory=list)

    def row(self) -> list:
        return [self.values[c] for c in FEATURE_COLUMNS]


def mean_std(xs) -> tuple:
    """Mean and population standard deviation; (0, 0) for an empty series."""
    a = np.asarray(xs, dtype=float)
    if a.size == 0:
        return 0.0, 0.0
    m = float(a.mean())
    return m, float(np.sqrt(np.mean((a - m) ** 2)))


def _rates(rates: Mapping[int, float], airport: str, quarters) -> np.ndarray:
    out = []
    for q in quarters:
        r = rates.get(q)
        if r is None:
            raise MissingQuarter(airport, q)
        out.append(r)
    return np.asarray(out, dtype=float)


def par_stats(p: GdpProgram, rates: Mapping[int, float]) -> dict:
    """Mean / std of ARR-initial, ARR-final and initial-final PAR per quarter.

    Quarters run over ``[start, effective_end)``; ``rates`` maps quarter to
    ARR RATE at the program airport.
    """
    qs = list(p.quarters(p.effective_end))
    arr = _rates(rates, p.airport, qs)
    ini = np.asarray(par_series(p, "initial", qs), dtype=float)
    fin = np.asarray(par_series(p, "final", qs), dtype=float)
    out = {}
    for name, series in (("initial", arr - ini), ("final", arr - fin), ("revise", ini - fin)):
        out[f"u_par_{name}"], out[f"s_par_{name}"] = mean_std(series)
    return out


def time_variation_stats(pairs, flags: Optional[list] = None) -> dict:
    """Gate-out, taxi-out and enroute deviations for in-scope and exempt flights.

    ``pairs`` holds (ClassifiedFlight, FlightRecord).  An empty class sets its
    six values to 0 and appends a flag.
    """
    series = {k: [] for k in ("go_if", "to_if", "ete_if", "go_ex", "to_ef", "ete_ef")}
    for cf, f in pairs:
        if f.cancelled:
            continue
        taxi = f.taxi_out_min - f.unimpeded_taxi_out_min
        ete = f.airborne_min - f.ete_min
        if cf.klass is FlightClass.IN_SCOPE:
            series["go_if"].append(f.actual_gate_out - (f.edct_wheels_off - f.unimpeded_taxi_out_min))
            series["to_if"].append(taxi)
            series["ete_if"].append(ete)
        elif cf.klass is FlightClass.EXEMPT:
            series["go_ex"].append(f.actual_gate_out - f.fp_gate_out)
            series["to_ef"].append(taxi)
            series["ete_ef"].append(ete)
    if flags is not None:
        if not series["go_if"]:
            flags.append("empty_class:in_scope")
        if not series["go_ex"]:
            flags.append("empty_class:exempt")
    out = {}
    for k, xs in series.items():
        out[f"d_{k}"], out[f"s_{k}"] = mean_std(xs)
    return out


def airport_dummies(airport: str, gdp_counts: Mapping[str, int], threshold: int = OTHERS_THRESHOLD) -> dict:
    """One-hot airport group; EWR is the all-zero benchmark."""
    out = {c: 0.0 for c in AIRPORT_COLUMNS}
    if airport == BENCHMARK_AIRPORT:
        return out
    if airport in NAMED_AIRPORTS and gdp_counts.get(airport, 0) >= threshold:
        out[f"apt_{airport.lower()}"] = 1.0
    else:
        out["apt_others"] = 1.0
    return out


def scope_ete(pairs, p: GdpProgram, flags: Optional[list] = None) -> tuple:
    """Mean planned ETE (hours) of in-scope flights from US and Canadian origins."""
    us, ca = [], []
    for cf, f in pairs:
        if cf.klass is not FlightClass.IN_SCOPE:
            continue
        if f.origin in p.scope_ca:
            ca.append(f.ete_min / 60.0)
        else:
            us.append(f.ete_min / 60.0)
    if flags is not None:
        if not us:
            flags.append("empty_class:in_scope_us")
        if not ca:
            flags.append("empty_class:in_scope_ca")
    return (float(np.mean(us)) if us else 0.0), (float(np.mean(ca)) if ca else 0.0)


def extract(p: GdpProgram, pairs, rates: Mapping[int, float], excess_per_rf: Optional[float],
            annual_mean_rate: float, gdp_counts: Mapping[str, int],
            threshold: int = OTHERS_THRESHOLD, prehold_hr: Optional[float] = None) -> FeatureVector:
    """Assemble the full covariate vector for one program.

    ``pairs`` are the program's involved flights as (ClassifiedFlight,
    FlightRecord); ``rates`` is the airport's ARR RATE by quarter.
    """
    flags: list = []
    v: dict = {}
    t = program_times(p)
    v["et"], v["gt"], v["ct"], v["cnt_r"] = t.et_hr, t.gt_hr, t.ct_hr, float(t.cnt_r)
    v["sc_us_ete"], v["sc_ca_ete"] = scope_ete(pairs, p, flags)
    counts = {k: 0 for k in FlightClass}
    for cf, _ in pairs:
        counts[cf.klass] += 1
    v["cnt_ef"] = float(counts[FlightClass.EXEMPT])
    v["cnt_if"] = float(counts[FlightClass.IN_SCOPE])
    v["cnt_cf"] = float(counts[FlightClass.CANCEL_DELAY])
    if prehold_hr is None:
        prehold_hr = sum(max(0, p.release_time - f.fp_wheels_off)
                         for cf, f in pairs if cf.klass is FlightClass.IN_SCOPE) / 60.0
    v["prehold"] = float(prehold_hr)
    for c in CAUSE_COLUMNS.values():
        v[c] = 0.0
    if p.cause in CAUSE_COLUMNS:
        v[CAUSE_COLUMNS[p.cause]] = 1.0
    qs = list(p.quarters(p.effective_end))
    arr = _rates(rates, p.airport, qs)
    v["d_arr"] = float(np.mean(arr - annual_mean_rate)) if len(arr) else 0.0
    v.update(par_stats(p, rates))
    v.update(time_variation_stats(pairs, flags))
    v.update(airport_dummies(p.airport, gdp_counts, threshold))
    return FeatureVector(p.gdp_key, p.airport, {c: float(v[c]) for c in FEATURE_COLUMNS},
                         excess_per_rf, flags)


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def serialize_features(rows) -> str:
    lines = [",".join(FEATURES_CSV_COLUMNS)]
    for fv in rows:
        cells = [fv.gdp_key, fv.airport] + [_fmt(x) for x in fv.row()] + [_fmt(fv.outcome)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def parse_features(stream) -> list[FeatureVector]:
    fh = stream if hasattr(stream, "read") else open(stream, newline="", encoding="utf-8")
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FEATURES_CSV_COLUMNS:
            raise SchemaError(FEATURES_CSV_COLUMNS, header or [])
        out = []
        for row in reader:
            if len(row) != len(FEATURES_CSV_COLUMNS):
                raise MalformedRow(reader.line_num, "*", "wrong cell count")
            try:
                vals = {c: float(x) for c, x in zip(FEATURE_COLUMNS, row[2:-1])}
                outcome = None if row[-1] == "" else float(row[-1])
            except ValueError as exc:
                raise MalformedRow(reader.line_num, "*", str(exc)) from None
            out.append(FeatureVector(row[0], row[1], vals, outcome))
        return out
    finally:
        if fh is not stream:
            fh.close()
