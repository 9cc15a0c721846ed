"""End-to-end orchestration: ingest, classify, measure, features, fit, report.

Every stage failure is wrapped in :class:`StageError` tagged with the stage
name (``ingest/quarters``, ``measure``, ...) and collected; later stages that
depend on a failed one are skipped.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import features as feat
from .classifier import FlightIndex, classify_program, serialize_classified
from .errors import GdpxError, NoRestrictedFlights, NotConverged, StageError, ZeroVarianceTarget
from .flightdata import (
    DEFAULT_TAXI_IN_MIN, QUARTER_MIN, as_epoch, infer_epoch, load_cause_map,
    parse_advisories, parse_flights, parse_quarters,
)
from .lifecycle import assemble_programs, program_to_dict
from .queueing import ArrivalIndex, diagram_from_times, excess_delay, study_window
from .regression import (
    DEFAULT_GRID, Dataset, DegenerateScore, ModelKind, RankDeficient, cross_validate, fit_model,
    fit_scaler, metrics, permutation_importance, split,
)
from .svg import render_diagram_svg

log = logging.getLogger("gdpx")

SCHEMA_VERSION = 1
EXCESS_COLUMNS = ("gdp_key", "airport", "excess_delay_min", "excess_per_rf_min",
                  "airborne_increase_min", "rf_count")
EXCESS_EXTRA_COLUMNS = ("gdp_key", "study_flights", "gdp_delay_total_min", "quarters",
                        "default_rate_used", "observed_airborne_hold_min", "airborne_net_of_observed_min")


@dataclass
class RunConfig:
    flights: Optional[str] = None
    quarters: Optional[str] = None
    advisories: Optional[str] = None
    out: str = "out"
    epoch: Optional[str] = None
    taxi_in_min: int = DEFAULT_TAXI_IN_MIN
    others_threshold: int = feat.OTHERS_THRESHOLD
    test_fraction: float = 0.2
    folds: int = 5
    lambda_grid: tuple = DEFAULT_GRID
    perm_repeats: int = 20
    seed: int = 0
    svg: bool = False
    eq3_condition: str = "release"
    cause_map: Optional[str] = None
    features_path: Optional[str] = None   # fit from an existing features.csv


@dataclass
class Measured:
    program: object
    pairs: list
    result: object
    diagram: object
    study_flights: int
    gdp_delay_total: int
    observed_airborne_hold: int = 0   # sum of max(0, wheels-on - wheels-off - ete) over the study set


@dataclass
class ReportBundle:
    paths: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    summary: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return not self.errors


# ---------------------------------------------------------------------------
# output helpers

def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if not math.isfinite(x) else x
    return x


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def _csv(columns, rows) -> str:
    lines = [",".join(columns)] + [",".join(_fmt(c) if not isinstance(c, str) else c for c in r) for r in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# stages

class Pipeline:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.bundle = ReportBundle()
        self.epoch = None
        self.flights = self.quarter_records = self.events = None
        self.programs = None
        self.classified = None       # gdp_key -> [(ClassifiedFlight, FlightRecord)]
        self.measured = None         # gdp_key -> Measured
        self.feature_rows = None
        self.rates = None
        self.annual_mean = None

    # -- bookkeeping
    def _fail(self, stage, exc):
        err = exc if isinstance(exc, StageError) else StageError(stage, exc)
        log.error("%s", err)
        self.bundle.errors.append(err)

    def _write(self, name, text):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.bundle.paths[name] = path
        log.info("wrote %s", path)
        return path

    # -- ingest
    def ingest(self, need=("flights", "quarters", "advisories")) -> bool:
        cfg = self.cfg
        paths = {"flights": cfg.flights, "quarters": cfg.quarters, "advisories": cfg.advisories}
        ok = True
        for name in need:
            if not paths[name] or not Path(paths[name]).is_file():
                self._fail(f"ingest/{name}", FileNotFoundError(f"{name} file not found: {paths[name]!r}"))
                ok = False
        if not ok:
            return False
        try:
            self.epoch = as_epoch(cfg.epoch) if cfg.epoch else infer_epoch(*[paths[n] for n in need])
        except (ValueError, OSError) as exc:
            self._fail("ingest/epoch", exc)
            return False
        for name in need:
            try:
                if name == "flights":
                    self.flights = parse_flights(paths[name], self.epoch)
                elif name == "quarters":
                    self.quarter_records = parse_quarters(paths[name], self.epoch)
                else:
                    cmap = load_cause_map(cfg.cause_map)
                    self.events = parse_advisories(paths[name], self.epoch, cause_map=cmap)
            except (GdpxError, OSError, ValueError) as exc:
                self._fail(f"ingest/{name}", exc)
                ok = False
        if ok and self.quarter_records is not None:
            self.rates = {}
            for r in self.quarter_records:
                self.rates.setdefault(r.airport, {})[r.quarter] = r.arr_rate
            self.annual_mean = {a: float(np.mean(list(v.values()))) for a, v in self.rates.items()}
        log.info("ingested %s", {n: len(getattr(self, a) or []) for n, a in
                                 (("flights", "flights"), ("quarters", "quarter_records"),
                                  ("advisories", "events"))})
        return ok

    # -- lifecycle + classification
    def classify(self) -> bool:
        try:
            self.programs = assemble_programs(self.events)
        except GdpxError as exc:
            self._fail("lifecycle", exc)
            return False
        index = FlightIndex(self.flights, self.cfg.taxi_in_min)
        self.classified = {}
        for p in self.programs:
            try:
                self.classified[p.gdp_key] = classify_program(index, p, self.cfg.eq3_condition)
            except GdpxError as exc:
                self._fail("classify", StageError(f"classify/{p.gdp_key}", exc))
        rows = [cf for p in self.programs for cf, _ in self.classified.get(p.gdp_key, [])]
        self._write("classified_flights.csv", serialize_classified(rows))
        self._write("programs.json", dump_json({
            "schema_version": SCHEMA_VERSION,
            "programs": [program_to_dict(p, self.epoch) for p in self.programs]}))
        return True

    # -- queueing
    def measure_program(self, p, pairs, arrivals: ArrivalIndex) -> Measured:
        lo, hi = study_window(p.start, p.planned_end)
        study = {f.flight_id: f for f in arrivals.landing(p.airport, lo, hi)}
        delays = {}
        for cf, f in pairs:
            if cf.klass.restricted and not f.cancelled:
                study.setdefault(f.flight_id, f)
                delays[f.flight_id] = cf.gdp_delay_min
        ids = sorted(study)
        actual = np.array([study[i].actual_wheels_on for i in ids], dtype=np.int64)
        model = actual - np.array([delays.get(i, 0) for i in ids], dtype=np.int64)
        anchor = lo // QUARTER_MIN
        if len(ids):
            anchor = min(anchor, int(actual.min()) // QUARTER_MIN, int(model.min()) // QUARTER_MIN)
        d = diagram_from_times(actual, model, self.rates.get(p.airport, {}),
                               default_rate=self.annual_mean.get(p.airport), airport=p.airport,
                               anchor=anchor, floor_observed=True)
        d = dataclasses.replace(d, gdp_window=(p.start, p.planned_end))
        try:
            res = excess_delay(d, len(delays))
        except NoRestrictedFlights as exc:
            res = exc.result
        hold = sum(max(0, f.actual_wheels_on - f.actual_wheels_off - f.ete_min) for f in study.values())
        return Measured(p, pairs, res, d, len(ids), int(sum(delays.values())), int(hold))

    def measure(self) -> bool:
        arrivals = ArrivalIndex(self.flights)
        self.measured = {}
        rows, extras = [], []
        for p in self.programs:
            if p.gdp_key not in self.classified:
                continue
            try:
                m = self.measure_program(p, self.classified[p.gdp_key], arrivals)
            except GdpxError as exc:
                self._fail("measure", StageError(f"measure/{p.gdp_key}", exc))
                continue
            self.measured[p.gdp_key] = m
            r = m.result
            rows.append((p.gdp_key, p.airport, r.excess_delay_min, r.excess_per_rf_min,
                         r.airborne_increase_min, r.rf_count))
            extras.append((p.gdp_key, m.study_flights, m.gdp_delay_total, len(m.diagram.A),
                           m.diagram.default_used, m.observed_airborne_hold,
                           m.result.airborne_increase_min - m.observed_airborne_hold))
        self._write("excess.csv", _csv(EXCESS_COLUMNS, rows))
        self._write("excess_extras.csv", _csv(EXCESS_EXTRA_COLUMNS, extras))
        return True

    # -- features
    def features(self) -> bool:
        counts: dict = {}
        for p in self.programs:
            counts[p.airport] = counts.get(p.airport, 0) + 1
        self.feature_rows = []
        for p in self.programs:
            m = self.measured.get(p.gdp_key)
            if m is None:
                continue
            try:
                fv = feat.extract(p, m.pairs, self.rates.get(p.airport, {}), m.result.excess_per_rf_min,
                                  self.annual_mean.get(p.airport, 0.0), counts, self.cfg.others_threshold)
            except GdpxError as exc:
                self._fail("features", StageError(f"features/{p.gdp_key}", exc))
                continue
            if m.result.rf_count == 0:
                fv.flags.append("no_restricted_flights")
            self.feature_rows.append(fv)
        self._write("features.csv", feat.serialize_features(self.feature_rows))
        return True

    # -- regression
    def fit(self) -> bool:
        cfg = self.cfg
        if self.feature_rows is None:
            path = cfg.features_path or self.out / "features.csv"
            try:
                self.feature_rows = feat.parse_features(path)
            except (GdpxError, OSError) as exc:
                self._fail("ingest/features", exc)
                return False
        usable = [fv for fv in self.feature_rows if fv.outcome is not None]
        report = {"schema_version": SCHEMA_VERSION, "seed": cfg.seed, "n_gdps": len(self.feature_rows),
                  "n_used": len(usable),
                  "dropped_gdps": sorted(fv.gdp_key for fv in self.feature_rows if fv.outcome is None),
                  "test_fraction": cfg.test_fraction, "folds": cfg.folds,
                  "objectives": {"ridge": "sum sq error + lambda * ||b||_2^2",
                                 "lasso": "(1/2n) sum sq error + lambda * ||b||_1"}}
        importance_rows = []
        try:
            if len(usable) < max(cfg.folds, 2) + 2:
                raise GdpxError(f"only {len(usable)} GDPs with restricted flights, too few to fit")
            d = Dataset(np.array([fv.row() for fv in usable]), np.array([fv.outcome for fv in usable]),
                        list(feat.FEATURE_COLUMNS),
                        np.array([c in feat.DUMMY_COLUMNS for c in feat.FEATURE_COLUMNS]))
            train, test = split(d, cfg.test_fraction, cfg.seed)
            keep = [j for j in range(d.X.shape[1]) if train.X[:, j].std() > 0]
            report["dropped_columns"] = [d.names[j] for j in range(d.X.shape[1]) if j not in keep]
            train, test = train.select(keep), test.select(keep)
            report["n_train"], report["n_test"] = train.n, test.n
            scaler = fit_scaler(train)
            Xtr, Xte = scaler.apply(train.X), scaler.apply(test.X)
            report["scaler"] = {n: {"mean": m, "std": s, "passthrough": bool(pt)} for n, m, s, pt in
                                zip(train.names, scaler.means, scaler.stds, scaler.passthrough)}
            cv = {}
            for kind in (ModelKind.RIDGE, ModelKind.LASSO):
                res = cross_validate(train, cfg.lambda_grid, cfg.folds, cfg.seed, kind)
                cv[kind] = res
            report["cv"] = {k.value: {"grid": v.grid, "mean_rmse": v.mean_rmse, "best_lambda": v.best_lambda}
                            for k, v in cv.items()}
            models = {}
            fits = {}
            for kind in (ModelKind.OLS, ModelKind.RIDGE, ModelKind.LASSO):
                lam = cv[kind].best_lambda if kind in cv else 0.0
                entry = {"lambda": lam}
                try:
                    try:
                        m = fit_model(kind, Xtr, train.y, lam)
                    except NotConverged as exc:
                        m = exc.partial
                        entry["warning"] = str(exc)
                    fits[kind] = m
                    entry["intercept"] = m.intercept
                    entry["coefficients"] = dict(zip(train.names, m.coefs))
                    if m.p_values is not None:
                        entry["p_values"] = dict(zip(train.names, m.p_values))
                        entry["std_errors"] = dict(zip(train.names, m.std_errors))
                    try:
                        entry.update(metrics(m.predict(Xte), test.y))
                    except ZeroVarianceTarget as exc:
                        entry.update(exc.partial)
                        entry["r2"] = None
                except RankDeficient as exc:
                    entry["error"] = f"RankDeficient: {exc}"
                models[kind.value] = entry
            report["models"] = models
            imp = {"model": ModelKind.RIDGE.value, "repeats": cfg.perm_repeats, "scored_on": "test"}
            try:
                alphas, ranks = permutation_importance(fits[ModelKind.RIDGE], Xte, test.y,
                                                       cfg.perm_repeats, cfg.seed)
                importance_rows = sorted(zip(train.names, alphas, ranks), key=lambda r: r[2])
            except (DegenerateScore, ZeroVarianceTarget) as exc:
                imp["error"] = f"{type(exc).__name__}: {exc}"
                importance_rows = [(n, None, None) for n in train.names]
            report["importance"] = imp
        except (GdpxError, ValueError, np.linalg.LinAlgError) as exc:
            self._fail("fit", exc)
            report["error"] = str(exc)
            self._write("fit_report.json", dump_json(report))
            self._write("importance.csv", _csv(("feature", "alpha", "rank"), []))
            return False
        self._write("fit_report.json", dump_json(report))
        self._write("importance.csv", _csv(("feature", "alpha", "rank"), importance_rows))
        return True

    # -- report
    def report(self, from_disk: bool = False) -> bool:
        if not from_disk:
            ms = self.measured or {}
            per_rf = [m.result.excess_per_rf_min for m in ms.values()]
            totals = [m.result.excess_delay_min for m in ms.values()]
            n = len(ms)
        else:
            path = self.out / "excess.csv"
            try:
                with open(path, newline="", encoding="utf-8") as fh:
                    rows = list(csv.DictReader(fh))
            except OSError as exc:
                self._fail("ingest/excess", exc)
                return False
            per_rf = [None if r["excess_per_rf_min"] == "" else float(r["excess_per_rf_min"]) for r in rows]
            totals = [float(r["excess_delay_min"]) for r in rows]
            n = len(rows)
        vals = np.array([v for v in per_rf if v is not None], dtype=float)
        summary = {
            "schema_version": SCHEMA_VERSION,
            "n_gdps": n,
            "n_gdps_with_restricted_flights": int(vals.size),
            "mean_excess_per_rf_min": float(vals.mean()) if vals.size else None,
            "std_excess_per_rf_min": float(vals.std()) if vals.size else None,
            "total_excess_delay_min": float(sum(totals)),
            "stage_errors": [str(e) for e in self.bundle.errors],
        }
        self.bundle.summary = summary
        self._write("summary.json", dump_json(summary))
        if self.cfg.svg and self.measured is not None:
            for key, m in sorted(self.measured.items()):
                self._write(f"svg/{key}.svg", render_diagram_svg(m.diagram, title=key))
        return True


def run_pipeline(cfg: RunConfig, stages=("classify", "measure", "features", "fit", "report")) -> ReportBundle:
    """Run the requested stages (and whatever they depend on) in order."""
    pipe = Pipeline(cfg)
    stages = set(stages)
    need_data = stages & {"classify", "measure", "features"} or (
        "report" in stages and cfg.svg)
    if need_data:
        need = ["flights", "advisories"]
        if stages & {"measure", "features"} or "report" in stages:
            need.append("quarters")
        ok = pipe.ingest(tuple(need))
        ok = ok and pipe.classify()
        if ok and stages & {"measure", "features", "report"}:
            ok = pipe.measure()
        if ok and stages & {"features", "fit"}:
            pipe.features()
    if "fit" in stages and (pipe.feature_rows is not None or not need_data):
        pipe.fit()
    if "report" in stages:
        pipe.report(from_disk=not need_data)
    return pipe.bundle
