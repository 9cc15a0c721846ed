"""``gdpx`` command line: synth, classify, measure, features, fit, report, run."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .errors import ConfigError
from .pipeline import RunConfig, run_pipeline
from .regression import DEFAULT_GRID

STAGES = {
    "classify": ("classify",),
    "measure": ("classify", "measure"),
    "features": ("classify", "measure", "features"),
    "fit": ("fit",),
    "report": ("report",),
    "run": ("classify", "measure", "features", "fit", "report"),
}


def _grid(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda grid {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("lambda grid must be non-empty and non-negative")
    return vals


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("test fraction must lie in (0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gdpx", description="Excess delay measurement for ground delay programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="write a synthetic scenario with ground truth")
    sp.add_argument("--config", help="scenario JSON (ScenarioConfig fields)")
    sp.add_argument("--seed", type=int, help="overrides the config seed")
    sp.add_argument("--out", required=True)

    for name in ("classify", "measure", "features", "fit", "report", "run"):
        p = sub.add_parser(name, help=f"{name} stage" if name != "run" else "all stages")
        p.add_argument("--flights")
        p.add_argument("--quarters")
        p.add_argument("--advisories")
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--epoch", help="YYYY-MM-DD; inferred from the inputs when absent")
        p.add_argument("--taxi-in-min", type=int, default=10)
        p.add_argument("--others-threshold", type=int, default=52)
        p.add_argument("--test-fraction", type=_fraction, default=0.2)
        p.add_argument("--folds", type=int, default=5)
        p.add_argument("--lambda-grid", type=_grid, default=DEFAULT_GRID,
                       help="comma-separated lambdas")
        p.add_argument("--perm-repeats", type=int, default=20)
        p.add_argument("--svg", action="store_true", help="write one queueing diagram per GDP")
        p.add_argument("--eq3-condition", choices=("release", "start"), default="release",
                       help="threshold deciding full vs post-release delay for in-scope flights")
        p.add_argument("--cause-map", help="CSV mapping advisory cause text to cause classes")
        p.add_argument("--features", dest="features_path", help="features.csv for the fit stage")
    return ap


def _setup_logging():
    level = os.environ.get("GDPX_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _synth(args) -> int:
    from .synth import ScenarioConfig, generate_scenario
    try:
        cfg = ScenarioConfig()
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                cfg = ScenarioConfig.from_dict(json.load(fh))
        if args.seed is not None:
            cfg.seed = args.seed
        paths = generate_scenario(cfg).write(args.out)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"gdpx synth: {exc}", file=sys.stderr)
        return 2
    for k, v in paths.items():
        print(f"{k}: {v}")
    return 0


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "synth":
        return _synth(args)
    cfg = RunConfig(
        flights=args.flights, quarters=args.quarters, advisories=args.advisories, out=args.out,
        epoch=args.epoch, taxi_in_min=args.taxi_in_min, others_threshold=args.others_threshold,
        test_fraction=args.test_fraction, folds=args.folds, lambda_grid=args.lambda_grid,
        perm_repeats=args.perm_repeats, seed=args.seed, svg=args.svg,
        eq3_condition=args.eq3_condition, cause_map=args.cause_map, features_path=args.features_path,
    )
    bundle = run_pipeline(cfg, STAGES[args.command])
    for err in bundle.errors:
        print(f"gdpx {args.command}: {err}", file=sys.stderr)
    return 0 if bundle.ok else 1


if __name__ == "__main__":
    sys.exit(main())
