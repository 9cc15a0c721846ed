"""Generate a synthetic year (about a million flights, 1,200 GDPs) and time the pipeline."""
import argparse
import time
from pathlib import Path

from gdpx.pipeline import RunConfig, run_pipeline
from gdpx.synth import ScenarioConfig, generate_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="year")
    ap.add_argument("--seed", type=int, default=11)
    a = ap.parse_args()

    t = time.perf_counter()
    cfg = ScenarioConfig(seed=a.seed, n_days=365, n_airports=12, flights_per_day=230, n_gdps=1200, with_truth=False)
    scen = generate_scenario(cfg)
    print(f"generated {len(scen.flights)} flights in {time.perf_counter() - t:.0f}s")
    t = time.perf_counter()
    paths = scen.write(a.out)
    print(f"wrote inputs in {time.perf_counter() - t:.0f}s")

    t = time.perf_counter()
    bundle = run_pipeline(RunConfig(flights=str(paths["flights"]), quarters=str(paths["quarters"]),
                                    advisories=str(paths["advisories"]), out=str(Path(a.out) / "out"), seed=7))
    print(f"pipeline {time.perf_counter() - t:.0f}s, {len(bundle.errors)} stage errors")
    print(bundle.summary)


if __name__ == "__main__":
    main()
