#!/usr/bin/env python3
"""Run the full experiment matrix and drop one CSV per experiment.

Covers the bifurcation sweep, the split-threshold sweep, the population
sweep, the radius sweep (all three engines on the same seeds), and an
optional throughput-saturation comparison.
"""

import argparse
from pathlib import Path

from rangemon.bench import ExperimentSpec, measure_throughput, run_experiment
from rangemon.cluster import ClusterSpec
from rangemon.workload import WorkloadSpec

ENGINES = ("drqa", "gi", "ns")


def base_workload(args) -> WorkloadSpec:
    return WorkloadSpec(
        distribution=args.distribution,
        n_objects=args.objects,
        n_queries=args.queries,
        radius=0.02,
        object_speed=0.005,
        query_speed=0.005,
        ticks=args.ticks,
        zipf_s=1.2,
        grid_n=100,
        seed=args.seed,
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--distribution", choices=("UD", "GD", "ZIPF"), default="ZIPF")
    parser.add_argument("--objects", type=int, default=30_000)
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--ticks", type=int, default=5)
    parser.add_argument("--repetitions", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--throughput", action="store_true",
                        help="also probe saturation rates (slow, wall-clock)")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wl = base_workload(args)

    matrix = [
        ("m-sweep", "drqa", {"m": [2, 4, 6, 9, 16, 25]}),
        ("alpha-sweep", "drqa", {"alpha": [5, 10, 20, 40, 80]}),
    ]
    for engine in ENGINES:
        matrix.append((f"objects-sweep-{engine}", engine,
                       {"objects": [10_000, 30_000, 100_000]}))
        matrix.append((f"radius-sweep-{engine}", engine,
                       {"radius": [0.01, 0.02, 0.05, 0.1]}))

    for name, engine, sweeps in matrix:
        exp = ExperimentSpec(
            name=name, engine=engine, repetitions=args.repetitions,
            workload=wl, cluster=ClusterSpec(), sweeps=sweeps,
            measure_throughput=False,
        )
        out = out_dir / f"{name}.csv"
        rows = run_experiment(exp, out)
        print(f"{name}: {len(rows)} rows -> {out}")

    if args.throughput:
        print("throughput saturation (events/s):")
        for engine in ENGINES:
            exp = ExperimentSpec(name=f"throughput-{engine}", engine=engine,
                                 workload=wl, cluster=ClusterSpec(engine=engine))
            print(f"  {engine}: {measure_throughput(exp):.0f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
