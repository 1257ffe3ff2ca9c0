#!/usr/bin/env python3
"""Materialize a synthetic workload as JSONL (file or stdout, pipeable)."""

import argparse
import sys

from rangemon.workload import WorkloadSpec, iter_event_records, write_events


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--distribution", choices=("UD", "GD", "ZIPF"), default="UD")
    parser.add_argument("--objects", type=int, default=10_000)
    parser.add_argument("--queries", type=int, default=100)
    parser.add_argument("--radius", type=float, default=0.02)
    parser.add_argument("--object-speed", type=float, default=0.005)
    parser.add_argument("--query-speed", type=float, default=0.0)
    parser.add_argument("--ticks", type=int, default=10)
    parser.add_argument("--zipf-s", type=float, default=1.0)
    parser.add_argument("--grid-n", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="-", help="output path, '-' for stdout")
    args = parser.parse_args()

    spec = WorkloadSpec(
        distribution=args.distribution,
        n_objects=args.objects,
        n_queries=args.queries,
        radius=args.radius,
        object_speed=args.object_speed,
        query_speed=args.query_speed,
        ticks=args.ticks,
        zipf_s=args.zipf_s,
        grid_n=args.grid_n,
        seed=args.seed,
    )
    if args.out == "-":
        count = write_events(sys.stdout, iter_event_records(spec))
    else:
        with open(args.out, "w") as fp:
            count = write_events(fp, iter_event_records(spec))
        print(f"{count} events -> {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
