"""Command-line entry point: ``ugrwo run|summarize|dataset-info|resample``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from . import data, runner
from .graph import mutual_adjacency
from .sampling import METHODS, SamplerConfig, resample

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2

log = logging.getLogger("ugrwo")


def _csv_list(value: str) -> list[str]:
    return [v for v in (p.strip() for p in value.split(",")) if v]


def cmd_run(args) -> int:
    overrides = {
        "seed": args.seed,
        "out": args.out,
        "workers": args.workers,
        "folds": args.folds,
        "methods": args.methods,
        "rates": args.rates,
        "ks": args.ks,
        "classifiers": args.classifiers,
    }
    try:
        settings = runner.load_config(args.config, overrides)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    grid = settings.grid
    log.info(
        "running %d jobs (%d datasets) with %d worker(s)",
        len(runner.jobs_for(grid)), len(grid.datasets), settings.workers,
    )
    records = runner.run_grid(grid, workers=settings.workers)
    runner.write_outputs(records, settings.out, grid)
    failed = runner.failed_cells(records)
    for cell in failed:
        log.error("cell failed: %s", "/".join(map(str, cell)))
    print(f"wrote {len(records)} records to {settings.out}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_summarize(args) -> int:
    path = os.path.join(args.input, "records.csv")
    try:
        records = runner.read_records(path)
    except (OSError, KeyError, ValueError) as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    wins = runner.write_tables(records, args.input)
    writer = csv.DictWriter(sys.stdout, fieldnames=runner.wins_header(), lineterminator="\n")
    writer.writeheader()
    writer.writerows(wins)
    return EXIT_PARTIAL if runner.failed_cells(records) else EXIT_OK


def cmd_dataset_info(args) -> int:
    summaries = []
    try:
        for path in args.data:
            ds = data.read_dataset(
                path, args.label_col, args.positive, _csv_list(args.discrete or "")
            )
            summaries.append(data.summarize(ds))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    data.write_summaries(summaries, sys.stdout)
    return EXIT_OK


def cmd_resample(args) -> int:
    try:
        ds = data.read_dataset(
            args.data, args.label_col, args.positive, _csv_list(args.discrete or "")
        )
        config = SamplerConfig(args.method, args.rate, args.k, args.seed)
        result = resample(ds, config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            result.write_csv(fh)
    else:
        result.write_csv(sys.stdout)
    if args.edges:
        for role, mask in (("minority", ds.labels), ("majority", ~ds.labels)):
            g = mutual_adjacency(ds.features[mask], args.k)
            with open(f"{args.edges}.{role}.csv", "w", newline="", encoding="utf-8") as fh:
                g.write_edges(fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ugrwo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.add_argument("--folds", type=int)
    run.add_argument("--methods", type=_csv_list)
    run.add_argument("--rates", type=_csv_list)
    run.add_argument("--ks", type=_csv_list)
    run.add_argument("--classifiers", type=_csv_list)
    run.set_defaults(func=cmd_run)

    summ = sub.add_parser("summarize", help="rebuild tables from records.csv")
    summ.add_argument("--in", dest="input", required=True)
    summ.set_defaults(func=cmd_summarize)

    info = sub.add_parser("dataset-info", help="print dataset characteristics")
    info.add_argument("--data", required=True, nargs="+")
    info.add_argument("--label-col", required=True)
    info.add_argument("--positive", required=True)
    info.add_argument("--discrete", help="comma-separated discrete columns")
    info.set_defaults(func=cmd_dataset_info)

    res = sub.add_parser("resample", help="resample one file and dump it with provenance")
    res.add_argument("--data", required=True)
    res.add_argument("--label-col", required=True)
    res.add_argument("--positive", required=True)
    res.add_argument("--discrete")
    res.add_argument("--method", choices=METHODS, default="UGRWO")
    res.add_argument("--rate", type=int, default=100)
    res.add_argument("--k", type=int, default=5)
    res.add_argument("--seed", type=int, default=0)
    res.add_argument("--out")
    res.add_argument("--edges", help="prefix for minority/majority edge-list CSVs")
    res.set_defaults(func=cmd_resample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s:%(name)s:%(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
