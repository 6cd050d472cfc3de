"""``sweep``: one run per value of a config key, summarised in summary.csv."""

from __future__ import annotations

import argparse

from app.commands.common import (
    add_plot_size_argument,
    add_scenario_arguments,
    output_dir,
    parse_number_list,
)
from app.services.runner import run_sweep


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="sweep one config key over a list of values")
    add_scenario_arguments(parser)
    add_plot_size_argument(parser)
    parser.add_argument("--axis", required=True, help="config key to vary, e.g. p_v")
    parser.add_argument("--values", required=True,
                        help="comma-separated values, fractions allowed, e.g. 2,7/4,7/5")
    parser.add_argument("--jobs", type=int, default=1, help="parallel runs")
    parser.add_argument("--overwrite", action="store_true",
                        help="re-run members that already have a verdict record")
    parser.add_argument("--lq", type=parse_number_list, default=[])
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    rows = run_sweep(
        args.scenario,
        args.axis,
        values,
        output_dir(args.out, f"sweep_{args.axis}"),
        jobs=max(1, args.jobs),
        overrides=args.overrides,
        t_end=args.t_end,
        snapshots=args.snapshots,
        overwrite=args.overwrite,
        lebesgue_qs=args.lq,
        plot_size=args.plot_size,
    )
    for row in rows:
        result = row.error or (row.verdict.value if row.verdict else "")
        print(f"{args.axis}={row.axis_value}: {result}")
    return 0
