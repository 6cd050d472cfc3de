"""``run``: integrate one preset or config document and write its artifacts."""

from __future__ import annotations

import argparse

from app.commands.common import (
    add_plot_size_argument,
    add_scenario_arguments,
    output_dir,
    parse_number_list,
)
from app.services.config_document import resolve_scenario
from app.services.runner import run_scenario
from app.services.summary import describe_outcome


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="run a preset or config file")
    add_scenario_arguments(parser)
    add_plot_size_argument(parser)
    parser.add_argument("--lq", type=parse_number_list, default=[],
                        help="extra L^q norms of v for norms.csv, e.g. 4,8,16")
    parser.add_argument("--stop-at-steady", action="store_true",
                        help="stop as soon as the state is steady")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    scenario_id, bundle = resolve_scenario(args.scenario, args.overrides, args.t_end, args.snapshots)
    manifest, outcome = run_scenario(
        scenario_id,
        bundle,
        output_dir(args.out, scenario_id),
        lebesgue_qs=args.lq,
        plot_size=args.plot_size,
        stop_at_steady=args.stop_at_steady,
    )
    print(describe_outcome(scenario_id, bundle.model, outcome, manifest.steps))
    print(f"Artifacts in {manifest.output_dir}")
    return 0
