"""``verify``: cross-check the solver against the reference oracles."""

from __future__ import annotations

import argparse

from app.commands.common import add_scenario_arguments, output_dir
from app.services import artifacts
from app.services.config_document import resolve_scenario
from app.services.runner import verify_scenario

VERIFICATION_FAILED = 4


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="run the oracle and audit checks")
    add_scenario_arguments(parser)
    parser.add_argument("--force", action="store_true",
                        help="allow grids larger than the verification limit")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    scenario_id, bundle = resolve_scenario(args.scenario, args.overrides, args.t_end, args.snapshots)
    report = verify_scenario(scenario_id, bundle, force=args.force)

    out = output_dir(args.out, scenario_id)
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_json(out / "verification.json", report.model_dump(mode="json"))

    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: {check.detail}")
    return 0 if report.passed else VERIFICATION_FAILED
