"""``witness``: search the preset IC family for initial data realising its verdict."""

from __future__ import annotations

import argparse
import json

from app.commands.common import parse_number, parse_number_list
from app.services.scenarios import get_preset, search_witness_ic

NO_WITNESS = 1


def register(subparsers) -> None:
    parser = subparsers.add_parser("witness", help="search ICs that realise a preset's expected verdict")
    parser.add_argument("preset")
    parser.add_argument("--amplitudes", type=parse_number_list, default=[0.1, 0.3, 0.5, 0.7, 0.9],
                        help="amplitudes tried for u's bump")
    parser.add_argument("--offsets", type=parse_number_list, default=[0.0, -0.1, 0.1],
                        help="shifts tried for u's bump centre")
    parser.add_argument("--t-end", type=parse_number, default=None)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    preset = get_preset(args.preset)
    if args.t_end is not None:
        preset = preset.model_copy(update={"t_end": args.t_end})
    witness = search_witness_ic(preset, args.amplitudes, args.offsets)
    if witness is None:
        print(f"No IC in the grid realises {preset.expected_verdict.value} for {preset.name}")
        return NO_WITNESS
    print(json.dumps({
        "preset": preset.name,
        "t_end": preset.t_end,
        "verdict": witness.outcome.verdict.value,
        "ic_u_amplitude": witness.ic_u.amplitude,
        "ic_u_center": witness.ic_u.center,
    }, indent=2))
    return 0
