"""``presets``: list the registered figure presets."""

from __future__ import annotations

import argparse

from app.services.scenarios import preset_registry


def register(subparsers) -> None:
    parser = subparsers.add_parser("presets", help="list registered presets")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    for preset in preset_registry():
        cfg = preset.cfg
        print(
            f"{preset.name:<15} expect {preset.expected_verdict.value:<9} t_end={preset.t_end:g}  "
            f"p_u={cfg.disp_u.p:g} k_u={cfg.disp_u.k:g} p_v={cfg.disp_v.p:g} k_v={cfg.disp_v.k:g}  "
            f"{preset.description}"
        )
    return 0
