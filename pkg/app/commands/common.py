"""Argument helpers shared by the subcommands."""

from __future__ import annotations

import argparse
import math
from fractions import Fraction
from pathlib import Path
from typing import Optional

from app.config import settings


def parse_number(text: str) -> float:
    """Float, fraction like 7/4, or inf."""
    text = text.strip()
    if text.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_number_list(text: str) -> list[float]:
    return [parse_number(part) for part in text.split(",") if part.strip()]


def parse_size(text: str) -> tuple[int, int]:
    width, sep, height = text.lower().partition("x")
    try:
        size = (int(width), int(height))
    except ValueError:
        size = (0, 0)
    if not sep or size[0] <= 0 or size[1] <= 0:
        raise argparse.ArgumentTypeError(f"size must look like 900x600, got {text!r}")
    return size


def add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", help="preset name or path to a JSON config document")
    parser.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default {settings.output_dir}/<scenario>)")
    parser.add_argument("--t-end", type=parse_number, default=None)
    parser.add_argument("--snapshots", type=parse_number_list, default=None,
                        help="comma-separated snapshot times, e.g. 0,10,90")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key (repeatable)")


def add_plot_size_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--plot-size", type=parse_size,
                        default=(settings.plot_width, settings.plot_height),
                        help="plot raster size in pixels, WxH")


def output_dir(out: Optional[Path], scenario_id: str) -> Path:
    return out if out is not None else Path(settings.output_dir) / scenario_id
