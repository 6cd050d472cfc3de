"""``plot``: render snapshot files as profile images, plus norm histories."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Optional

from app.commands.common import add_plot_size_argument
from app.models.errors import ConfigError
from app.models.schemas import ModelConfig
from app.services import artifacts
from app.services.config_document import load_config
from app.services.plotting import render_norms_png, render_panels_png, render_profile_png
from app.services.summary import profile_title

logger = logging.getLogger(__name__)

NORM_COLUMNS = ("u_l2", "v_l2", "u_sup", "v_sup")


def register(subparsers) -> None:
    parser = subparsers.add_parser("plot", help="plot snapshot CSV files")
    parser.add_argument("snapshots", nargs="*", type=Path, help="snapshot_t*.csv files")
    parser.add_argument("--out", type=Path, default=None,
                        help="directory for the images (default: next to each snapshot)")
    add_plot_size_argument(parser)
    parser.set_defaults(handler=handle)


def _run_config(run_dir: Path, cache: dict[Path, Optional[ModelConfig]]) -> Optional[ModelConfig]:
    """The model config written next to the snapshots, if there is a readable one."""
    if run_dir not in cache:
        cache[run_dir] = None
        path = run_dir / "config.json"
        if path.is_file():
            try:
                cache[run_dir] = load_config(path).model
            except ConfigError as e:
                logger.warning("ignoring %s for titles: %s", path, e)
    return cache[run_dir]


def _title(path: Path, t, cfg: Optional[ModelConfig]) -> str:
    label = path.parent.name or path.stem
    if t is None:
        return path.stem
    if cfg is None:
        return f"{label}: t = {t:g}"
    return profile_title(label, cfg, t)


def _norms_plot(run_dir: Path, out: Optional[Path], size: tuple[int, int]) -> Optional[Path]:
    source = run_dir / "norms.csv"
    if not source.is_file():
        return None
    rows = artifacts.read_norms_csv(source)
    if not rows:
        return None
    series = {name: [row[name] for row in rows] for name in NORM_COLUMNS if name in rows[0]}
    label = run_dir.name or "run"
    target = run_dir / "norms.png" if out is None else out / f"{label}_norms.png"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(render_norms_png([row["t"] for row in rows], series, f"{label}: norms", size))
    return target


def handle(args: argparse.Namespace) -> int:
    if not args.snapshots:
        return 0

    configs: dict[Path, Optional[ModelConfig]] = {}
    loaded = [(path, *artifacts.read_snapshot(path)) for path in args.snapshots]
    panels = []
    for path, t, x, u, v in loaded:
        target = (args.out or path.parent) / f"{path.stem}.png"
        target.parent.mkdir(parents=True, exist_ok=True)
        title = _title(path, t, _run_config(path.parent, configs))
        target.write_bytes(render_profile_png(x, u, v, title, args.plot_size))
        panels.append((x, u, v, title))
        print(target)

    if len(panels) > 1:
        target = (args.out or loaded[0][0].parent) / "panels.png"
        target.write_bytes(render_panels_png(panels, args.plot_size))
        print(target)

    for run_dir in dict.fromkeys(path.parent for path, *_ in loaded):
        target = _norms_plot(run_dir, args.out, args.plot_size)
        if target is not None:
            print(target)
    return 0
